#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mecsim/engine.hpp"

namespace mecsim {

struct Position {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline double distance(const Position& a, const Position& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct StationaryMobility {};

struct LinearMobility {
    double vx = 0.0, vy = 0.0, vz = 0.0;  // m/s
};

// Piecewise-linear path through the waypoints at constant speed; the UE
// halts at the final waypoint.
struct WaypointMobility {
    std::vector<Position> waypoints;
    double speed = 0.0;  // m/s
};

// Sampled trajectory; positions are interpolated linearly between records
// and held beyond the ends.
struct TraceMobility {
    std::vector<std::pair<double, Position>> points;  // (seconds, position), sorted
};

using MobilityModel =
    std::variant<StationaryMobility, LinearMobility, WaypointMobility, TraceMobility>;

enum class Direction { downlink, uplink };

struct DelayDist {
    enum class Kind { constant, uniform, exponential, empirical };
    Kind kind = Kind::constant;
    double a = 0.0;                  // constant value, uniform lo, or exponential mean
    double b = 0.0;                  // uniform hi
    std::vector<double> samples;     // empirical trace, cycled

    double sample(RngStream& rng, std::size_t& cursor) const;
};

struct TransportProfile {
    DelayDist dl;
    DelayDist ul;
    double loss_prob = 0.0;
};

struct L2Sample {
    SimTime timestamp;
    std::string ue_id;  // empty for cell-aggregate samples
    double dl_delay_ms = 0.0;
    double ul_delay_ms = 0.0;
    double dl_throughput_bps = 0.0;
    double ul_throughput_bps = 0.0;
    double active_ue_dl = 0.0;
    double active_ue_ul = 0.0;
    double data_volume_dl = 0.0;
    double data_volume_ul = 0.0;

    // Named access used by the RNIS; throws on unknown names.
    double measure(const std::string& name) const;
};

struct Aggregator {
    enum class Kind { average, moving_average, last_sample };
    Kind kind = Kind::average;
    double window_s = 0.0;  // moving_average only
};

struct HandoverEvent {
    std::string ue_id;
    std::optional<int> from_cell;
    int to_cell = 0;
    SimTime at;
};

// Abstract radio access network: UE positions and mobility, proximity-based
// cell association, per-UE transport latency for app-plane traffic, and the
// Layer-2 sample store behind the RNIS. No PHY model: association is
// nearest-cell with lowest-id tie-break.
class Ran {
public:
    explicit Ran(Engine& engine, std::size_t l2_capacity = 1024)
        : engine_(engine), l2_capacity_(l2_capacity) {}

    void add_cell(int cell_id, Position pos);
    void add_ue(const std::string& ue_id, Position pos, MobilityModel mobility,
                TransportProfile transport);

    bool has_ue(const std::string& ue_id) const { return ues_.count(ue_id) > 0; }
    bool has_cell(int cell_id) const { return cells_.count(cell_id) > 0; }
    Position position(const std::string& ue_id) const;
    std::optional<int> serving_cell(const std::string& ue_id) const;
    std::vector<std::string> ues_in_cell(int cell_id) const;
    std::vector<std::string> ue_ids() const;
    std::vector<int> cell_ids() const;
    Position cell_position(int cell_id) const;

    // Advances every UE along its mobility model and re-runs association.
    // Returns the new positions.
    std::vector<std::pair<std::string, Position>> advance_mobility(double dt_s);
    // Same, without materializing the position list (periodic tick path).
    void advance_mobility_in_place(double dt_s);

    // Nearest-cell association; fires a handover event when the serving cell
    // changes.
    int associate(const std::string& ue_id);

    // Samples the UE's transport profile; nullopt means the message is lost.
    std::optional<double> transport_delay(const std::string& ue_id, Direction dir,
                                          std::size_t payload_bytes);

    // Full transport of one app-plane message: samples delay and loss,
    // records an L2 sample on the serving cell and schedules the delivery.
    // Returns false when the message is lost.
    bool send(const std::string& ue_id, Direction dir, std::size_t payload_bytes,
              std::function<void()> on_deliver);

    void record_l2(int cell_id, const L2Sample& sample);
    double query_l2(int cell_id, const std::optional<std::string>& ue_id,
                    const std::string& measure, const Aggregator& agg) const;

    // Periodic mobility updates; listeners run after each update in
    // registration order (the Location Service evaluates subscriptions here).
    void start_updates(double period_s);
    double update_period_s() const { return update_period_s_; }
    void on_mobility_update(std::function<void()> fn) { tick_listeners_.push_back(std::move(fn)); }
    void on_handover(std::function<void(const HandoverEvent&)> fn) {
        handover_listeners_.push_back(std::move(fn));
    }
    std::uint64_t handover_count(const std::string& ue_id) const;

    static std::map<std::string, TraceMobility> load_trace_file(const std::string& path);

private:
    struct UeRec {
        Position origin;       // position at creation; mobility models anchor here
        Position pos;          // current position
        double elapsed_s = 0;  // accumulated mobility time since creation
        MobilityModel mobility;
        TransportProfile transport;
        std::optional<int> serving_cell;
        std::size_t dl_cursor = 0, ul_cursor = 0;
        int inflight_dl = 0, inflight_ul = 0;
        std::uint64_t handovers = 0;
    };

    struct CellRec {
        Position pos;
        std::deque<L2Sample> l2_history;
    };

    Position position_at(const UeRec& ue, double t_s) const;
    int nearest_cell(const Position& pos) const;
    void tick();

    Engine& engine_;
    std::size_t l2_capacity_;
    double update_period_s_ = 0.1;
    std::map<std::string, UeRec> ues_;
    std::map<int, CellRec> cells_;
    std::vector<std::function<void()>> tick_listeners_;
    std::vector<std::function<void(const HandoverEvent&)>> handover_listeners_;
};

} // namespace mecsim
