#include "mecsim/ran.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mecsim {

double DelayDist::sample(RngStream& rng, std::size_t& cursor) const {
    switch (kind) {
        case Kind::constant: return a;
        case Kind::uniform: return rng.uniform(a, b);
        case Kind::exponential: return rng.exponential(1.0 / a);
        case Kind::empirical: {
            if (samples.empty()) return 0.0;
            const double v = samples[cursor % samples.size()];
            ++cursor;
            return v;
        }
    }
    return 0.0;
}

double L2Sample::measure(const std::string& name) const {
    if (name == "dl_delay") return dl_delay_ms;
    if (name == "ul_delay") return ul_delay_ms;
    if (name == "dl_throughput") return dl_throughput_bps;
    if (name == "ul_throughput") return ul_throughput_bps;
    if (name == "active_ue_dl") return active_ue_dl;
    if (name == "active_ue_ul") return active_ue_ul;
    if (name == "data_volume_dl") return data_volume_dl;
    if (name == "data_volume_ul") return data_volume_ul;
    throw make_error(ErrorCode::validation_error, "unknown L2 measure " + name);
}

void Ran::add_cell(int cell_id, Position pos) {
    cells_[cell_id] = CellRec{pos, {}};
}

void Ran::add_ue(const std::string& ue_id, Position pos, MobilityModel mobility,
                 TransportProfile transport) {
    UeRec rec;
    rec.origin = pos;
    rec.pos = pos;
    rec.mobility = std::move(mobility);
    rec.transport = std::move(transport);
    ues_[ue_id] = std::move(rec);
    if (!cells_.empty()) associate(ue_id);
}

Position Ran::position(const std::string& ue_id) const {
    auto it = ues_.find(ue_id);
    if (it == ues_.end()) throw make_error(ErrorCode::unknown_ue, ue_id);
    return it->second.pos;
}

std::optional<int> Ran::serving_cell(const std::string& ue_id) const {
    auto it = ues_.find(ue_id);
    if (it == ues_.end()) throw make_error(ErrorCode::unknown_ue, ue_id);
    return it->second.serving_cell;
}

std::vector<std::string> Ran::ues_in_cell(int cell_id) const {
    if (!cells_.count(cell_id)) throw make_error(ErrorCode::unknown_cell, std::to_string(cell_id));
    std::vector<std::string> out;
    for (const auto& [id, ue] : ues_) {
        if (ue.serving_cell && *ue.serving_cell == cell_id) out.push_back(id);
    }
    return out;
}

std::vector<std::string> Ran::ue_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, ue] : ues_) out.push_back(id);
    return out;
}

std::vector<int> Ran::cell_ids() const {
    std::vector<int> out;
    for (const auto& [id, cell] : cells_) out.push_back(id);
    return out;
}

Position Ran::cell_position(int cell_id) const {
    auto it = cells_.find(cell_id);
    if (it == cells_.end()) throw make_error(ErrorCode::unknown_cell, std::to_string(cell_id));
    return it->second.pos;
}

// Position along the mobility model after t_s seconds of model time.
Position Ran::position_at(const UeRec& ue, double t_s) const {
    struct Visitor {
        const UeRec& ue;
        double t;

        Position operator()(const StationaryMobility&) const { return ue.origin; }

        Position operator()(const LinearMobility& m) const {
            return Position{ue.origin.x + m.vx * t, ue.origin.y + m.vy * t,
                            ue.origin.z + m.vz * t};
        }

        Position operator()(const WaypointMobility& m) const {
            Position cur = ue.origin;
            if (m.speed <= 0.0 || m.waypoints.empty()) return cur;
            double budget = m.speed * t;
            for (const Position& next : m.waypoints) {
                const double leg = distance(cur, next);
                if (leg <= budget) {
                    budget -= leg;
                    cur = next;
                    continue;
                }
                const double f = leg > 0.0 ? budget / leg : 0.0;
                return Position{cur.x + (next.x - cur.x) * f, cur.y + (next.y - cur.y) * f,
                                cur.z + (next.z - cur.z) * f};
            }
            return cur;  // reached the final waypoint, halt
        }

        Position operator()(const TraceMobility& m) const {
            if (m.points.empty()) return ue.origin;
            if (t <= m.points.front().first) return m.points.front().second;
            if (t >= m.points.back().first) return m.points.back().second;
            auto hi = std::upper_bound(
                m.points.begin(), m.points.end(), t,
                [](double v, const auto& p) { return v < p.first; });
            auto lo = hi - 1;
            const double span = hi->first - lo->first;
            const double f = span > 0.0 ? (t - lo->first) / span : 0.0;
            const Position &a = lo->second, &b = hi->second;
            return Position{a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f,
                            a.z + (b.z - a.z) * f};
        }
    };
    return std::visit(Visitor{ue, t_s}, ue.mobility);
}

void Ran::advance_mobility_in_place(double dt_s) {
    for (auto& [id, ue] : ues_) {
        ue.elapsed_s += dt_s;
        ue.pos = position_at(ue, ue.elapsed_s);
    }
    if (!cells_.empty()) {
        for (auto& [id, ue] : ues_) associate(id);
    }
}

std::vector<std::pair<std::string, Position>> Ran::advance_mobility(double dt_s) {
    advance_mobility_in_place(dt_s);
    std::vector<std::pair<std::string, Position>> updated;
    updated.reserve(ues_.size());
    for (const auto& [id, ue] : ues_) updated.emplace_back(id, ue.pos);
    return updated;
}

int Ran::nearest_cell(const Position& pos) const {
    int best = 0;
    double best_d = 0.0;
    bool first = true;
    for (const auto& [id, cell] : cells_) {
        const double d = distance(pos, cell.pos);
        if (first || d < best_d) {  // map order gives lowest-id tie-break
            best = id;
            best_d = d;
            first = false;
        }
    }
    return best;
}

int Ran::associate(const std::string& ue_id) {
    auto it = ues_.find(ue_id);
    if (it == ues_.end()) throw make_error(ErrorCode::unknown_ue, ue_id);
    if (cells_.empty()) throw make_error(ErrorCode::unknown_cell, "no cells configured");
    UeRec& ue = it->second;
    const int target = nearest_cell(ue.pos);
    if (!ue.serving_cell || *ue.serving_cell != target) {
        HandoverEvent ev{ue_id, ue.serving_cell, target, engine_.now()};
        ue.serving_cell = target;
        ++ue.handovers;
        if (ev.from_cell) {  // initial attach is not a handover
            for (const auto& fn : handover_listeners_) fn(ev);
        }
    }
    return target;
}

std::optional<double> Ran::transport_delay(const std::string& ue_id, Direction dir,
                                           std::size_t payload_bytes) {
    (void)payload_bytes;
    auto it = ues_.find(ue_id);
    if (it == ues_.end()) throw make_error(ErrorCode::unknown_ue, ue_id);
    UeRec& ue = it->second;
    if (!ue.serving_cell) throw make_error(ErrorCode::ue_not_associated, ue_id);
    RngStream& rng = engine_.rng("transport:" + ue_id);
    if (ue.transport.loss_prob > 0.0 && rng.uniform01() <= ue.transport.loss_prob) {
        return std::nullopt;
    }
    if (dir == Direction::downlink) {
        return ue.transport.dl.sample(rng, ue.dl_cursor);
    }
    return ue.transport.ul.sample(rng, ue.ul_cursor);
}

bool Ran::send(const std::string& ue_id, Direction dir, std::size_t payload_bytes,
               std::function<void()> on_deliver) {
    const std::optional<double> delay = transport_delay(ue_id, dir, payload_bytes);
    if (!delay) return false;  // lost: datagram semantics, the app sees a timeout

    UeRec& ue = ues_.at(ue_id);
    const int cell_id = *ue.serving_cell;
    (dir == Direction::downlink ? ue.inflight_dl : ue.inflight_ul) += 1;

    L2Sample sample;
    sample.timestamp = engine_.now();
    sample.ue_id = ue_id;
    const double bits = static_cast<double>(payload_bytes) * 8.0;
    if (dir == Direction::downlink) {
        sample.dl_delay_ms = *delay * 1e3;
        sample.dl_throughput_bps = *delay > 0.0 ? bits / *delay : 0.0;
        sample.data_volume_dl = static_cast<double>(payload_bytes);
    } else {
        sample.ul_delay_ms = *delay * 1e3;
        sample.ul_throughput_bps = *delay > 0.0 ? bits / *delay : 0.0;
        sample.data_volume_ul = static_cast<double>(payload_bytes);
    }
    for (const auto& [id, other] : ues_) {
        if (other.serving_cell && *other.serving_cell == cell_id) {
            if (other.inflight_dl > 0) sample.active_ue_dl += 1.0;
            if (other.inflight_ul > 0) sample.active_ue_ul += 1.0;
        }
    }
    record_l2(cell_id, sample);

    engine_.schedule_in(*delay, [this, ue_id, dir, fn = std::move(on_deliver)]() {
        auto it = ues_.find(ue_id);
        if (it != ues_.end()) {
            (dir == Direction::downlink ? it->second.inflight_dl : it->second.inflight_ul) -= 1;
        }
        if (fn) fn();
    });
    return true;
}

void Ran::record_l2(int cell_id, const L2Sample& sample) {
    auto it = cells_.find(cell_id);
    if (it == cells_.end()) throw make_error(ErrorCode::unknown_cell, std::to_string(cell_id));
    auto& history = it->second.l2_history;
    if (history.size() >= l2_capacity_) history.pop_front();
    history.push_back(sample);
}

double Ran::query_l2(int cell_id, const std::optional<std::string>& ue_id,
                     const std::string& measure, const Aggregator& agg) const {
    auto it = cells_.find(cell_id);
    if (it == cells_.end()) throw make_error(ErrorCode::unknown_cell, std::to_string(cell_id));

    std::vector<const L2Sample*> samples;
    for (const L2Sample& s : it->second.l2_history) {
        if (ue_id && s.ue_id != *ue_id) continue;
        samples.push_back(&s);
    }
    if (samples.empty()) throw make_error(ErrorCode::empty_history, measure);

    switch (agg.kind) {
        case Aggregator::Kind::last_sample:
            return samples.back()->measure(measure);
        case Aggregator::Kind::average: {
            double sum = 0.0;
            for (const L2Sample* s : samples) sum += s->measure(measure);
            return sum / static_cast<double>(samples.size());
        }
        case Aggregator::Kind::moving_average: {
            const SimTime cutoff = engine_.now() - SimTime::from_seconds(agg.window_s);
            double sum = 0.0;
            std::size_t n = 0;
            for (const L2Sample* s : samples) {
                if (s->timestamp >= cutoff) {
                    sum += s->measure(measure);
                    ++n;
                }
            }
            if (n == 0) throw make_error(ErrorCode::empty_history, "window has no samples");
            return sum / static_cast<double>(n);
        }
    }
    throw make_error(ErrorCode::validation_error, "bad aggregator");
}

void Ran::start_updates(double period_s) {
    update_period_s_ = period_s;
    engine_.schedule_in(period_s, [this]() { tick(); });
}

void Ran::tick() {
    advance_mobility_in_place(update_period_s_);
    for (const auto& fn : tick_listeners_) fn();
    engine_.schedule_in(update_period_s_, [this]() { tick(); });
}

std::uint64_t Ran::handover_count(const std::string& ue_id) const {
    auto it = ues_.find(ue_id);
    if (it == ues_.end()) throw make_error(ErrorCode::unknown_ue, ue_id);
    // The initial attach is counted internally; handovers exclude it.
    return it->second.handovers > 0 ? it->second.handovers - 1 : 0;
}

std::map<std::string, TraceMobility> Ran::load_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw make_error(ErrorCode::parse_error, "cannot open trace " + path);
    std::map<std::string, TraceMobility> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        double t, x, y, z;
        std::string ue;
        if (!(ss >> t >> ue >> x >> y >> z)) {
            throw make_error(ErrorCode::parse_error,
                             path + ":" + std::to_string(lineno) + ": expected `time ue x y z`");
        }
        out[ue].points.emplace_back(t, Position{x, y, z});
    }
    for (auto& [ue, trace] : out) {
        std::sort(trace.points.begin(), trace.points.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    return out;
}

} // namespace mecsim
