#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mecsim/engine.hpp"

namespace mecsim {

// Service time drawn per job when it enters service. The default
// exponential(1/mean) makes the service an M/M/1 server, which is what the
// background generator requires.
struct ServiceTimeModel {
    enum class Dist { exponential, constant };
    double mean_s = 0.0;
    Dist dist = Dist::exponential;
    std::function<double(RngStream&)> hook;  // overrides dist when set

    double mu() const { return 1.0 / mean_s; }
};

// M/M/1 view of the service used by the background-load generator.
// Stability requires lambda_f + lambda_b < mu.
struct BackgroundModel {
    double lambda_f = 0.0;  // foreground arrival rate, configured
    double lambda_b = 0.0;  // modeled background arrival rate
    double mu = 0.0;        // service rate

    double rho() const { return (lambda_f + lambda_b) / mu; }

    // Runtime state of the foreground-departure chain.
    std::uint64_t fg_in_system = 0;
    SimTime last_fg_arrival{};
    SimTime last_fg_departure{};
};

struct ServiceJob {
    std::uint64_t id = 0;
    SimTime arrival{};
    bool is_notification = false;
    bool is_foreground = true;
    std::string kind;  // method+resource tag, for stats
    std::function<void(SimTime departure)> on_complete;
};

// Queueing core of one MEC service. Two mutually exclusive modes:
//
// - explicit: a single server drains a FIFO request queue and a notification
//   queue; the notification queue takes precedence whenever both are
//   non-empty.
//
// - generator: background load is never materialized. Each submitted job is
//   a foreground item whose departure is computed on arrival: with no other
//   foreground job in the system, the backlog n* seen on arrival is drawn
//   from the geometric occupancy law P(n) = r^n (1 - r) with r = lambda_b/mu
//   (the law conditioned on an empty foreground system) and the departure is
//   arrival plus an (n*+1)-stage Erlang(mu); otherwise n* is the
//   Poisson(lambda_b * dt) count of background arrivals since the previous
//   foreground arrival and the departure chains that many stages after the
//   previous foreground departure. Only foreground jobs are ever stored, so
//   cost is independent of lambda_b.
class ServiceQueue {
public:
    ServiceQueue(Engine& engine, std::string name, ServiceTimeModel model,
                 std::optional<std::size_t> capacity = std::nullopt);

    const std::string& name() const { return name_; }
    double mu() const { return model_.mu(); }

    void enable_background_generator(double lambda_f, double lambda_b);
    bool generator_mode() const { return background_.has_value(); }
    const BackgroundModel* background() const {
        return background_ ? &*background_ : nullptr;
    }

    // Queues the job (explicit mode) or schedules its departure (generator
    // mode). on_complete fires at the departure instant.
    void submit(ServiceJob job);

    double sample_service_time();

    // Generator-mode primitives, also exercised directly by tests.
    std::uint64_t sample_backlog_at_arrival();
    std::uint64_t sample_bg_arrivals(SimTime t0, SimTime t1);
    SimTime schedule_fg_departure(SimTime arrival);

    // Spawns `count` independent Poisson sources of rate each_lambda that
    // submit non-foreground jobs built by make_job; the brute-force
    // counterpart of the generator.
    void explicit_background_population(
        std::size_t count, double each_lambda,
        std::function<ServiceJob(std::size_t)> make_job);

    // Jobs currently resident (queued or in service / in flight).
    std::size_t resident_jobs() const;
    std::size_t queued_requests() const { return request_q_.size(); }
    std::size_t queued_notifications() const { return notification_q_.size(); }

    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    struct BgSource {
        double rate = 0.0;
        std::function<ServiceJob(std::size_t)> make_job;
        RngStream* rng = nullptr;
    };

    void start_next();
    void schedule_bg_arrival(std::size_t source_idx);

    Engine& engine_;
    std::string name_;
    ServiceTimeModel model_;
    std::optional<std::size_t> capacity_;
    std::optional<BackgroundModel> background_;

    std::deque<ServiceJob> request_q_;
    std::deque<ServiceJob> notification_q_;
    std::deque<BgSource> bg_sources_;
    bool busy_ = false;
    std::uint64_t next_job_id_ = 0;
    std::vector<std::string> warnings_;
};

} // namespace mecsim
