#include "mecsim/service_queue.hpp"

namespace mecsim {

ServiceQueue::ServiceQueue(Engine& engine, std::string name, ServiceTimeModel model,
                           std::optional<std::size_t> capacity)
    : engine_(engine), name_(std::move(name)), model_(std::move(model)),
      capacity_(capacity) {
    if (!(model_.mean_s > 0.0)) {
        throw make_error(ErrorCode::validation_error,
                         "service " + name_ + ": service-time mean must be > 0");
    }
}

void ServiceQueue::enable_background_generator(double lambda_f, double lambda_b) {
    if (!bg_sources_.empty()) {
        throw make_error(ErrorCode::validation_error,
                         "service " + name_ +
                             ": generator and explicit background are mutually exclusive");
    }
    if (model_.dist != ServiceTimeModel::Dist::exponential || model_.hook) {
        throw make_error(ErrorCode::validation_error,
                         "service " + name_ +
                             ": background generator requires exponential service times");
    }
    BackgroundModel bg;
    bg.lambda_f = lambda_f;
    bg.lambda_b = lambda_b;
    bg.mu = model_.mu();
    if (lambda_f + lambda_b >= bg.mu) {
        throw make_error(ErrorCode::unstable_configuration,
                         "service " + name_ + ": lambda_f + lambda_b >= mu");
    }
    if (lambda_f > lambda_b / 10.0) {
        warnings_.push_back("service " + name_ +
                            ": lambda_f > lambda_b/10, background model accuracy degrades");
    }
    background_ = bg;
}

double ServiceQueue::sample_service_time() {
    RngStream& rng = engine_.rng("svc-time:" + name_);
    if (model_.hook) return model_.hook(rng);
    switch (model_.dist) {
        case ServiceTimeModel::Dist::constant: return model_.mean_s;
        case ServiceTimeModel::Dist::exponential: return rng.exponential(model_.mu());
    }
    return model_.mean_s;
}

std::uint64_t ServiceQueue::sample_backlog_at_arrival() {
    // Backlog found by a foreground arrival when no foreground request is in
    // the system. Conditioning on an empty foreground system leaves only the
    // background share of the occupancy: geometric in lambda_b/mu. With
    // lambda_f << lambda_b this coincides with the unconditioned law.
    const double rho_bg = background_ ? background_->lambda_b / background_->mu : 0.0;
    return engine_.rng("bg-backlog:" + name_).geometric_rho(rho_bg);
}

std::uint64_t ServiceQueue::sample_bg_arrivals(SimTime t0, SimTime t1) {
    const double mean = background_->lambda_b * (t1 - t0).seconds();
    return engine_.rng("bg-arrivals:" + name_).poisson(mean);
}

SimTime ServiceQueue::schedule_fg_departure(SimTime arrival) {
    BackgroundModel& bg = *background_;
    RngStream& erlang_rng = engine_.rng("svc-time:" + name_);
    SimTime departure;
    if (bg.fg_in_system == 0) {
        const std::uint64_t backlog = sample_backlog_at_arrival();
        departure = arrival + SimTime::from_seconds(erlang_rng.erlang(backlog + 1, bg.mu));
    } else {
        const std::uint64_t arrivals = sample_bg_arrivals(bg.last_fg_arrival, arrival);
        departure = bg.last_fg_departure +
                    SimTime::from_seconds(erlang_rng.erlang(arrivals + 1, bg.mu));
    }
    ++bg.fg_in_system;
    bg.last_fg_arrival = arrival;
    bg.last_fg_departure = departure;
    return departure;
}

void ServiceQueue::submit(ServiceJob job) {
    job.id = next_job_id_++;
    job.arrival = engine_.now();

    if (background_) {
        const SimTime departure = schedule_fg_departure(job.arrival);
        engine_.schedule_at(departure, [this, fn = std::move(job.on_complete)]() {
            --background_->fg_in_system;
            if (fn) fn(engine_.now());
        });
        return;
    }

    if (capacity_ && !job.is_notification && request_q_.size() >= *capacity_) {
        throw make_error(ErrorCode::queue_overflow,
                         "service " + name_ + " at capacity " + std::to_string(*capacity_));
    }
    (job.is_notification ? notification_q_ : request_q_).push_back(std::move(job));
    if (!busy_) start_next();
}

void ServiceQueue::start_next() {
    // Notifications take precedence whenever both queues are non-empty.
    std::deque<ServiceJob>& q = !notification_q_.empty() ? notification_q_ : request_q_;
    if (q.empty()) return;
    ServiceJob job = std::move(q.front());
    q.pop_front();
    busy_ = true;
    const double service_time = sample_service_time();
    engine_.schedule_in(service_time, [this, fn = std::move(job.on_complete)]() {
        busy_ = false;
        if (fn) fn(engine_.now());
        if (!busy_) start_next();  // completion handler may have submitted work
    });
}

void ServiceQueue::explicit_background_population(
    std::size_t count, double each_lambda,
    std::function<ServiceJob(std::size_t)> make_job) {
    if (background_) {
        throw make_error(ErrorCode::validation_error,
                         "service " + name_ +
                             ": generator and explicit background are mutually exclusive");
    }
    const std::size_t base = bg_sources_.size();
    for (std::size_t i = 0; i < count; ++i) {
        BgSource src;
        src.rate = each_lambda;
        src.make_job = make_job;
        src.rng = &engine_.rng("bg-explicit-" + std::to_string(base + i) + ":" + name_);
        bg_sources_.push_back(std::move(src));
        schedule_bg_arrival(base + i);
    }
}

void ServiceQueue::schedule_bg_arrival(std::size_t source_idx) {
    BgSource& src = bg_sources_[source_idx];
    engine_.schedule_in(src.rng->exponential(src.rate), [this, source_idx]() {
        BgSource& s = bg_sources_[source_idx];
        ServiceJob job = s.make_job(source_idx);
        job.is_foreground = false;
        submit(std::move(job));
        schedule_bg_arrival(source_idx);
    });
}

std::size_t ServiceQueue::resident_jobs() const {
    if (background_) return background_->fg_in_system;
    return request_q_.size() + notification_q_.size() + (busy_ ? 1 : 0);
}

} // namespace mecsim
