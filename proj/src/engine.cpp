#include "mecsim/engine.hpp"

#include <algorithm>

namespace mecsim {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::scheduling_in_past: return "scheduling-in-past";
        case ErrorCode::queue_overflow: return "queue-overflow";
        case ErrorCode::unstable_configuration: return "unstable-configuration";
        case ErrorCode::unknown_app: return "unknown-app";
        case ErrorCode::unknown_context: return "unknown-context";
        case ErrorCode::unknown_subscription: return "unknown-subscription";
        case ErrorCode::unknown_ue: return "unknown-ue";
        case ErrorCode::unknown_cell: return "unknown-cell";
        case ErrorCode::unknown_scope: return "unknown-scope";
        case ErrorCode::no_running_instance: return "no-running-instance";
        case ErrorCode::duplicate_app_id: return "duplicate-app-id";
        case ErrorCode::duplicate_registration: return "duplicate-registration";
        case ErrorCode::malformed_descriptor: return "malformed-descriptor";
        case ErrorCode::placement_failed: return "placement-failed";
        case ErrorCode::invalid_radius: return "invalid-radius";
        case ErrorCode::empty_history: return "empty-history";
        case ErrorCode::ue_not_associated: return "ue-not-associated";
        case ErrorCode::mode_error: return "mode-error";
        case ErrorCode::parse_error: return "parse-error";
        case ErrorCode::validation_error: return "validation-error";
    }
    return "unknown-error";
}

Engine::EventHandle Engine::schedule_at(SimTime at, Handler fn) {
    if (at < clock_) {
        throw make_error(ErrorCode::scheduling_in_past,
                         "schedule at t=" + std::to_string(at.seconds()) +
                             " while clock is " + std::to_string(clock_.seconds()));
    }
    const EventHandle seq = next_seq_++;
    queue_.push(QueuedEvent{at, seq});
    handlers_.emplace(seq, std::move(fn));
    return seq;
}

bool Engine::cancel(EventHandle h) {
    return handlers_.erase(h) > 0;
}

// Pops the next live event with fire time <= limit. Cancelled entries are
// discarded as they surface.
bool Engine::pop_due(SimTime limit, SimTime& at, Handler& fn) {
    while (!queue_.empty() && queue_.top().at <= limit) {
        const QueuedEvent ev = queue_.top();
        queue_.pop();
        auto it = handlers_.find(ev.seq);
        if (it == handlers_.end()) continue;  // cancelled
        at = ev.at;
        fn = std::move(it->second);
        handlers_.erase(it);
        return true;
    }
    return false;
}

std::uint64_t Engine::run_until(SimTime t_end) {
    std::uint64_t count = 0;
    SimTime at;
    Handler fn;
    while (pop_due(t_end, at, fn)) {
        clock_ = at;
        try {
            fn();
        } catch (const SimError& e) {
            // errors escaping a handler carry the event time they fired at
            throw SimError(e.code(), "at t=" + std::to_string(clock_.seconds()) +
                                         "s: " + e.what());
        }
        ++count;
        ++dispatched_;
    }
    clock_ = std::max(clock_, t_end);
    return count;
}

void Engine::post(Handler fn) {
    if (!realtime_active_.load()) {
        throw make_error(ErrorCode::mode_error, "ingress requires real-time mode");
    }
    {
        std::lock_guard<std::mutex> lock(ingress_mutex_);
        ingress_.push_back({std::chrono::steady_clock::now(), std::move(fn)});
    }
    ingress_cv_.notify_one();
}

void Engine::request_stop() {
    {
        std::lock_guard<std::mutex> lock(ingress_mutex_);
        stop_requested_ = true;
    }
    ingress_cv_.notify_one();
}

void Engine::drain_ingress_locked(std::chrono::steady_clock::time_point wall_start,
                                  double pace) {
    while (!ingress_.empty()) {
        IngressItem item = std::move(ingress_.front());
        ingress_.pop_front();
        const double elapsed =
            std::chrono::duration<double>(item.wall_received - wall_start).count();
        SimTime mapped = SimTime::from_seconds(std::max(0.0, elapsed) * pace);
        mapped = std::max(mapped, clock_);
        const EventHandle seq = next_seq_++;
        queue_.push(QueuedEvent{mapped, seq});
        handlers_.emplace(seq, std::move(item.fn));
    }
}

RealtimeReport Engine::run_realtime(SimTime t_end, double pace,
                                    double overrun_threshold_s) {
    if (pace <= 0.0) {
        throw make_error(ErrorCode::validation_error, "pace must be positive");
    }
    RealtimeReport report;
    const auto wall_start = std::chrono::steady_clock::now();
    const auto wall_deadline_of = [&](SimTime t) {
        return wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(t.seconds() / pace));
    };

    realtime_active_.store(true);
    current_lag_s_.store(0.0);

    for (;;) {
        {
            std::unique_lock<std::mutex> lock(ingress_mutex_);
            drain_ingress_locked(wall_start, pace);
            if (stop_requested_) break;

            const SimTime next = queue_.empty() ? t_end : std::min(queue_.top().at, t_end);
            const auto deadline = wall_deadline_of(next);
            if (std::chrono::steady_clock::now() < deadline) {
                // Wake early on ingress or stop; otherwise sleep to the deadline.
                ingress_cv_.wait_until(lock, deadline);
                continue;
            }
        }

        SimTime at;
        Handler fn;
        if (!pop_due(t_end, at, fn)) {
            if (std::chrono::steady_clock::now() >= wall_deadline_of(t_end)) break;
            continue;
        }

        clock_ = at;
        const double lag = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - wall_deadline_of(at))
                               .count();
        current_lag_s_.store(std::max(0.0, lag));
        if (lag > overrun_threshold_s) {
            ++report.overruns;
        }
        report.max_lag_s = std::max(report.max_lag_s, lag);
        fn();
        ++report.dispatched;
        ++dispatched_;
    }

    clock_ = std::max(clock_, t_end);
    realtime_active_.store(false);
    {
        std::lock_guard<std::mutex> lock(ingress_mutex_);
        stop_requested_ = false;
    }
    report.wall_elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return report;
}

} // namespace mecsim
