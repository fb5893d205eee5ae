#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <queue>
#include <unordered_map>
#include <vector>

#include "mecsim/errors.hpp"
#include "mecsim/rng.hpp"
#include "mecsim/time.hpp"

namespace mecsim {

struct RealtimeReport {
    std::uint64_t dispatched = 0;
    std::uint64_t overruns = 0;     // events whose dispatch lagged past the threshold
    double max_lag_s = 0.0;
    double wall_elapsed_s = 0.0;
};

// Deterministic discrete-event kernel. Equal-time events fire in insertion
// order. Handlers always run on the loop thread; in real-time mode external
// threads may inject work through post(), which becomes an event stamped
// with the wall-clock arrival mapped onto simulated time.
class Engine {
public:
    using Handler = std::function<void()>;
    using EventHandle = std::uint64_t;

    explicit Engine(std::uint64_t seed) : rngs_(seed) {}

    SimTime now() const { return clock_; }
    std::uint64_t seed() const { return rngs_.seed(); }

    EventHandle schedule_at(SimTime at, Handler fn);
    EventHandle schedule_in(double delay_s, Handler fn) {
        return schedule_at(clock_ + SimTime::from_seconds(delay_s), std::move(fn));
    }

    // True if the event existed and had not fired yet.
    bool cancel(EventHandle h);

    // Dispatches every event with fire time <= t_end, then sets the clock to
    // t_end. Returns the number of events dispatched by this call.
    std::uint64_t run_until(SimTime t_end);

    // Paces the event loop against the wall clock: an event at simulated time
    // t fires no earlier than wall_start + t/pace. pace 1.0 is real time.
    RealtimeReport run_realtime(SimTime t_end, double pace,
                                double overrun_threshold_s = 0.1);

    // Thread-safe; only valid while run_realtime is active. The handler is
    // turned into an event at (wall arrival - wall start) * pace, clamped to
    // the current clock.
    void post(Handler fn);

    void request_stop();

    bool realtime_active() const { return realtime_active_.load(); }
    double current_lag_s() const { return current_lag_s_.load(); }
    std::uint64_t dispatched() const { return dispatched_; }

    RngStream& rng(std::string_view name) { return rngs_.stream(name); }

private:
    struct QueuedEvent {
        SimTime at;
        EventHandle seq;
        bool operator>(const QueuedEvent& rhs) const {
            return at != rhs.at ? at > rhs.at : seq > rhs.seq;
        }
    };

    struct IngressItem {
        std::chrono::steady_clock::time_point wall_received;
        Handler fn;
    };

    bool pop_due(SimTime limit, SimTime& at, Handler& fn);
    void drain_ingress_locked(std::chrono::steady_clock::time_point wall_start,
                              double pace);

    SimTime clock_{};
    EventHandle next_seq_ = 0;
    std::uint64_t dispatched_ = 0;
    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue_;
    std::unordered_map<EventHandle, Handler> handlers_;
    RngRegistry rngs_;

    std::mutex ingress_mutex_;
    std::condition_variable ingress_cv_;
    std::deque<IngressItem> ingress_;
    bool stop_requested_ = false;
    std::atomic<bool> realtime_active_{false};
    std::atomic<double> current_lag_s_{0.0};
};

} // namespace mecsim
