#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace mecsim {

// Simulated time as a 64-bit count of microseconds. Integer ticks keep event
// ordering exact; doubles are only used at the API edges.
class SimTime {
public:
    constexpr SimTime() = default;

    static constexpr SimTime from_micros(std::int64_t us) { return SimTime(us); }

    static SimTime from_seconds(double s) {
        return SimTime(static_cast<std::int64_t>(std::llround(s * 1e6)));
    }

    constexpr std::int64_t micros() const { return us_; }
    constexpr double seconds() const { return static_cast<double>(us_) * 1e-6; }

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime operator+(SimTime rhs) const { return SimTime(us_ + rhs.us_); }
    constexpr SimTime operator-(SimTime rhs) const { return SimTime(us_ - rhs.us_); }
    SimTime& operator+=(SimTime rhs) { us_ += rhs.us_; return *this; }

private:
    constexpr explicit SimTime(std::int64_t us) : us_(us) {}

    std::int64_t us_ = 0;
};

inline SimTime seconds(double s) { return SimTime::from_seconds(s); }

} // namespace mecsim
