#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "mecsim/engine.hpp"

namespace mecsim {

// cpu_rate in instructions/s, ram and disk in bytes.
struct ResourceVector {
    double cpu_rate = 0.0;
    double ram = 0.0;
    double disk = 0.0;
};

enum class SchedulingMode { segregation, fair_sharing };

struct AdmissionResult {
    bool accepted = false;
    std::string rejected_component;  // "cpu" | "ram" | "disk" when rejected
};

// MEC host resource pool. Admission keeps the component-wise sum of
// allocations within capacity. compute() models a block of N instructions:
// under segregation it runs at the stipulated rate r_i; under fair sharing at
// r'_i = r_i * R / sum(r_j over active apps), where the denominator spans the
// apps with an outstanding computation at call time plus all dummy loads.
// The effective rate is frozen when compute() is called, so the returned
// completion time never moves afterwards.
class ComputeHost {
public:
    ComputeHost(Engine& engine, int host_id, ResourceVector capacity, SchedulingMode mode)
        : engine_(engine), host_id_(host_id), capacity_(capacity), mode_(mode) {}

    int id() const { return host_id_; }
    const ResourceVector& capacity() const { return capacity_; }
    SchedulingMode mode() const { return mode_; }

    AdmissionResult admit(const std::string& app_id, const ResourceVector& request);
    bool can_admit(const ResourceVector& request) const;

    // Returns the frozen completion time. A second compute() by the same app
    // while one is outstanding queues behind it (one virtual CPU per app).
    SimTime compute(const std::string& app_id, double instructions,
                    std::function<void()> on_done = {});

    void release(const std::string& app_id);

    // Permanently-active allocation with no logic; counts in every
    // fair-sharing denominator. Returns the generated app id, or nullopt if
    // admission rejects the request.
    std::optional<std::string> install_dummy_load(double cpu_rate);

    bool has_app(const std::string& app_id) const { return allocations_.count(app_id) > 0; }
    double allocated_cpu() const;
    double cpu_utilization() const { return allocated_cpu() / capacity_.cpu_rate; }

    double effective_rate(const std::string& app_id) const;  // rate a compute() would get now

    // Service names available on this host's platform; used by placement.
    void add_available_service(const std::string& name) { services_.insert(name); }
    const std::set<std::string>& available_services() const { return services_; }

private:
    struct TaskRec {
        Engine::EventHandle event;
        SimTime completes_at;
    };

    bool app_active(const std::string& app_id) const;

    Engine& engine_;
    int host_id_;
    ResourceVector capacity_;
    SchedulingMode mode_;
    std::map<std::string, ResourceVector> allocations_;
    std::set<std::string> dummies_;
    std::map<std::string, std::deque<TaskRec>> tasks_;
    std::set<std::string> services_;
    int dummy_counter_ = 0;
};

} // namespace mecsim
