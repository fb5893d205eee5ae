#include "mecsim/compute.hpp"

namespace mecsim {

AdmissionResult ComputeHost::admit(const std::string& app_id,
                                   const ResourceVector& request) {
    double cpu = request.cpu_rate, ram = request.ram, disk = request.disk;
    for (const auto& [id, alloc] : allocations_) {
        cpu += alloc.cpu_rate;
        ram += alloc.ram;
        disk += alloc.disk;
    }
    if (cpu > capacity_.cpu_rate) return {false, "cpu"};
    if (ram > capacity_.ram) return {false, "ram"};
    if (disk > capacity_.disk) return {false, "disk"};
    allocations_[app_id] = request;
    return {true, {}};
}

bool ComputeHost::can_admit(const ResourceVector& request) const {
    double cpu = request.cpu_rate, ram = request.ram, disk = request.disk;
    for (const auto& [id, alloc] : allocations_) {
        cpu += alloc.cpu_rate;
        ram += alloc.ram;
        disk += alloc.disk;
    }
    return cpu <= capacity_.cpu_rate && ram <= capacity_.ram && disk <= capacity_.disk;
}

double ComputeHost::allocated_cpu() const {
    double sum = 0.0;
    for (const auto& [id, alloc] : allocations_) sum += alloc.cpu_rate;
    return sum;
}

bool ComputeHost::app_active(const std::string& app_id) const {
    if (dummies_.count(app_id)) return true;
    auto it = tasks_.find(app_id);
    return it != tasks_.end() && !it->second.empty();
}

double ComputeHost::effective_rate(const std::string& app_id) const {
    const double stipulated = allocations_.at(app_id).cpu_rate;
    if (mode_ == SchedulingMode::segregation) return stipulated;
    // The caller counts as active in its own denominator.
    double active_sum = stipulated;
    for (const auto& [id, alloc] : allocations_) {
        if (id != app_id && app_active(id)) active_sum += alloc.cpu_rate;
    }
    return stipulated * capacity_.cpu_rate / active_sum;
}

SimTime ComputeHost::compute(const std::string& app_id, double instructions,
                             std::function<void()> on_done) {
    if (!allocations_.count(app_id)) {
        throw make_error(ErrorCode::unknown_app, "compute by " + app_id);
    }
    if (!(instructions > 0.0)) {
        throw make_error(ErrorCode::validation_error,
                         "non-positive instruction count for " + app_id);
    }
    const double rate = effective_rate(app_id);
    auto& queue = tasks_[app_id];
    const SimTime start = queue.empty() ? engine_.now()
                                        : std::max(engine_.now(), queue.back().completes_at);
    const SimTime completes_at = start + SimTime::from_seconds(instructions / rate);

    auto handle = engine_.schedule_at(completes_at,
                                      [this, app_id, done = std::move(on_done)]() {
                                          auto it = tasks_.find(app_id);
                                          if (it != tasks_.end() && !it->second.empty()) {
                                              it->second.pop_front();
                                          }
                                          if (done) done();
                                      });
    queue.push_back(TaskRec{handle, completes_at});
    return completes_at;
}

void ComputeHost::release(const std::string& app_id) {
    auto it = allocations_.find(app_id);
    if (it == allocations_.end()) {
        throw make_error(ErrorCode::unknown_app, "release of " + app_id);
    }
    allocations_.erase(it);
    dummies_.erase(app_id);
    auto tit = tasks_.find(app_id);
    if (tit != tasks_.end()) {
        for (const TaskRec& task : tit->second) engine_.cancel(task.event);
        tasks_.erase(tit);
    }
}

std::optional<std::string> ComputeHost::install_dummy_load(double cpu_rate) {
    const std::string app_id =
        "host" + std::to_string(host_id_) + "/dummy-" + std::to_string(dummy_counter_);
    if (!admit(app_id, ResourceVector{cpu_rate, 0.0, 0.0}).accepted) {
        return std::nullopt;
    }
    ++dummy_counter_;
    dummies_.insert(app_id);
    return app_id;
}

} // namespace mecsim
