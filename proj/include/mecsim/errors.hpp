#pragma once

#include <stdexcept>
#include <string>

namespace mecsim {

// Stable machine-readable codes; the gateway maps these onto HTTP statuses.
enum class ErrorCode {
    scheduling_in_past,
    queue_overflow,
    unstable_configuration,
    unknown_app,
    unknown_context,
    unknown_subscription,
    unknown_ue,
    unknown_cell,
    unknown_scope,
    no_running_instance,
    duplicate_app_id,
    duplicate_registration,
    malformed_descriptor,
    placement_failed,
    invalid_radius,
    empty_history,
    ue_not_associated,
    mode_error,
    parse_error,
    validation_error,
};

const char* error_code_name(ErrorCode code);

class SimError : public std::runtime_error {
public:
    SimError(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline SimError make_error(ErrorCode code, const std::string& detail) {
    return SimError(code, std::string(error_code_name(code)) + ": " + detail);
}

} // namespace mecsim
