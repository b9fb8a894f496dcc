#include "fabula/error.hpp"

#include <array>

namespace fabula {

std::string_view to_string(ErrorCode code) noexcept {
    static constexpr std::array<std::string_view, 12> names = {
        "invalid_argument", "invalid_state",       "not_found",           "conflict",
        "parse_error",      "unsupported_version", "backend_unavailable", "backend_error",
        "empty_generation", "partial_result",      "undefined_result",    "aborted_run",
    };
    return names[static_cast<std::size_t>(code)];
}

}  // namespace fabula
