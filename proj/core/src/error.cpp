#include "trajclust/error.hpp"

namespace trajclust {

std::string_view to_string(ErrorCategory category) noexcept {
    switch (category) {
        case ErrorCategory::schema: return "schema";
        case ErrorCategory::validation: return "validation";
        case ErrorCategory::invalid_argument: return "invalid_argument";
        case ErrorCategory::numerical: return "numerical";
        case ErrorCategory::undefined: return "undefined";
        case ErrorCategory::separation: return "separation";
        case ErrorCategory::rank_deficient: return "rank_deficient";
        case ErrorCategory::io: return "io";
        case ErrorCategory::config: return "config";
    }
    return "unknown";
}

} // namespace trajclust
