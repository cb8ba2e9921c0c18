#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trajclust {

// Coarse failure classes. The CLI prints the category name as the
// machine-readable part of its single-line error report.
enum class ErrorCategory {
    schema,           // malformed input file (missing column, unparsable field)
    validation,       // well-formed input violating a domain invariant
    invalid_argument, // caller-supplied parameter out of range
    numerical,        // non-finite values, degenerate statistics
    undefined,        // statistic undefined for the given input (zero variance)
    separation,       // logistic MLE does not exist or did not converge
    rank_deficient,   // singular design matrix
    io,               // file system failures
    config,           // invalid run or synthetic-cohort configuration
};

std::string_view to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

} // namespace trajclust
