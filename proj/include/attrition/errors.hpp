#pragma once

#include <stdexcept>
#include <string>

namespace attrition {

/// Configuration errors are the caller's fault (bad input); numerical errors
/// mean a solver could not reach its accuracy contract.
enum class ErrorCategory { config, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define ATTRITION_DEFINE_ERROR(Name, Category)                                  \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& what)                                  \
            : Error(ErrorCategory::Category, #Name ": " + what) {}              \
    }

ATTRITION_DEFINE_ERROR(InvalidParameter, config);
ATTRITION_DEFINE_ERROR(NonMonotonePrize, config);
ATTRITION_DEFINE_ERROR(DomainError, config);
ATTRITION_DEFINE_ERROR(InvalidCdf, config);
ATTRITION_DEFINE_ERROR(MismatchedAtZero, config);
ATTRITION_DEFINE_ERROR(DegenerateRates, numerical);
ATTRITION_DEFINE_ERROR(SingularDerivative, numerical);
ATTRITION_DEFINE_ERROR(StepTooLarge, numerical);
ATTRITION_DEFINE_ERROR(TailNotConverged, numerical);
ATTRITION_DEFINE_ERROR(NumericalFailure, numerical);

#undef ATTRITION_DEFINE_ERROR

}  // namespace attrition
