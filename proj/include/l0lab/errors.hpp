#pragma once

#include <stdexcept>
#include <string>

namespace l0lab {

/// Base for all numerical/domain failures. `name()` is the stable error
/// identifier the CLI prints before exiting with code 1.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(name + ": " + what), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define L0LAB_DEFINE_ERROR(Type)                                        \
    class Type : public Error {                                         \
    public:                                                             \
        explicit Type(const std::string& what) : Error(#Type, what) {}  \
    }

L0LAB_DEFINE_ERROR(NonConvergent);
L0LAB_DEFINE_ERROR(NonFinite);
L0LAB_DEFINE_ERROR(InsufficientTailRadius);
L0LAB_DEFINE_ERROR(NonMonotoneCDF);
L0LAB_DEFINE_ERROR(OddDegree);
L0LAB_DEFINE_ERROR(NonNegativeLeadingCoefficient);
L0LAB_DEFINE_ERROR(NormalizationFailure);
L0LAB_DEFINE_ERROR(UnsupportedOrder);
L0LAB_DEFINE_ERROR(BelowValidityRadius);
L0LAB_DEFINE_ERROR(BudgetTooLarge);
L0LAB_DEFINE_ERROR(InstanceTooLarge);
L0LAB_DEFINE_ERROR(ExtremeSearchFailed);

#undef L0LAB_DEFINE_ERROR

} // namespace l0lab
