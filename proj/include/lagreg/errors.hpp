#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lagreg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    /// Short machine-readable category, e.g. "SyntaxError".
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, const std::string& expected)
        : Error("SyntaxError", "at position " + std::to_string(position) + ", expected " + expected),
          position_(position), expected_(expected) {}

    std::size_t position() const noexcept { return position_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::string expected_;
};

class UnknownIdentifier : public Error {
public:
    explicit UnknownIdentifier(const std::string& name)
        : Error("UnknownIdentifier", name), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// Evaluation left the domain of a primitive (log of non-positive, division by zero, ...).
class DomainError : public Error {
public:
    DomainError(const std::string& reason, const std::string& subexpression)
        : Error("DomainError", reason + " in '" + subexpression + "'"), subexpression_(subexpression) {}
    const std::string& subexpression() const noexcept { return subexpression_; }

private:
    std::string subexpression_;
};

#define LAGREG_SIMPLE_ERROR(Name)                                                  \
    class Name : public Error {                                                    \
    public:                                                                        \
        explicit Name(const std::string& message) : Error(#Name, message) {}      \
    };

LAGREG_SIMPLE_ERROR(DimensionMismatch)
LAGREG_SIMPLE_ERROR(ShapeMismatch)
LAGREG_SIMPLE_ERROR(ToleranceExceeded)
LAGREG_SIMPLE_ERROR(PreconditionViolated)
LAGREG_SIMPLE_ERROR(SingularPairing)
LAGREG_SIMPLE_ERROR(NotAutonomous)
LAGREG_SIMPLE_ERROR(RankNotConstant)
LAGREG_SIMPLE_ERROR(EmptySurface)
LAGREG_SIMPLE_ERROR(NotInKernel)
LAGREG_SIMPLE_ERROR(HypothesisViolated)
LAGREG_SIMPLE_ERROR(DegenerateAtSample)
LAGREG_SIMPLE_ERROR(NotCoisotropic)
LAGREG_SIMPLE_ERROR(SingularHessianAlongTrajectory)
LAGREG_SIMPLE_ERROR(StepUnderflow)
LAGREG_SIMPLE_ERROR(ChartMismatch)
LAGREG_SIMPLE_ERROR(UnknownScenario)
LAGREG_SIMPLE_ERROR(ConfigError)
LAGREG_SIMPLE_ERROR(Inconsistent)

#undef LAGREG_SIMPLE_ERROR

}  // namespace lagreg
