#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spreadkit {

// Root of every error thrown by the library. `kind()` is a stable
// machine-readable tag used by the CLI for exit codes and JSON reports.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define SPREADKIT_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& what) : Error(#Name, what) {} \
    }

// fieldlang
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, std::size_t offset)
        : Error("SyntaxError", what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};
SPREADKIT_DEFINE_ERROR(UnknownIdentifier);
SPREADKIT_DEFINE_ERROR(ArityError);
SPREADKIT_DEFINE_ERROR(VariableOutOfRange);
SPREADKIT_DEFINE_ERROR(UForbidden);
SPREADKIT_DEFINE_ERROR(DomainError);
SPREADKIT_DEFINE_ERROR(NotDifferentiable);

// media
SPREADKIT_DEFINE_ERROR(ValidationError);
SPREADKIT_DEFINE_ERROR(Unclassifiable);

// eigen
class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, double last_residual)
        : Error("NoConvergence", what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};
SPREADKIT_DEFINE_ERROR(NonPositiveEigenfunction);

// speeds
class BracketFailure : public Error {
public:
    BracketFailure(const std::string& what, double boundary_value, double boundary_lambda)
        : Error("BracketFailure", what), value_(boundary_value), lambda_(boundary_lambda) {}
    double boundary_value() const noexcept { return value_; }
    double boundary_lambda() const noexcept { return lambda_; }

private:
    double value_;
    double lambda_;
};
SPREADKIT_DEFINE_ERROR(DegenerateShape);

// fronts
SPREADKIT_DEFINE_ERROR(NoSignChange);
SPREADKIT_DEFINE_ERROR(IntegratorFailure);
SPREADKIT_DEFINE_ERROR(NonPositiveLinearization);
SPREADKIT_DEFINE_ERROR(SpeedBelowMinimal);

// simulate
SPREADKIT_DEFINE_ERROR(SupportTooLarge);
SPREADKIT_DEFINE_ERROR(StabilityError);
SPREADKIT_DEFINE_ERROR(TruncationInvalid);

// analysis
SPREADKIT_DEFINE_ERROR(InsufficientCrossings);
SPREADKIT_DEFINE_ERROR(EmptyInput);
SPREADKIT_DEFINE_ERROR(CrossingNotFound);

// pipeline
SPREADKIT_DEFINE_ERROR(ConfigError);
SPREADKIT_DEFINE_ERROR(MissingDependency);

#undef SPREADKIT_DEFINE_ERROR

}  // namespace spreadkit
