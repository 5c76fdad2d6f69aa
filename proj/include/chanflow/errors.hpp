#pragma once

#include <stdexcept>
#include <string>

namespace chanflow {

/// Base class for every error raised by the library. `kind()` is the short
/// machine-readable tag written to reports and CLI diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define CHANFLOW_ERROR(Name)                                                  \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name, what) {}        \
    }

// geometry
CHANFLOW_ERROR(AssumptionViolation);
CHANFLOW_ERROR(OutOfRange);
CHANFLOW_ERROR(Inconclusive);
CHANFLOW_ERROR(DegenerateGrid);
// flux carrier
CHANFLOW_ERROR(BoundViolation);
// solver
CHANFLOW_ERROR(LinearSolveFailure);
// functional inequalities
CHANFLOW_ERROR(EigenFailure);
CHANFLOW_ERROR(AscentStagnation);
CHANFLOW_ERROR(SaddleSolveFailure);
CHANFLOW_ERROR(NonZeroMean);
// comparison lemmas
CHANFLOW_ERROR(NonMonotoneSamples);
CHANFLOW_ERROR(LemmaViolation);
CHANFLOW_ERROR(RootBracketFailure);
CHANFLOW_ERROR(InsufficientTail);
// harness
CHANFLOW_ERROR(HypothesisNotMet);
// configuration
CHANFLOW_ERROR(ValidationError);

#undef CHANFLOW_ERROR

/// Non-convergence of the nonlinear solve. Carries the best residual seen.
class NonConvergence : public Error {
public:
    NonConvergence(double best_residual, int iterations)
        : Error("NonConvergence", "best residual " + std::to_string(best_residual) +
                                      " after " + std::to_string(iterations) + " iterations"),
          best_residual_(best_residual), iterations_(iterations) {}
    double best_residual() const noexcept { return best_residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double best_residual_;
    int iterations_;
};

class ParseError : public Error {
public:
    ParseError(int line, const std::string& message)
        : Error("ParseError", "line " + std::to_string(line) + ": " + message), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace chanflow
