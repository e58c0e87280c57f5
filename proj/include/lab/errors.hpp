#pragma once
// Error types shared by all solver modules.

#include <stdexcept>
#include <string>
#include <vector>

namespace lab {

/// Precondition violation on an argument (bad exponent, mesh size, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A reaction was requested at a point where it is singular (argument zero).
class SingularEvaluation : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative solver ran out of budget; carries the last iterate.
class ConvergenceFailure : public std::runtime_error {
public:
    ConvergenceFailure(const std::string& what, double residual, std::vector<double> last_iterate,
                       double lambda = 0.0);

    double residual() const noexcept { return residual_; }
    const std::vector<double>& last_iterate() const noexcept { return last_; }
    /// Last eigenvalue estimate (eigen solves only, zero otherwise).
    double lambda() const noexcept { return lambda_; }

private:
    double residual_;
    std::vector<double> last_;
    double lambda_;
};

/// No barrier scaling constant passed the sub/supersolution checks.
class CalibrationFailure : public std::runtime_error {
public:
    CalibrationFailure(const std::string& what, std::string worst_check, double worst_margin);

    const std::string& worst_check() const noexcept { return worst_check_; }
    double worst_margin() const noexcept { return worst_margin_; }

private:
    std::string worst_check_;
    double worst_margin_;
};

/// Configuration problem detected by the command-line front end.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lab
