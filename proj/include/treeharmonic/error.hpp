#pragma once

/**
 * @file error.hpp
 * @brief Exception types thrown by the treeharmonic library.
 *
 * Every library error derives from treeharmonic::error so callers can catch
 * the whole family at once; the CLI maps them to exit code 1.
 */

#include <stdexcept>
#include <string>

namespace treeharmonic {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wrong number of values for the operator arity, or an empty input.
class arity_error : public error {
public:
    using error::error;
};

/// Argument outside the mathematical domain (non-finite input, p <= 1, digit >= m, ...).
class domain_error : public error {
public:
    using error::error;
};

/// Request exceeds the depth or storage cap.
class capacity_error : public error {
public:
    using error::error;
};

/// Malformed user input: table files, interval strings, operator specs.
class input_error : public error {
public:
    using error::error;
};

/// Operation needs a constant (kappa, eta, exact arithmetic) the operator does not provide.
class unsupported_operator_error : public error {
public:
    using error::error;
};

/// Caller-side precondition violated (f != g outside I, shape mismatch, ...).
class precondition_error : public error {
public:
    using error::error;
};

/// Refinement did not reach the requested accuracy within the depth budget.
class convergence_error : public error {
public:
    convergence_error(const std::string &what, double best_value, double gap) :
        error(what), best_value_{best_value}, gap_{gap} {}

    [[nodiscard]] double best_value() const noexcept { return best_value_; }
    [[nodiscard]] double gap() const noexcept { return gap_; }

private:
    double best_value_;
    double gap_;
};

/// No restart of the simplex search converged.
class optimization_error : public error {
public:
    optimization_error(const std::string &what, double best_tau) :
        error(what), best_tau_{best_tau} {}

    [[nodiscard]] double best_tau() const noexcept { return best_tau_; }

private:
    double best_tau_;
};

}  // namespace treeharmonic
