#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace subloc {

/// Malformed input: overlapping blocks, out-of-range indices, bad configs.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Exhaustive search refused because the enumeration exceeds the budget.
class budget_exceeded : public std::runtime_error {
public:
    budget_exceeded(double required, std::uint64_t budget)
        : std::runtime_error("search budget exceeded: " + std::to_string(required) +
                             " subset evaluations required, budget is " + std::to_string(budget)),
          required_(required),
          budget_(budget) {}

    double required() const noexcept { return required_; }
    std::uint64_t budget() const noexcept { return budget_; }

private:
    double required_;
    std::uint64_t budget_;
};

/// An iterative method hit its iteration cap before meeting its tolerance.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& what, double residual)
        : std::runtime_error(what + " (last residual " + std::to_string(residual) + ")"), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace subloc
