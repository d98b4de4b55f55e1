#pragma once

#include <stdexcept>
#include <string>

namespace cavqed {

// Argument outside the mathematical domain of a formula (kappa <= 0, Delta == 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Caller misuse that is not a numerical domain issue (empty grid, bad sizes).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Solver failed to meet its contract (singular system, residual too large, cap exceeded).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Scenario document could not be parsed or failed validation.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string message, int line = 0, int column = 0)
        : std::runtime_error(std::move(message)), line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

} // namespace cavqed
