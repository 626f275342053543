#ifndef LOHE_ERROR_HPP
#define LOHE_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lohe {

/// Operand shapes disagree (vector lengths, particle counts, matrix sizes).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An argument lies outside the domain where the operation is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Time integration could not continue: non-finite values or norm drift.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

} // namespace lohe

#endif // LOHE_ERROR_HPP
