#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace minimaxcdf {

// Parameter outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// E[g(T)] does not exist for the requested moment.
class DivergentMoment : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The integrand is not integrable (detected numerically near an endpoint).
class DivergentIntegral : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The per-step objective is infinite for every candidate weight.
class DivergentObjective : public std::runtime_error {
public:
    DivergentObjective(std::size_t step, const std::string& what)
        : std::runtime_error(what + " (step i=" + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

// The prior weight H makes the posterior kernel non-integrable.
class ImproperPosterior : public std::runtime_error {
public:
    ImproperPosterior(std::size_t step, const std::string& what)
        : std::runtime_error(what + " (step i=" + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

// A combined weight vector is not nondecreasing.
class NonMonotoneResult : public std::runtime_error {
public:
    NonMonotoneResult(std::size_t index, const std::string& what)
        : std::runtime_error(what + " (index " + std::to_string(index) + ")"), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// Unreadable or malformed input files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace minimaxcdf
