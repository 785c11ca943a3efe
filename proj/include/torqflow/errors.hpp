#pragma once

#include <stdexcept>
#include <string>

namespace torqflow {

// Malformed call: wrong grid size, nonpositive scale factor, mismatched lengths.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input data fails a structural check: density not positive, tabulated nodes
// not increasing, config field out of range.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Body fails a geometric precondition, e.g. the origin is not interior.
struct GeometryError : std::domain_error {
    using std::domain_error::domain_error;
};

// Support profile stopped describing a strictly convex body.
class ConvexityError : public GeometryError {
public:
    ConvexityError(const std::string& what, double min_h, double min_b)
        : GeometryError(what), min_h_(min_h), min_b_(min_b) {}
    double min_h() const { return min_h_; }
    double min_b() const { return min_b_; }

private:
    double min_h_;
    double min_b_;
};

// Nonlinear solve did not reach tolerance; carries the last gradient norm.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// A derived quantity degenerated: vanishing recovered gradient, non-finite sum.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace torqflow
