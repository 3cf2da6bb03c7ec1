#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace krvi {

// A state-action point z in [0,1]^d.
using Point = Eigen::VectorXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Bad argument or a precondition violation detectable from inputs alone.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A kernel family without a polynomial eigendecay profile.
class NotPolynomialEigendecay : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

// Inputs that make a formula degenerate (e.g. covering radius >= ball radius).
class DegenerateInput : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

// Numerical breakdown (non-positive Cholesky pivot, variance below tolerance).
class NumericalDegeneracy : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The beta fixed-point iteration failed to converge.
class NoFixedPoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Not enough usable data for a fit.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration problem, carries the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Serializes v with 17 significant digits (round-trips exactly through parse).
std::string format_double(double v);

// Throws InvalidInput unless every coordinate of z lies in [0,1].
void check_unit_cube(const Point& z);

}  // namespace krvi
