#pragma once

#include <stdexcept>
#include <string>

namespace gevtail {

/// Base of every exception thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation
/// (index out of range, sigma <= 0, probability outside (0,1), ...).
class domain_error : public error {
public:
    using error::error;
};

/// A computation produced a non-finite or sign-violating intermediate.
class numeric_error : public error {
public:
    using error::error;
};

/// Malformed or unusable input data (NaN values, too few points, bad files).
class input_error : public error {
public:
    using error::error;
};

/// Inconsistent configuration (bad weight scheme, mismatched grids, ...).
class config_error : public error {
public:
    using error::error;
};

/// A zero spacing among the order statistics of one elemental.
class degenerate_spacing_error : public input_error {
public:
    degenerate_spacing_error(int i, int j, const std::string& what)
        : input_error("degenerate spacing at elemental (" + std::to_string(i) + ", " +
                      std::to_string(j) + "): " + what),
          i_(i), j_(j) {}

    int i() const noexcept { return i_; }
    int j() const noexcept { return j_; }

private:
    int i_;
    int j_;
};

} // namespace gevtail
