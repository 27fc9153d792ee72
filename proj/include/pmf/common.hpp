#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace pmf {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when training produces non-finite values; carries the iteration.
struct DivergenceError : std::runtime_error {
    long iteration;
    DivergenceError(long iter, const std::string& msg)
        : std::runtime_error(msg), iteration(iter) {}
};

inline bool all_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

inline void require_finite(std::span<const double> x, const char* what) {
    if (!all_finite(x))
        throw std::invalid_argument(std::string(what) + ": non-finite input");
}

}  // namespace pmf
