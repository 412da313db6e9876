#pragma once

#include <stdexcept>
#include <string>

namespace scle {

/// Error categories. Each maps onto one C status code in scle.h.
enum class ErrorKind {
    Config = 1,      // dimension mismatch, bad option values
    Input,           // empty or malformed input data
    Evaluation,      // non-finite score value
    Model,           // unsupported family, non-PD covariance
    Singular,        // singular Gram or information matrix
    Convergence,     // iterative solver did not converge
    Estimation,      // preliminary / one-step estimation failure
    Path,            // homotopy cycling guard
    Degenerate,      // zero trace, all-zero rule
    Io,              // file access
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace scle
