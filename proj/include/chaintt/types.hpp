#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace chaintt {

using Complex = std::complex<double>;
using Index = Eigen::Index;

using Matrix = Eigen::MatrixXcd;
using RowMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Largest Hilbert-space dimension that dense (quasi-exact) paths accept by default.
inline constexpr Index kDefaultDenseCap = 4096;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes, dimensions or list lengths do not fit together.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A dense conversion would exceed the configured dimension cap.
class CapExceeded : public Error {
public:
    CapExceeded(Index required, Index cap);
    Index required() const noexcept { return required_; }
    Index cap() const noexcept { return cap_; }

private:
    Index required_;
    Index cap_;
};

/// Invalid physical parameters or a model lacking a requested feature.
class ModelError : public Error {
public:
    using Error::Error;
};

/// NaN/blow-up during a run or failure of an inner solver.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Run configuration violates the schema; `key()` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what);
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Reading or writing files failed (missing, truncated, wrong version).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace chaintt
