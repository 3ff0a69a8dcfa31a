#pragma once

#include <optional>

#include "chaintt/types.hpp"

namespace chaintt {

struct HermitianPair {
    double value = 0.0;
    Vector vector;
};

/// Eigenpair of a Hermitian matrix: the lowest one, or the one closest to `target`.
/// Only the selected eigenvector is computed (LAPACK MRRR); falls back to a full Eigen solve.
HermitianPair hermitian_pair(const Matrix& a, std::optional<double> target);

}  // namespace chaintt
