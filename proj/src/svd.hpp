#pragma once

#include <Eigen/SVD>

#include "chaintt/types.hpp"

namespace chaintt {

struct ThinSvd {
    Matrix u;
    RealVector s;
    Matrix v;
};

/// Thin SVD a = u diag(s) v^H via LAPACK divide and conquer, with a Jacobi fallback.
ThinSvd thin_svd(const Matrix& a);

}  // namespace chaintt
