#include "svd.hpp"

#include <lapacke.h>

namespace chaintt {

namespace {

ThinSvd jacobi(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) throw NumericalError("SVD failed to converge");
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace

ThinSvd thin_svd(const Matrix& a) {
    const Index m = a.rows(), n = a.cols(), k = std::min(m, n);
    if (k == 0) return {Matrix(m, 0), RealVector(0), Matrix(n, 0)};
    Matrix work = a;
    ThinSvd out{Matrix(m, k), RealVector(k), Matrix(k, n)};
    const lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', static_cast<lapack_int>(m), static_cast<lapack_int>(n),
                                           reinterpret_cast<lapack_complex_double*>(work.data()),
                                           static_cast<lapack_int>(m), out.s.data(),
                                           reinterpret_cast<lapack_complex_double*>(out.u.data()),
                                           static_cast<lapack_int>(m),
                                           reinterpret_cast<lapack_complex_double*>(out.v.data()),
                                           static_cast<lapack_int>(k));
    if (info != 0 || !out.s.allFinite() || !out.u.allFinite() || !out.v.allFinite()) return jacobi(a);
    out.v.adjointInPlace();
    return out;
}

}  // namespace chaintt
