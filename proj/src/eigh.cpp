#include "eigh.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <lapacke.h>

namespace chaintt {

namespace {

lapack_complex_double* raw(Matrix& m) { return reinterpret_cast<lapack_complex_double*>(m.data()); }

std::size_t closest(const RealVector& values, std::optional<double> target) {
    std::size_t best = 0;
    if (!target) return best;
    for (std::size_t k = 1; k < static_cast<std::size_t>(values.size()); ++k)
        if (std::abs(values(static_cast<Index>(k)) - *target) < std::abs(values(static_cast<Index>(best)) - *target))
            best = k;
    return best;
}

HermitianPair full_solve(const Matrix& a, std::optional<double> target) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
    const auto k = static_cast<Index>(closest(es.eigenvalues(), target));
    return {es.eigenvalues()(k), es.eigenvectors().col(k)};
}

}  // namespace

HermitianPair hermitian_pair(const Matrix& a, std::optional<double> target) {
    const auto n = static_cast<lapack_int>(a.rows());
    if (n == 0) throw NumericalError("eigenproblem of dimension 0");
    lapack_int il = 1;
    lapack_int found = 0;
    if (target) {
        Matrix work = a;
        RealVector w(n);
        std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
        const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'N', 'A', 'L', n, raw(work), n, 0.0, 0.0, 0, 0, 0.0,
                                               &found, w.data(), nullptr, 1, support.data());
        if (info != 0 || found != n || !w.allFinite()) return full_solve(a, target);
        il = static_cast<lapack_int>(closest(w, target)) + 1;
    }
    Matrix work = a;
    RealVector w(n);
    Matrix z(n, 1);
    lapack_int support[2];
    const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, raw(work), n, 0.0, 0.0, il, il, 0.0,
                                           &found, w.data(), raw(z), n, support);
    if (info != 0 || found != 1 || !std::isfinite(w(0)) || !z.allFinite()) return full_solve(a, target);
    return {w(0), z.col(0)};
}

}  // namespace chaintt
