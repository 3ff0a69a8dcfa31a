#include "chaintt/tise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <fmt/format.h>
#include <unsupported/Eigen/KroneckerProduct>

#include "eigh.hpp"

namespace chaintt {

TiseSolver parse_tise_solver(const std::string& name) {
    if (name == "als") return TiseSolver::als;
    if (name == "qe") return TiseSolver::qe;
    throw ConfigError("dynamics.solver", fmt::format("unknown TISE solver '{}' (expected als or qe)", name));
}

EigenSelector parse_eigen_selector(const std::string& name) {
    if (name == "dense-all") return EigenSelector::dense_all;
    if (name == "dense-hermitian") return EigenSelector::dense_hermitian;
    if (name == "sparse-shift-invert") return EigenSelector::sparse_shift_invert;
    throw ConfigError("dynamics.eigen", fmt::format("unknown eigen selector '{}'", name));
}

void TiseConfig::validate() const {
    if (n_levels < 1) throw ConfigError("dynamics.n_levels", "must be >= 1");
    if (ranks < 1) throw ConfigError("dynamics.ranks", "must be >= 1");
    if (repeats < 3) throw ConfigError("dynamics.repeats", "must be >= 3");
    if (!(conv_eps > 0.0)) throw ConfigError("dynamics.conv_eps", "must be > 0");
    if (dense_cap < 1) throw ConfigError("dense_cap", "must be >= 1");
}

namespace {

constexpr Index kIterativeThreshold = 2000;

Matrix state_slice(const StateCore& c, Index s) {
    Matrix m(c.left, c.right);
    for (Index a = 0; a < c.left; ++a)
        for (Index b = 0; b < c.right; ++b) m(a, b) = c(a, s, b);
    return m;
}

/// Nonzero d x d blocks W_{h h'} of an operator core.
struct OperatorBlocks {
    Index left = 0;
    Index right = 0;
    std::vector<std::tuple<Index, Index, Matrix>> blocks;
};

OperatorBlocks blocks_of(const OperatorCore& c) {
    OperatorBlocks out{c.left, c.right, {}};
    const Index d = c.phys[0];
    for (Index h = 0; h < c.left; ++h)
        for (Index g = 0; g < c.right; ++g) {
            Matrix w(d, d);
            bool nonzero = false;
            for (Index s = 0; s < d; ++s)
                for (Index t = 0; t < d; ++t) {
                    w(s, t) = c(h, s, t, g);
                    nonzero = nonzero || w(s, t) != Complex(0.0);
                }
            if (nonzero) out.blocks.emplace_back(h, g, std::move(w));
        }
    return out;
}

using Env = std::vector<Matrix>;  // one r_x x r_x matrix per operator rank index

Env extend_left(const Env& env, const StateCore& x, const OperatorBlocks& w) {
    const Index d = x.phys[0];
    std::vector<Matrix> xs;
    for (Index s = 0; s < d; ++s) xs.push_back(state_slice(x, s));
    Env out(static_cast<std::size_t>(w.right), Matrix::Zero(x.right, x.right));
    for (const auto& [h, g, blk] : w.blocks) {
        const Matrix& e = env[static_cast<std::size_t>(h)];
        for (Index t = 0; t < d; ++t) {
            Matrix acc = Matrix::Zero(x.left, x.right);
            bool any = false;
            for (Index s = 0; s < d; ++s)
                if (blk(s, t) != Complex(0.0)) {
                    acc += std::conj(blk(s, t)) * xs[static_cast<std::size_t>(s)];
                    any = true;
                }
            if (any) out[static_cast<std::size_t>(g)].noalias() += acc.adjoint() * e * xs[static_cast<std::size_t>(t)];
        }
    }
    return out;
}

Env extend_right(const Env& env, const StateCore& x, const OperatorBlocks& w) {
    const Index d = x.phys[0];
    std::vector<Matrix> xs;
    for (Index s = 0; s < d; ++s) xs.push_back(state_slice(x, s));
    Env out(static_cast<std::size_t>(w.left), Matrix::Zero(x.left, x.left));
    for (const auto& [h, g, blk] : w.blocks) {
        const Matrix& e = env[static_cast<std::size_t>(g)];
        for (Index t = 0; t < d; ++t) {
            Matrix acc = Matrix::Zero(x.left, x.right);
            bool any = false;
            for (Index s = 0; s < d; ++s)
                if (blk(s, t) != Complex(0.0)) {
                    acc += std::conj(blk(s, t)) * xs[static_cast<std::size_t>(s)];
                    any = true;
                }
            // sum_{s,t} W(s,t) conj(X_s) E X_t^T, written as conj(acc) E X_t^T
            if (any) out[static_cast<std::size_t>(h)].noalias() += acc.conjugate() * e * xs[static_cast<std::size_t>(t)].transpose();
        }
    }
    return out;
}

/// Overlap environment with a fixed state p: L(a, a') = <L_a | P_a'>.
Matrix overlap_left(const Matrix& env, const StateCore& x, const StateCore& p) {
    Matrix out = Matrix::Zero(x.right, p.right);
    for (Index s = 0; s < x.phys[0]; ++s) out.noalias() += state_slice(x, s).adjoint() * env * state_slice(p, s);
    return out;
}

Matrix overlap_right(const Matrix& env, const StateCore& x, const StateCore& p) {
    Matrix out = Matrix::Zero(x.left, p.left);
    for (Index s = 0; s < x.phys[0]; ++s)
        out.noalias() += state_slice(x, s).conjugate() * env * state_slice(p, s).transpose();
    return out;
}

Matrix local_operator(const Env& left, const OperatorBlocks& w, const Env& right) {
    const Index rl = left.front().rows();
    const Index rr = right.front().rows();
    const Index d = w.blocks.empty() ? 0 : std::get<2>(w.blocks.front()).rows();
    const Index dim = rl * d * rr;
    Matrix a = Matrix::Zero(dim, dim);
    for (const auto& [h, g, blk] : w.blocks) {
        const Matrix lw = Eigen::kroneckerProduct(left[static_cast<std::size_t>(h)], blk).eval();
        a.noalias() += Eigen::kroneckerProduct(lw, right[static_cast<std::size_t>(g)]).eval();
    }
    return a;
}

Vector local_projection(const Matrix& lp, const StateCore& p, const Matrix& rp, Index d) {
    const Index rl = lp.rows();
    const Index rr = rp.rows();
    Vector v(rl * d * rr);
    for (Index s = 0; s < d; ++s) {
        const Matrix vs = lp * state_slice(p, s) * rp.transpose();
        for (Index a = 0; a < rl; ++a)
            for (Index b = 0; b < rr; ++b) v((a * d + s) * rr + b) = vs(a, b);
    }
    return v;
}

struct Eigenpair {
    double value = 0.0;
    Vector vector;
};

std::size_t pick(const std::vector<double>& values, std::optional<double> e_est) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        const double score = e_est ? std::abs(values[k] - *e_est) : values[k];
        const double best_score = e_est ? std::abs(values[best] - *e_est) : values[best];
        if (score < best_score) best = k;
    }
    return best;
}

Eigenpair solve_hermitian(const Matrix& a, std::optional<double> e_est) {
    auto pair = hermitian_pair(a, e_est);
    return {pair.value, std::move(pair.vector)};
}

Eigenpair solve_general(const Matrix& a, std::optional<double> e_est) {
    Eigen::ComplexEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success) throw NumericalError("general eigensolver failed");
    std::vector<double> values;
    for (Index k = 0; k < es.eigenvalues().size(); ++k) values.push_back(es.eigenvalues()(k).real());
    const auto k = pick(values, e_est);
    return {values[k], es.eigenvectors().col(static_cast<Index>(k)).normalized()};
}

/// Inverse iteration with (A - e_est) factorized once.
Eigenpair solve_shift_invert(const Matrix& a, double e_est, const Vector& start) {
    const Index n = a.rows();
    Eigen::PartialPivLU<Matrix> lu(a - Complex(e_est) * Matrix::Identity(n, n));
    Vector v = start.norm() > 0.0 ? start.normalized() : Vector::Ones(n).normalized();
    double lambda = (v.adjoint() * a * v)(0).real();
    for (int it = 0; it < 200; ++it) {
        Vector w = lu.solve(v);
        if (!w.allFinite()) throw NumericalError("shift-invert solve produced non-finite values");
        v = w.normalized();
        const Vector av = a * v;
        lambda = v.dot(av).real();
        if ((av - lambda * v).norm() <= 1e-12 * std::max(1.0, std::abs(lambda))) break;
    }
    return {lambda, v};
}

Eigenpair solve_micro(const Matrix& a, EigenSelector sel, std::optional<double> e_est, const Vector& start) {
    switch (sel) {
        case EigenSelector::dense_all: return solve_general(a, e_est);
        case EigenSelector::dense_hermitian: return solve_hermitian(a, e_est);
        case EigenSelector::sparse_shift_invert:
            if (a.rows() > kIterativeThreshold && e_est) return solve_shift_invert(a, *e_est, start);
            return solve_hermitian(a, e_est);
    }
    return solve_hermitian(a, e_est);
}

void store(StateCore& c, const Vector& v) {
    for (Index i = 0; i < v.size(); ++i) c.data[static_cast<std::size_t>(i)] = v(i);
}

Vector flatten(const StateCore& c) {
    return Eigen::Map<const Vector>(c.data.data(), static_cast<Index>(c.data.size()));
}

/// Left-orthonormalize core k, push R into core k+1.
void push_right(std::vector<StateCore>& cores, std::size_t k) {
    auto& c = cores[k];
    const RowMatrix u = c.left_unfolding();
    Eigen::HouseholderQR<RowMatrix> qr(u);
    const Index r = c.right;  // ranks are kept fixed; r <= rows by construction
    RowMatrix q = qr.householderQ() * RowMatrix::Identity(u.rows(), r);
    RowMatrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    c.left_unfolding() = q;
    auto& next = cores[k + 1];
    const RowMatrix nr = rr * next.right_unfolding();
    next.right_unfolding() = nr;
}

/// Right-orthonormalize core k, push L into core k-1.
void push_left(std::vector<StateCore>& cores, std::size_t k) {
    auto& c = cores[k];
    const RowMatrix ut = c.right_unfolding().adjoint();
    Eigen::HouseholderQR<RowMatrix> qr(ut);
    const Index r = c.left;
    RowMatrix q = qr.householderQ() * RowMatrix::Identity(ut.rows(), r);
    RowMatrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    c.right_unfolding() = q.adjoint();
    auto& prev = cores[k - 1];
    const RowMatrix pl = prev.left_unfolding() * rr.adjoint();
    prev.left_unfolding() = pl;
}

double rayleigh(const TTOperator& h, const TTState& x) {
    const double n2 = inner(x, x).real();
    return expectation(x, h, x).real() / n2;
}

}  // namespace

double deflation_shift(const TTOperator& h) { return 2.0 * row_sum_bound(h); }

double residual_norm(const TTOperator& h, const TTState& psi, double energy) {
    return norm(add(apply(h, psi), scale(psi, -energy)));
}

SweepResult als_sweep(const TTOperator& h, const TTState& trial, const std::vector<TTState>& deflation, double shift,
                      EigenSelector selector, std::optional<double> e_est, Index sweep_number) {
    if (h.order() != trial.order()) throw DimensionError("als_sweep: operator and trial differ in length");
    for (std::size_t k = 0; k < h.order(); ++k)
        if (h.core(k).phys[0] != trial.core(k).phys[0])
            throw DimensionError(fmt::format("als_sweep: dimension mismatch at site {}", k));
    for (const auto& p : deflation)
        if (p.order() != trial.order()) throw DimensionError("als_sweep: deflation state has the wrong length");

    const std::size_t n = h.order();
    TTState x = orthonormalize(trial, Direction::right);
    auto& cores = x.cores();
    std::vector<OperatorBlocks> w;
    for (std::size_t k = 0; k < n; ++k) w.push_back(blocks_of(h.core(k)));

    // environments: left[k] / right[k] are the contractions excluding site k
    std::vector<Env> left(n), right(n);
    const std::size_t m = deflation.size();
    std::vector<std::vector<Matrix>> pl(m, std::vector<Matrix>(n)), pr(m, std::vector<Matrix>(n));
    left[0] = Env{Matrix::Ones(1, 1)};
    right[n - 1] = Env{Matrix::Ones(1, 1)};
    for (std::size_t j = 0; j < m; ++j) {
        pl[j][0] = Matrix::Ones(1, 1);
        pr[j][n - 1] = Matrix::Ones(1, 1);
    }
    for (std::size_t k = n - 1; k > 0; --k) {
        right[k - 1] = extend_right(right[k], cores[k], w[k]);
        for (std::size_t j = 0; j < m; ++j) pr[j][k - 1] = overlap_right(pr[j][k], cores[k], deflation[j].core(k));
    }

    double lambda = 0.0;
    auto micro = [&](std::size_t k) {
        const Index d = cores[k].phys[0];
        Matrix a = local_operator(left[k], w[k], right[k]);
        if (a.rows() == 0) throw NumericalError(fmt::format("sweep {}, site {}: empty micro-problem", sweep_number, k));
        for (std::size_t j = 0; j < m; ++j) {
            const Vector v = local_projection(pl[j][k], deflation[j].core(k), pr[j][k], d);
            a.noalias() += shift * (v * v.adjoint());
        }
        if (selector != EigenSelector::dense_all) a = 0.5 * (a + a.adjoint()).eval();
        Eigenpair e;
        try {
            e = solve_micro(a, selector, e_est, flatten(cores[k]));
        } catch (const NumericalError& err) {
            throw NumericalError(fmt::format("sweep {}, site {}: {}", sweep_number, k, err.what()));
        }
        if (!e.vector.allFinite() || !std::isfinite(e.value))
            throw NumericalError(fmt::format("sweep {}, site {}: micro-eigensolver returned non-finite values",
                                             sweep_number, k));
        store(cores[k], e.vector);
        lambda = e.value;
    };

    if (n == 1) {
        micro(0);
        return {x, lambda};
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
        micro(k);
        push_right(cores, k);
        left[k + 1] = extend_left(left[k], cores[k], w[k]);
        for (std::size_t j = 0; j < m; ++j) pl[j][k + 1] = overlap_left(pl[j][k], cores[k], deflation[j].core(k));
    }
    for (std::size_t k = n - 1; k > 0; --k) {
        micro(k);
        push_left(cores, k);
        right[k - 1] = extend_right(right[k], cores[k], w[k]);
        for (std::size_t j = 0; j < m; ++j) pr[j][k - 1] = overlap_right(pr[j][k], cores[k], deflation[j].core(k));
    }
    return {x, lambda};
}

TiseResult solve_tise(const TTOperator& h, const TiseConfig& cfg) {
    cfg.validate();
    if (cfg.solver == TiseSolver::qe) return solve_tise_dense(h, cfg);
    const auto dims = h.dims();
    const double shift = deflation_shift(h);
    TiseResult result;
    std::vector<TTState> found;
    for (Index level = 0; level < cfg.n_levels; ++level) {
        std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(level));
        TTState x = random_state(dims, cfg.ranks, rng);
        x = orthonormalize(x, Direction::right);
        x = scale(x, 1.0 / norm(x));
        TiseLevel lv;
        // deflated Rayleigh quotient of the trial
        double start = rayleigh(h, x);
        for (const auto& p : found) start += shift * std::norm(inner(p, x));
        lv.history.push_back(start);
        for (Index sweep = 1; sweep <= cfg.repeats; ++sweep) {
            auto [next, lambda] = als_sweep(h, x, found, shift, cfg.eigen, cfg.e_est, sweep);
            x = std::move(next);
            lv.history.push_back(lambda);
            lv.sweeps = sweep;
            const auto& hist = lv.history;
            if (hist.size() >= 4) {
                bool ok = true;
                for (std::size_t j = hist.size() - 3; j < hist.size(); ++j)
                    ok = ok && std::abs(hist[j] - hist[j - 1]) < cfg.conv_eps;
                if (ok) {
                    lv.converged = true;
                    break;
                }
            }
        }
        x = scale(x, 1.0 / norm(x));
        lv.energy = rayleigh(h, x);
        lv.residual = residual_norm(h, x, lv.energy);
        lv.state = x;
        found.push_back(x);
        result.levels.push_back(std::move(lv));
    }
    return result;
}

TiseResult solve_tise_dense(const TTOperator& h, const TiseConfig& cfg) {
    cfg.validate();
    const auto dims = h.dims();
    const Matrix a = to_dense(h, cfg.dense_cap);
    const double scale_ref = std::max(1.0, a.cwiseAbs().maxCoeff());
    const double herm = (a - a.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-12 * scale_ref)
        throw ModelError(fmt::format("operator is not Hermitian (residual {:.3e})", herm));
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    const Index total = es.eigenvalues().size();
    std::vector<Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    const bool by_target = cfg.e_est.has_value();
    if (by_target) {
        const double t = *cfg.e_est;
        std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) {
            return std::abs(es.eigenvalues()(p) - t) < std::abs(es.eigenvalues()(q) - t);
        });
    }
    const Index count = std::min(cfg.n_levels, total);
    order.resize(static_cast<std::size_t>(count));
    std::sort(order.begin(), order.end());  // ascending energy
    TiseResult result;
    for (Index k : order) {
        TiseLevel lv;
        lv.energy = es.eigenvalues()(k);
        const Vector v = es.eigenvectors().col(k);
        lv.state = from_dense(dims, v, TruncationPolicy{}, cfg.dense_cap);
        lv.residual = (a * v - lv.energy * v).norm();
        lv.converged = true;
        lv.history = {lv.energy};
        result.levels.push_back(std::move(lv));
    }
    return result;
}

}  // namespace chaintt
