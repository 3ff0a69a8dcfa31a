#include "chaintt/tensor_train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "svd.hpp"

namespace chaintt {

CapExceeded::CapExceeded(Index required, Index cap)
    : Error(fmt::format("dense dimension {} exceeds the dense cap {} (raise the cap to at least {})", required,
                        cap, required)),
      required_(required), cap_(cap) {}

ConfigError::ConfigError(std::string key, const std::string& what)
    : Error(fmt::format("config key '{}': {}", key, what)), key_(std::move(key)) {}

// ---------------------------------------------------------------------------
// container

template <int Legs>
TensorTrain<Legs>::TensorTrain(std::vector<core_type> cores) : cores_(std::move(cores)) {
    if (cores_.empty()) throw DimensionError("tensor train needs at least one core");
    for (std::size_t k = 0; k < cores_.size(); ++k) {
        const auto& c = cores_[k];
        for (Index p : c.phys)
            if (p < 1) throw DimensionError(fmt::format("site {}: physical dimension must be >= 1", k));
        if constexpr (Legs == 2) {
            if (c.phys[0] != c.phys[1])
                throw DimensionError(fmt::format("site {}: operator core is not square ({}x{})", k, c.phys[0],
                                                 c.phys[1]));
        }
        if (c.left < 1 || c.right < 1) throw DimensionError(fmt::format("site {}: ranks must be >= 1", k));
        if (static_cast<Index>(c.data.size()) != c.size())
            throw DimensionError(fmt::format("site {}: core storage has {} entries, expected {}", k, c.data.size(),
                                             c.size()));
        if (k > 0 && cores_[k - 1].right != c.left)
            throw DimensionError(fmt::format("rank mismatch between sites {} and {} ({} vs {})", k - 1, k,
                                             cores_[k - 1].right, c.left));
    }
    if (cores_.front().left != 1 || cores_.back().right != 1)
        throw DimensionError("boundary ranks must be 1");
}

template <int Legs>
std::vector<Index> TensorTrain<Legs>::dims() const {
    std::vector<Index> d;
    d.reserve(cores_.size());
    for (const auto& c : cores_) d.push_back(c.phys[0]);
    return d;
}

template <int Legs>
std::vector<Index> TensorTrain<Legs>::ranks() const {
    std::vector<Index> r;
    r.reserve(cores_.size() + 1);
    r.push_back(cores_.empty() ? 1 : cores_.front().left);
    for (const auto& c : cores_) r.push_back(c.right);
    return r;
}

template <int Legs>
Index TensorTrain<Legs>::max_rank() const {
    Index m = 1;
    for (const auto& c : cores_) m = std::max(m, c.right);
    return m;
}

template <int Legs>
Index TensorTrain<Legs>::full_dim() const {
    Index s = 1;
    for (const auto& c : cores_) s *= c.phys[0];
    return s;
}

template class TensorTrain<1>;
template class TensorTrain<2>;

void TruncationPolicy::validate() const {
    if (max_rank < 1) throw DimensionError(fmt::format("max_rank must be >= 1 (got {})", max_rank));
    if (!(threshold >= 0.0) || threshold >= 1.0)
        throw DimensionError(fmt::format("threshold must lie in [0, 1) (got {})", threshold));
}

// ---------------------------------------------------------------------------
// construction

TTState product_state(std::span<const Vector> site_vectors) {
    if (site_vectors.empty()) throw DimensionError("product state needs at least one site");
    std::vector<StateCore> cores;
    for (std::size_t k = 0; k < site_vectors.size(); ++k) {
        const Vector& v = site_vectors[k];
        if (v.size() < 1) throw DimensionError(fmt::format("site {}: empty vector", k));
        if (v.cwiseAbs().maxCoeff() == 0.0) throw DimensionError(fmt::format("site {}: zero vector", k));
        StateCore c(1, {v.size()}, 1);
        for (Index i = 0; i < v.size(); ++i) c(0, i, 0) = v(i);
        cores.push_back(std::move(c));
    }
    return TTState(std::move(cores));
}

TTOperator product_operator(std::span<const Matrix> site_matrices) {
    if (site_matrices.empty()) throw DimensionError("product operator needs at least one site");
    std::vector<OperatorCore> cores;
    for (std::size_t k = 0; k < site_matrices.size(); ++k) {
        const Matrix& m = site_matrices[k];
        if (m.rows() != m.cols() || m.rows() < 1)
            throw DimensionError(fmt::format("site {}: operator matrix must be square", k));
        OperatorCore c(1, {m.rows(), m.cols()}, 1);
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j) c(0, i, j, 0) = m(i, j);
        cores.push_back(std::move(c));
    }
    return TTOperator(std::move(cores));
}

TTOperator identity_operator(std::span<const Index> dims) {
    std::vector<Matrix> ms;
    for (Index d : dims) ms.push_back(Matrix::Identity(d, d));
    return product_operator(ms);
}

TTState zero_state(std::span<const Index> dims) {
    if (dims.empty()) throw DimensionError("zero state needs at least one site");
    std::vector<StateCore> cores;
    for (Index d : dims) cores.emplace_back(1, std::array<Index, 1>{d}, 1);
    return TTState(std::move(cores));
}

namespace {

std::vector<Index> clipped_ranks(std::span<const Index> dims, Index rank) {
    const std::size_t n = dims.size();
    std::vector<Index> r(n + 1, 1);
    constexpr double big = 1e18;
    for (std::size_t k = 1; k < n; ++k) {
        double left = 1, right = 1;
        for (std::size_t j = 0; j < k; ++j) left = std::min(big, left * static_cast<double>(dims[j]));
        for (std::size_t j = k; j < n; ++j) right = std::min(big, right * static_cast<double>(dims[j]));
        r[k] = static_cast<Index>(std::min({static_cast<double>(rank), left, right}));
    }
    return r;
}

Complex gaussian(std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    const double re = dist(rng);
    const double im = dist(rng);
    return {re, im};
}

}  // namespace

TTState random_state(std::span<const Index> dims, Index rank, std::mt19937_64& rng) {
    if (dims.empty()) throw DimensionError("random state needs at least one site");
    const auto r = clipped_ranks(dims, std::max<Index>(rank, 1));
    std::vector<StateCore> cores;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        StateCore c(r[k], {dims[k]}, r[k + 1]);
        for (auto& v : c.data) v = gaussian(rng);
        cores.push_back(std::move(c));
    }
    return TTState(std::move(cores));
}

TTOperator random_operator(std::span<const Index> dims, Index rank, std::mt19937_64& rng) {
    if (dims.empty()) throw DimensionError("random operator needs at least one site");
    std::vector<Index> sq;
    for (Index d : dims) sq.push_back(d * d);
    const auto r = clipped_ranks(sq, std::max<Index>(rank, 1));
    std::vector<OperatorCore> cores;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        OperatorCore c(r[k], {dims[k], dims[k]}, r[k + 1]);
        for (auto& v : c.data) v = gaussian(rng);
        cores.push_back(std::move(c));
    }
    return TTOperator(std::move(cores));
}

// ---------------------------------------------------------------------------
// algebra

namespace {

template <int Legs>
void require_same_dims(const TensorTrain<Legs>& a, const TensorTrain<Legs>& b, const char* what) {
    if (a.order() != b.order())
        throw DimensionError(fmt::format("{}: orders differ ({} vs {})", what, a.order(), b.order()));
    for (std::size_t k = 0; k < a.order(); ++k)
        if (a.core(k).phys != b.core(k).phys)
            throw DimensionError(fmt::format("{}: physical dimensions differ at site {}", what, k));
}

template <int Legs>
TensorTrain<Legs> add_impl(const TensorTrain<Legs>& a, const TensorTrain<Legs>& b) {
    require_same_dims(a, b, "add");
    const std::size_t n = a.order();
    std::vector<Core<Legs>> cores;
    cores.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& ca = a.core(k);
        const auto& cb = b.core(k);
        const Index p = ca.phys_size();
        const bool first = (k == 0);
        const bool last = (k + 1 == n);
        const Index left = first ? 1 : ca.left + cb.left;
        const Index right = last ? 1 : ca.right + cb.right;
        Core<Legs> c(left, ca.phys, right);
        auto put = [&](const Core<Legs>& src, Index l0, Index r0) {
            for (Index x = 0; x < src.left; ++x)
                for (Index s = 0; s < p; ++s)
                    for (Index y = 0; y < src.right; ++y)
                        c.data[static_cast<std::size_t>(((l0 + x) * p + s) * right + r0 + y)] +=
                            src.data[static_cast<std::size_t>((x * p + s) * src.right + y)];
        };
        put(ca, 0, 0);
        put(cb, first ? 0 : ca.left, last ? 0 : ca.right);
        cores.push_back(std::move(c));
    }
    return TensorTrain<Legs>(std::move(cores));
}

template <int Legs>
TensorTrain<Legs> scale_impl(const TensorTrain<Legs>& a, Complex s) {
    TensorTrain<Legs> out = a;
    for (auto& v : out.core(0).data) v *= s;
    return out;
}

}  // namespace

TTState add(const TTState& a, const TTState& b) { return add_impl(a, b); }
TTOperator add(const TTOperator& a, const TTOperator& b) { return add_impl(a, b); }
TTState scale(const TTState& a, Complex s) { return scale_impl(a, s); }
TTOperator scale(const TTOperator& a, Complex s) { return scale_impl(a, s); }

Complex inner(const TTState& a, const TTState& b) {
    require_same_dims(a, b, "inner");
    RowMatrix env = RowMatrix::Ones(1, 1);
    for (std::size_t k = 0; k < a.order(); ++k) {
        const auto& ca = a.core(k);
        const auto& cb = b.core(k);
        const Index d = ca.phys[0];
        // env (ra x rb) * B (rb x d*rb') viewed as (ra*d) x rb'
        RowMatrix t = env * cb.right_unfolding();
        Eigen::Map<const RowMatrix> tv(t.data(), ca.left * d, cb.right);
        env = ca.left_unfolding().adjoint() * tv;
    }
    return env(0, 0);
}

double norm(const TTState& a) {
    if (a.empty()) return 0.0;
    const TTState l = orthonormalize(a, Direction::left);
    const auto& last = l.cores().back();
    return Eigen::Map<const Vector>(last.data.data(), last.size()).norm();
}

Complex expectation(const TTState& a, const TTOperator& h, const TTState& b) {
    require_same_dims(a, b, "expectation");
    if (a.order() != h.order()) throw DimensionError("expectation: operator order differs");
    // env[x][hh] is an (ra x rb) matrix
    std::vector<RowMatrix> env{RowMatrix::Ones(1, 1)};
    for (std::size_t k = 0; k < a.order(); ++k) {
        const auto& ca = a.core(k);
        const auto& ch = h.core(k);
        const auto& cb = b.core(k);
        const Index d = ca.phys[0];
        if (ch.phys[0] != d) throw DimensionError(fmt::format("expectation: dimension mismatch at site {}", k));
        std::vector<RowMatrix> next(static_cast<std::size_t>(ch.right), RowMatrix::Zero(ca.right, cb.right));
        for (Index hl = 0; hl < ch.left; ++hl) {
            // E_h * B_j for each j: (ra x rb) * (rb x rb')
            std::vector<RowMatrix> eb(static_cast<std::size_t>(d));
            for (Index j = 0; j < d; ++j) {
                RowMatrix bj(cb.left, cb.right);
                for (Index x = 0; x < cb.left; ++x)
                    for (Index y = 0; y < cb.right; ++y) bj(x, y) = cb(x, j, y);
                eb[static_cast<std::size_t>(j)] = env[static_cast<std::size_t>(hl)] * bj;
            }
            for (Index hr = 0; hr < ch.right; ++hr) {
                for (Index i = 0; i < d; ++i) {
                    RowMatrix acc = RowMatrix::Zero(ca.left, cb.right);
                    bool any = false;
                    for (Index j = 0; j < d; ++j) {
                        const Complex hv = ch(hl, i, j, hr);
                        if (hv == Complex(0.0)) continue;
                        acc += hv * eb[static_cast<std::size_t>(j)];
                        any = true;
                    }
                    if (!any) continue;
                    RowMatrix ai(ca.left, ca.right);
                    for (Index x = 0; x < ca.left; ++x)
                        for (Index y = 0; y < ca.right; ++y) ai(x, y) = ca(x, i, y);
                    next[static_cast<std::size_t>(hr)] += ai.adjoint() * acc;
                }
            }
        }
        env = std::move(next);
    }
    return env[0](0, 0);
}

TTState apply(const TTOperator& h, const TTState& x) {
    if (h.order() != x.order())
        throw DimensionError(fmt::format("apply: operator has {} sites, state has {}", h.order(), x.order()));
    std::vector<StateCore> cores;
    cores.reserve(x.order());
    for (std::size_t k = 0; k < x.order(); ++k) {
        const auto& ch = h.core(k);
        const auto& cx = x.core(k);
        if (ch.phys[1] != cx.phys[0])
            throw DimensionError(fmt::format("apply: dimension mismatch at site {} ({} vs {})", k, ch.phys[1],
                                             cx.phys[0]));
        const Index d = ch.phys[0];
        const Index dc = ch.phys[1];
        StateCore c(ch.left * cx.left, {d}, ch.right * cx.right);
        for (Index a = 0; a < ch.left; ++a)
            for (Index i = 0; i < d; ++i)
                for (Index j = 0; j < dc; ++j)
                    for (Index b = 0; b < ch.right; ++b) {
                        const Complex hv = ch(a, i, j, b);
                        if (hv == Complex(0.0)) continue;
                        for (Index xl = 0; xl < cx.left; ++xl)
                            for (Index xr = 0; xr < cx.right; ++xr)
                                c(a * cx.left + xl, i, b * cx.right + xr) += hv * cx(xl, j, xr);
                    }
        cores.push_back(std::move(c));
    }
    return TTState(std::move(cores));
}

TTOperator compose(const TTOperator& a, const TTOperator& b) {
    if (a.order() != b.order()) throw DimensionError("compose: operator orders differ");
    std::vector<OperatorCore> cores;
    for (std::size_t k = 0; k < a.order(); ++k) {
        const auto& ca = a.core(k);
        const auto& cb = b.core(k);
        if (ca.phys[1] != cb.phys[0]) throw DimensionError(fmt::format("compose: dimension mismatch at site {}", k));
        const Index d = ca.phys[0];
        OperatorCore c(ca.left * cb.left, {d, cb.phys[1]}, ca.right * cb.right);
        for (Index al = 0; al < ca.left; ++al)
            for (Index ar = 0; ar < ca.right; ++ar)
                for (Index i = 0; i < d; ++i)
                    for (Index j = 0; j < ca.phys[1]; ++j) {
                        const Complex av = ca(al, i, j, ar);
                        if (av == Complex(0.0)) continue;
                        for (Index bl = 0; bl < cb.left; ++bl)
                            for (Index br = 0; br < cb.right; ++br)
                                for (Index m = 0; m < cb.phys[1]; ++m)
                                    c(al * cb.left + bl, i, m, ar * cb.right + br) += av * cb(bl, j, m, br);
                    }
        cores.push_back(std::move(c));
    }
    return TTOperator(std::move(cores));
}

// ---------------------------------------------------------------------------
// orthonormalization and rounding

namespace {

RowMatrix thin_q(const Eigen::HouseholderQR<RowMatrix>& qr, Index rows, Index k) {
    RowMatrix q = RowMatrix::Identity(rows, k);
    q.applyOnTheLeft(qr.householderQ());
    return q;
}

/// Left-orthonormalize core k and push the triangular factor into core k+1.
void left_step(std::vector<StateCore>& cores, std::size_t k) {
    auto& c = cores[k];
    auto& next = cores[k + 1];
    const Index m = c.left * c.phys[0];
    const Index n = c.right;
    const Index r = std::min(m, n);
    Eigen::HouseholderQR<RowMatrix> qr(c.left_unfolding());
    RowMatrix q = thin_q(qr, m, r);
    RowMatrix rr = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
    RowMatrix moved = rr * next.right_unfolding();
    StateCore nc(c.left, c.phys, r);
    nc.left_unfolding() = q;
    StateCore nn(r, next.phys, next.right);
    nn.right_unfolding() = moved;
    c = std::move(nc);
    next = std::move(nn);
}

/// Right-orthonormalize core k and push the factor into core k-1.
void right_step(std::vector<StateCore>& cores, std::size_t k) {
    auto& c = cores[k];
    auto& prev = cores[k - 1];
    const Index m = c.phys[0] * c.right;
    const Index n = c.left;
    const Index r = std::min(m, n);
    RowMatrix mt = c.right_unfolding().adjoint();
    Eigen::HouseholderQR<RowMatrix> qr(mt);
    RowMatrix q = thin_q(qr, m, r);
    RowMatrix rr = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
    RowMatrix moved = prev.left_unfolding() * rr.adjoint();
    StateCore nc(r, c.phys, c.right);
    nc.right_unfolding() = q.adjoint();
    StateCore np(prev.left, prev.phys, r);
    np.left_unfolding() = moved;
    c = std::move(nc);
    prev = std::move(np);
}

}  // namespace

TTState orthonormalize(const TTState& x, Direction direction) {
    std::vector<StateCore> cores = x.cores();
    const std::size_t n = cores.size();
    if (direction == Direction::left) {
        for (std::size_t k = 0; k + 1 < n; ++k) left_step(cores, k);
    } else {
        for (std::size_t k = n; k-- > 1;) right_step(cores, k);
    }
    return TTState(std::move(cores));
}

Index kept_rank(std::span<const double> sv, const TruncationPolicy& policy) {
    if (sv.empty()) return 0;
    const double lead = sv[0];
    if (!(lead > 0.0)) return 1;
    const double cut = std::max(policy.threshold, kAbsoluteCutoff) * lead;
    Index keep = 0;
    for (double s : sv) {
        if (s > cut)
            ++keep;
        else
            break;
    }
    keep = std::max<Index>(keep, 1);
    return std::min(keep, policy.max_rank);
}

TTState truncate(const TTState& x, const TruncationPolicy& policy) {
    policy.validate();
    TTState l = orthonormalize(x, Direction::left);
    std::vector<StateCore> cores = l.cores();
    const std::size_t n = cores.size();
    const double total = Eigen::Map<const Vector>(cores.back().data.data(), cores.back().size()).norm();
    if (!(total > 0.0)) return zero_state(x.dims());
    for (std::size_t k = n; k-- > 1;) {
        auto& c = cores[k];
        auto& prev = cores[k - 1];
        const ThinSvd svd = thin_svd(RowMatrix(c.right_unfolding()));
        const RealVector& s = svd.s;
        std::vector<double> sv(s.data(), s.data() + s.size());
        const Index r = kept_rank(sv, policy);
        RowMatrix vt = svd.v.leftCols(r).adjoint();
        RowMatrix us = svd.u.leftCols(r) * s.head(r).asDiagonal();
        RowMatrix moved = prev.left_unfolding() * us;
        StateCore nc(r, c.phys, c.right);
        nc.right_unfolding() = vt;
        StateCore np(prev.left, prev.phys, r);
        np.left_unfolding() = moved;
        c = std::move(nc);
        prev = std::move(np);
    }
    return TTState(std::move(cores));
}

// ---------------------------------------------------------------------------
// dense conversion

Index dense_size(std::span<const Index> dims) {
    Index s = 1;
    for (Index d : dims) {
        if (s > std::numeric_limits<Index>::max() / std::max<Index>(d, 1)) return std::numeric_limits<Index>::max();
        s *= d;
    }
    return s;
}

void check_dense_cap(std::span<const Index> dims, Index cap) {
    const Index s = dense_size(dims);
    if (s > cap) throw CapExceeded(s, cap);
}

DenseState to_dense(const TTState& x, Index cap) {
    const auto dims = x.dims();
    check_dense_cap(dims, cap);
    RowMatrix m = RowMatrix::Ones(1, 1);
    for (const auto& c : x.cores()) {
        RowMatrix t = m * c.right_unfolding();
        m = Eigen::Map<const RowMatrix>(t.data(), t.rows() * c.phys[0], c.right);
    }
    DenseState out;
    out.dims = dims;
    out.data = Eigen::Map<const Vector>(m.data(), m.size());
    return out;
}

Matrix to_dense(const TTOperator& h, Index cap) {
    const auto dims = h.dims();
    check_dense_cap(dims, cap);
    std::vector<Matrix> blocks{Matrix::Ones(1, 1)};
    Index dim = 1;
    for (const auto& c : h.cores()) {
        const Index d = c.phys[0];
        const Index nd = dim * d;
        std::vector<Matrix> next(static_cast<std::size_t>(c.right), Matrix::Zero(nd, nd));
        for (Index a = 0; a < c.left; ++a) {
            const Matrix& b = blocks[static_cast<std::size_t>(a)];
            for (Index r = 0; r < c.right; ++r)
                for (Index i = 0; i < d; ++i)
                    for (Index j = 0; j < d; ++j) {
                        const Complex hv = c(a, i, j, r);
                        if (hv == Complex(0.0)) continue;
                        Matrix& out = next[static_cast<std::size_t>(r)];
                        // rows I*d+i, cols J*d+j of a column-major matrix
                        Eigen::Map<Matrix, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>> view(
                            out.data() + j * nd + i, dim, dim, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(d * nd, d));
                        view += hv * b;
                    }
        }
        blocks = std::move(next);
        dim = nd;
    }
    return blocks[0];
}

TTState from_dense(std::span<const Index> dims, const Vector& data, const TruncationPolicy& policy, Index cap) {
    policy.validate();
    if (dims.empty()) throw DimensionError("from_dense: no dimensions");
    check_dense_cap(dims, cap);
    if (dense_size(dims) != data.size())
        throw DimensionError(
            fmt::format("from_dense: data has {} entries, dims require {}", data.size(), dense_size(dims)));
    if (!(data.norm() > 0.0)) return zero_state(dims);
    const std::size_t n = dims.size();
    std::vector<StateCore> cores;
    RowMatrix rest = Eigen::Map<const RowMatrix>(data.data(), 1, data.size());
    Index r = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const Index d = dims[k];
        const Index cols = rest.size() / (r * d);
        RowMatrix m = Eigen::Map<const RowMatrix>(rest.data(), r * d, cols);
        const ThinSvd svd = thin_svd(m);
        const RealVector& s = svd.s;
        std::vector<double> sv(s.data(), s.data() + s.size());
        const Index keep = kept_rank(sv, policy);
        StateCore c(r, {d}, keep);
        c.left_unfolding() = svd.u.leftCols(keep);
        cores.push_back(std::move(c));
        rest = s.head(keep).asDiagonal() * svd.v.leftCols(keep).adjoint();
        r = keep;
    }
    StateCore last(r, {dims[n - 1]}, 1);
    last.right_unfolding() = Eigen::Map<const RowMatrix>(rest.data(), r, dims[n - 1]);
    cores.push_back(std::move(last));
    return TTState(std::move(cores));
}

TTState from_dense(const DenseState& t, const TruncationPolicy& policy, Index cap) {
    return from_dense(t.dims, t.data, policy, cap);
}

double row_sum_bound(const TTOperator& h) {
    RealMatrix v = RealMatrix::Ones(1, 1);
    for (const auto& c : h.cores()) {
        RealMatrix b = RealMatrix::Zero(c.left, c.right);
        for (Index a = 0; a < c.left; ++a)
            for (Index r = 0; r < c.right; ++r) {
                double best = 0.0;
                for (Index i = 0; i < c.phys[0]; ++i) {
                    double row = 0.0;
                    for (Index j = 0; j < c.phys[1]; ++j) row += std::abs(c(a, i, j, r));
                    best = std::max(best, row);
                }
                b(a, r) = best;
            }
        v = v * b;
    }
    return v(0, 0);
}

}  // namespace chaintt
