#pragma once

#include <array>
#include <random>
#include <span>
#include <vector>

#include "chaintt/types.hpp"

namespace chaintt {

/**
 * One TT core. `Legs` is the number of physical indices: 1 for states,
 * 2 (row, column) for operators. Storage is row-major in the index order
 * (left rank, physical..., right rank), so both the left unfolding
 * ((left*phys) x right) and the right unfolding (left x (phys*right)) are
 * plain views of `data`.
 */
template <int Legs>
struct Core {
    static_assert(Legs == 1 || Legs == 2);

    Index left = 1;
    std::array<Index, Legs> phys{};
    Index right = 1;
    std::vector<Complex> data;

    Core() = default;
    Core(Index left_rank, std::array<Index, Legs> phys_dims, Index right_rank)
        : left(left_rank), phys(phys_dims), right(right_rank),
          data(static_cast<std::size_t>(left_rank * phys_size_of(phys_dims) * right_rank)) {}

    static Index phys_size_of(const std::array<Index, Legs>& p) {
        Index s = 1;
        for (Index v : p) s *= v;
        return s;
    }
    Index phys_size() const { return phys_size_of(phys); }
    Index size() const { return left * phys_size() * right; }

    Complex& operator()(Index a, Index i, Index b)
        requires(Legs == 1)
    {
        return data[static_cast<std::size_t>((a * phys[0] + i) * right + b)];
    }
    const Complex& operator()(Index a, Index i, Index b) const
        requires(Legs == 1)
    {
        return data[static_cast<std::size_t>((a * phys[0] + i) * right + b)];
    }
    Complex& operator()(Index a, Index i, Index j, Index b)
        requires(Legs == 2)
    {
        return data[static_cast<std::size_t>(((a * phys[0] + i) * phys[1] + j) * right + b)];
    }
    const Complex& operator()(Index a, Index i, Index j, Index b) const
        requires(Legs == 2)
    {
        return data[static_cast<std::size_t>(((a * phys[0] + i) * phys[1] + j) * right + b)];
    }

    Eigen::Map<RowMatrix> left_unfolding() { return {data.data(), left * phys_size(), right}; }
    Eigen::Map<const RowMatrix> left_unfolding() const { return {data.data(), left * phys_size(), right}; }
    Eigen::Map<RowMatrix> right_unfolding() { return {data.data(), left, phys_size() * right}; }
    Eigen::Map<const RowMatrix> right_unfolding() const { return {data.data(), left, phys_size() * right}; }
};

using StateCore = Core<1>;
using OperatorCore = Core<2>;

/**
 * Linear chain of cores with boundary ranks 1. States (`Legs == 1`) and
 * operators (`Legs == 2`, square on every site) share the container; the
 * algebra below dispatches on the alias.
 */
template <int Legs>
class TensorTrain {
public:
    using core_type = Core<Legs>;

    TensorTrain() = default;
    /// Validates rank chaining, boundary ranks and square operator cores.
    explicit TensorTrain(std::vector<core_type> cores);

    std::size_t order() const { return cores_.size(); }
    bool empty() const { return cores_.empty(); }

    /// Physical (row) dimension per site.
    std::vector<Index> dims() const;
    /// r_0 .. r_N, with r_0 = r_N = 1.
    std::vector<Index> ranks() const;
    Index max_rank() const;
    /// Product of physical dimensions (dimension of the full Hilbert space).
    Index full_dim() const;

    const core_type& core(std::size_t k) const { return cores_[k]; }
    core_type& core(std::size_t k) { return cores_[k]; }
    const std::vector<core_type>& cores() const { return cores_; }
    std::vector<core_type>& cores() { return cores_; }

private:
    std::vector<core_type> cores_;
};

using TTState = TensorTrain<1>;
using TTOperator = TensorTrain<2>;

/// Rank bound plus relative singular-value cutoff used by every rounding step.
struct TruncationPolicy {
    Index max_rank = 1 << 20;
    double threshold = 0.0;

    void validate() const;
};

/// Absolute floor (relative to the leading singular value) always applied by rounding.
inline constexpr double kAbsoluteCutoff = 1e-14;

enum class Direction { left, right };

// -- construction -----------------------------------------------------------

/// Rank-1 state from one vector per site.
TTState product_state(std::span<const Vector> site_vectors);
/// Rank-1 operator from one square matrix per site.
TTOperator product_operator(std::span<const Matrix> site_matrices);
TTOperator identity_operator(std::span<const Index> dims);
TTState zero_state(std::span<const Index> dims);
/// Gaussian random cores with the given interior rank (clipped to the
/// largest meaningful rank at each cut).
TTState random_state(std::span<const Index> dims, Index rank, std::mt19937_64& rng);
TTOperator random_operator(std::span<const Index> dims, Index rank, std::mt19937_64& rng);

// -- algebra ----------------------------------------------------------------

TTState add(const TTState& a, const TTState& b);
TTOperator add(const TTOperator& a, const TTOperator& b);
TTState scale(const TTState& a, Complex s);
TTOperator scale(const TTOperator& a, Complex s);

/// <a|b>, conjugating the left argument.
Complex inner(const TTState& a, const TTState& b);
double norm(const TTState& a);
/// <a|H|b> without forming H|b>.
Complex expectation(const TTState& a, const TTOperator& h, const TTState& b);

/// H x; interior ranks multiply.
TTState apply(const TTOperator& h, const TTState& x);
/// Operator product A B (A applied after B).
TTOperator compose(const TTOperator& a, const TTOperator& b);

TTState orthonormalize(const TTState& x, Direction direction);
/// SVD-based rounding; result is right-orthonormal (norm in the first core).
TTState truncate(const TTState& x, const TruncationPolicy& policy);

/// Number of singular values kept under `policy` for a descending list.
Index kept_rank(std::span<const double> singular_values, const TruncationPolicy& policy);

// -- dense conversion -------------------------------------------------------

/// Dense state tensor, site 1 slowest-varying.
struct DenseState {
    std::vector<Index> dims;
    Vector data;
};

Index dense_size(std::span<const Index> dims);
void check_dense_cap(std::span<const Index> dims, Index cap);

DenseState to_dense(const TTState& x, Index cap = kDefaultDenseCap);
/// Matricized operator (rows/cols flattened site-major).
Matrix to_dense(const TTOperator& h, Index cap = kDefaultDenseCap);
TTState from_dense(const DenseState& t, const TruncationPolicy& policy, Index cap = kDefaultDenseCap);
/// TT-SVD of a flat vector with the given dims.
TTState from_dense(std::span<const Index> dims, const Vector& data, const TruncationPolicy& policy,
                   Index cap = kDefaultDenseCap);

/// Cheap upper bound of the max row-sum norm of dense(h).
double row_sum_bound(const TTOperator& h);

}  // namespace chaintt
