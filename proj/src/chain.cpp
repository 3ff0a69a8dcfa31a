#include "chaintt/chain.hpp"

#include <cmath>

#include <fmt/format.h>
#include <unsupported/Eigen/KroneckerProduct>

namespace chaintt {

void ChainSpec::validate() const {
    if (n_site < 2) throw ModelError(fmt::format("n_site must be >= 2 (got {})", n_site));
}

LadderOps ladder_ops(Index n_dim) {
    if (n_dim < 2) throw ModelError(fmt::format("local dimension must be >= 2 (got {})", n_dim));
    LadderOps ops;
    ops.lower = Matrix::Zero(n_dim, n_dim);
    for (Index k = 1; k < n_dim; ++k) ops.lower(k - 1, k) = std::sqrt(static_cast<double>(k));
    ops.raise = ops.lower.transpose();
    ops.number = ops.raise * ops.lower;
    ops.position = (ops.raise + ops.lower) / std::sqrt(2.0);
    ops.momentum = Complex(0.0, 1.0) * (ops.raise - ops.lower) / std::sqrt(2.0);
    ops.identity = Matrix::Identity(n_dim, n_dim);
    return ops;
}

SlimParts SlimParts::homogeneous(Index n_site, SiteParts parts) {
    SlimParts out;
    out.sites.assign(static_cast<std::size_t>(n_site), parts);
    return out;
}

void validate_parts(const ChainSpec& chain, const SlimParts& parts) {
    chain.validate();
    const auto n = static_cast<std::size_t>(chain.n_site);
    if (parts.sites.size() != n)
        throw DimensionError(fmt::format("SLIM parts cover {} sites, chain has {}", parts.sites.size(), n));
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = parts.sites[k];
        const Index d = s.single.rows();
        if (d < 1 || s.single.cols() != d)
            throw DimensionError(fmt::format("site {}: single-site operator must be square", k));
        for (const auto* list : {&s.left, &s.right})
            for (const auto& m : *list)
                if (m.rows() != d || m.cols() != d)
                    throw DimensionError(
                        fmt::format("site {}: coupling operator is {}x{}, expected {}x{}", k, m.rows(), m.cols(), d, d));
        const bool has_bond = chain.periodic || k + 1 < n;
        if (has_bond) {
            const auto& next = parts.sites[(k + 1) % n];
            if (s.left.size() != next.right.size())
                throw DimensionError(fmt::format("bond {}-{}: {} left operators but {} right operators", k,
                                                 (k + 1) % n, s.left.size(), next.right.size()));
        }
    }
}

TTOperator slim_to_tt(const ChainSpec& chain, const SlimParts& parts) {
    validate_parts(chain, parts);
    const auto n = static_cast<std::size_t>(chain.n_site);
    const Index wrap = chain.periodic ? parts.couplings(n - 1) : 0;

    // block offsets at the cut right of site k: [done | pending xi_k | identity | wrap]
    auto cut_rank = [&](std::size_t k) { return 2 + parts.couplings(k) + wrap; };
    auto ident_slot = [&](std::size_t k) { return 1 + parts.couplings(k); };
    auto wrap_slot = [&](std::size_t k) { return 2 + parts.couplings(k); };

    auto put = [](OperatorCore& c, Index a, Index b, const Matrix& m) {
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j) c(a, i, j, b) += m(i, j);
    };

    std::vector<OperatorCore> cores;
    cores.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = parts.sites[k];
        const Index d = parts.dim(k);
        const Matrix id = Matrix::Identity(d, d);
        const bool first = (k == 0);
        const bool last = (k + 1 == n);
        const Index left = first ? 1 : cut_rank(k - 1);
        const Index right = last ? 1 : cut_rank(k);
        OperatorCore c(left, {d, d}, right);

        if (first) {
            put(c, 0, 0, s.single);
            for (Index l = 0; l < parts.couplings(k); ++l) put(c, 0, 1 + l, s.left[static_cast<std::size_t>(l)]);
            put(c, 0, ident_slot(k), id);
            for (Index w = 0; w < wrap; ++w) put(c, 0, wrap_slot(k) + w, s.right[static_cast<std::size_t>(w)]);
        } else if (last) {
            const Index xi_prev = parts.couplings(k - 1);
            put(c, 0, 0, id);
            for (Index l = 0; l < xi_prev; ++l) put(c, 1 + l, 0, s.right[static_cast<std::size_t>(l)]);
            put(c, ident_slot(k - 1), 0, s.single);
            for (Index w = 0; w < wrap; ++w) put(c, wrap_slot(k - 1) + w, 0, s.left[static_cast<std::size_t>(w)]);
        } else {
            const Index xi_prev = parts.couplings(k - 1);
            put(c, 0, 0, id);
            for (Index l = 0; l < xi_prev; ++l) put(c, 1 + l, 0, s.right[static_cast<std::size_t>(l)]);
            const Index row = ident_slot(k - 1);
            put(c, row, 0, s.single);
            for (Index l = 0; l < parts.couplings(k); ++l) put(c, row, 1 + l, s.left[static_cast<std::size_t>(l)]);
            put(c, row, ident_slot(k), id);
            for (Index w = 0; w < wrap; ++w) put(c, wrap_slot(k - 1) + w, wrap_slot(k) + w, id);
        }
        cores.push_back(std::move(c));
    }
    return TTOperator(std::move(cores));
}

Matrix bond_coupling(const ChainSpec& chain, const SlimParts& parts, Index bond) {
    const auto n = static_cast<std::size_t>(chain.n_site);
    const auto k = static_cast<std::size_t>(bond);
    if (bond < 0 || bond >= chain.n_bonds()) throw DimensionError(fmt::format("bond {} out of range", bond));
    const auto& a = parts.sites[k];
    const auto& b = parts.sites[(k + 1) % n];
    const Index da = a.single.rows();
    const Index db = b.single.rows();
    Matrix out = Matrix::Zero(da * db, da * db);
    for (std::size_t l = 0; l < a.left.size(); ++l) out += Eigen::kroneckerProduct(a.left[l], b.right[l]).eval();
    return out;
}

ChainHamiltonian::ChainHamiltonian(ChainSpec c, SlimParts p)
    : chain(c), parts(std::move(p)), op(slim_to_tt(chain, parts)) {}

}  // namespace chaintt
