#pragma once

#include <vector>

#include "chaintt/tensor_train.hpp"

namespace chaintt {

/// Topology shared by every chain model.
struct ChainSpec {
    Index n_site = 2;
    bool periodic = false;
    bool homogen = true;

    void validate() const;
    /// Number of nearest-neighbour bonds: N for rings, N-1 for open chains.
    Index n_bonds() const { return periodic ? n_site : n_site - 1; }
};

/// Matrix representations on a truncated occupation basis {|0>, ..., |d-1>}.
struct LadderOps {
    Matrix raise;
    Matrix lower;
    Matrix number;
    /// (raise + lower) / sqrt(2)
    Matrix position;
    /// i (raise - lower) / sqrt(2)
    Matrix momentum;
    Matrix identity;
};

LadderOps ladder_ops(Index n_dim);

/**
 * Terms living on one site: the single-site operator S, the coupling
 * operators L (left factor of the bond to the next site) and M (right
 * factor of the bond from the previous site). L[λ] on site i pairs with
 * M[λ] on site i+1; on rings site N pairs with site 1.
 */
struct SiteParts {
    Matrix single;
    std::vector<Matrix> left;
    std::vector<Matrix> right;
};

/// SLIM parts for a whole chain, one entry per site.
struct SlimParts {
    std::vector<SiteParts> sites;

    /// The same parts on all `n_site` sites.
    static SlimParts homogeneous(Index n_site, SiteParts parts);

    Index dim(std::size_t site) const { return sites[site].single.rows(); }
    /// Coupling count xi of the bond (site, site+1), wrapping on rings.
    Index couplings(std::size_t site) const { return static_cast<Index>(sites[site].left.size()); }
};

/// Checks pairing and shape consistency against the topology.
void validate_parts(const ChainSpec& chain, const SlimParts& parts);

/// TT operator of the chain Hamiltonian in supercore form. Interior ranks
/// are 2 + xi_k for open chains and 2 + xi_k + xi_N on rings.
TTOperator slim_to_tt(const ChainSpec& chain, const SlimParts& parts);

/// Two-site operator of bond k, i.e. sum_λ L_{k,λ} ⊗ M_{k+1,λ}, ordered (site k, site k+1 mod N).
Matrix bond_coupling(const ChainSpec& chain, const SlimParts& parts, Index bond);

/// A model Hamiltonian in both SLIM-part and assembled TT form.
struct ChainHamiltonian {
    ChainSpec chain;
    SlimParts parts;
    TTOperator op;

    ChainHamiltonian() = default;
    ChainHamiltonian(ChainSpec c, SlimParts p);

    std::vector<Index> dims() const { return op.dims(); }
};

}  // namespace chaintt
