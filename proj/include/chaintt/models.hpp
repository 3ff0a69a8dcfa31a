#pragma once

#include <string>
#include <vector>

#include "chaintt/chain.hpp"

namespace chaintt {

/// A named local operator, one matrix per site (all sites share the index order).
struct LocalObservable {
    std::string name;
    std::vector<Matrix> per_site;
};

/// Expand a parameter list: one value is broadcast, otherwise the length must match.
std::vector<double> expand_parameter(const std::vector<double>& values, Index count, const std::string& name,
                                     bool homogen);

/**
 * Exciton chain of two-state sites,
 *   H = sum_i alpha_i b_i^+ b_i + sum_i beta_i (b_i^+ b_{i+1} + b_i b_{i+1}^+) + eta.
 * `alpha` is per site; `beta` per bond (N on rings, N-1 on open chains).
 */
class ExcitonModel {
public:
    ExcitonModel(ChainSpec chain, std::vector<double> alpha, std::vector<double> beta, double eta);

    const ChainSpec& chain() const { return chain_; }
    const std::vector<double>& alpha() const { return alpha_; }
    const std::vector<double>& beta() const { return beta_; }
    double eta() const { return eta_; }
    /// beta of the bond (i, i+1); zero for the missing wrap bond of open chains.
    double bond_beta(Index i) const;

    SlimParts slim(Index n_dim) const;
    ChainHamiltonian hamiltonian(Index n_dim) const { return {chain_, slim(n_dim)}; }

    /// N x N hopping matrix of the single-exciton manifold (without eta).
    RealMatrix single_exciton_matrix() const;
    /// Ground level eta, the N single-exciton levels and, when `two_quanta`
    /// is set (rings only), the N(N-1)/2 two-quanta levels; lowest `n_levels`.
    std::vector<double> exact_levels(Index n_levels, bool two_quanta = false) const;
    /// Two-quanta levels of a homogeneous ring (hard-core bosons mapped to
    /// free fermions with antiperiodic boundary), ascending.
    std::vector<double> two_quanta_levels() const;

    std::vector<LocalObservable> observables(Index n_dim) const;

private:
    ChainSpec chain_;
    std::vector<double> alpha_;
    std::vector<double> beta_;
    double eta_;
};

/**
 * Harmonic lattice,
 *   H = 1/2 sum P_i^2/m_i + 1/2 sum m_i nu_i^2 R_i^2 + 1/2 sum mu_i omg_i^2 (R_i - R_{i+1})^2,
 * quantized with local effective frequencies nu~ and bond couplings omg~.
 */
class PhononModel {
public:
    PhononModel(ChainSpec chain, std::vector<double> mass, std::vector<double> nu, std::vector<double> omg);

    const ChainSpec& chain() const { return chain_; }
    const std::vector<double>& mass() const { return mass_; }
    const std::vector<double>& nu() const { return nu_; }
    const std::vector<double>& omg() const { return omg_; }
    /// Bond frequency of (i, i+1); zero for the missing wrap bond of open chains.
    double bond_omg(Index i) const;
    /// Reduced mass of bond (i, i+1).
    double reduced_mass(Index i) const;
    const std::vector<double>& nu_eff() const { return nu_eff_; }
    /// omg~ per bond slot (length N, last entry zero on open chains).
    const std::vector<double>& omg_eff() const { return omg_eff_; }
    /// sqrt(2 m_i nu~_i): conversion between R_i and (c^+ + c).
    double length_scale(Index i) const;

    SlimParts slim(Index n_dim) const;
    ChainHamiltonian hamiltonian(Index n_dim) const { return {chain_, slim(n_dim)}; }

    double potential(const RealVector& q) const;
    double kinetic(const RealVector& p) const;
    RealVector force(const RealVector& q) const;
    RealMatrix hess_pot() const;
    RealMatrix hess_kin() const;

    /// Normal-mode frequencies in ascending order.
    RealVector normal_modes() const;
    /// Lowest `n_levels` values of sum_k (n_k + 1/2) Omega_k.
    std::vector<double> exact_levels(Index n_levels) const;

    std::vector<LocalObservable> observables(Index n_dim) const;

private:
    void check_length(const RealVector& v, const char* what) const;

    ChainSpec chain_;
    std::vector<double> mass_;
    std::vector<double> nu_;
    std::vector<double> omg_;
    std::vector<double> nu_eff_;
    std::vector<double> omg_eff_;
};

/// Second-quantized EPC constants. Entry i refers to site i; entries that
/// would need a missing neighbour of an open chain are zero.
struct BarredConstants {
    std::vector<double> chi_bar;
    std::vector<double> rho_bar;
    std::vector<double> rho_bbar;
    std::vector<double> sig_bar;
    std::vector<double> sig_bbar;
    std::vector<double> tau_bar;
    std::vector<double> tau_bbar;
};

/// Excitons coupled to phonons through chi, rho, sigma (per site) and tau (per bond).
class CoupledModel {
public:
    CoupledModel(ExcitonModel exciton, PhononModel phonon, std::vector<double> chi, std::vector<double> rho,
                 std::vector<double> sig, std::vector<double> tau);

    const ChainSpec& chain() const { return exciton_.chain(); }
    const ExcitonModel& exciton() const { return exciton_; }
    const PhononModel& phonon() const { return phonon_; }
    const std::vector<double>& chi() const { return chi_; }
    const std::vector<double>& rho() const { return rho_; }
    const std::vector<double>& sig() const { return sig_; }
    const std::vector<double>& tau() const { return tau_; }
    double bond_tau(Index i) const;
    const BarredConstants& barred() const { return barred_; }

    /// Parts on the product site space (exciton index slow, phonon fast).
    SlimParts slim(Index dim_ex, Index dim_ph) const;
    ChainHamiltonian hamiltonian(Index dim_ex, Index dim_ph) const { return {chain(), slim(dim_ex, dim_ph)}; }

    /// True when chi, rho and tau all vanish.
    bool sigma_only() const;
    /// sigma_i (q_{i+1} - q_{i-1}) per site.
    RealVector qu_coupling(const RealVector& q) const;
    /// Force on each site from the exciton populations |a_i|^2.
    RealVector cl_coupling(const Vector& a) const;

    std::vector<LocalObservable> observables(Index dim_ex, Index dim_ph) const;

private:
    void require_sigma_only() const;

    ExcitonModel exciton_;
    PhononModel phonon_;
    std::vector<double> chi_;
    std::vector<double> rho_;
    std::vector<double> sig_;
    std::vector<double> tau_;
    BarredConstants barred_;
};

}  // namespace chaintt
