#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chaintt/chain.hpp"
#include "chaintt/models.hpp"
#include "chaintt/observables.hpp"
#include "chaintt/tensor_train.hpp"

namespace chaintt {

enum class TdseSolver { s2, s4, s6, lt, sm, yn, kl, qe };

TdseSolver parse_tdse_solver(const std::string& name);
std::string to_string(TdseSolver solver);
bool is_symmetric_euler(TdseSolver solver);
bool is_splitting(TdseSolver solver);

struct TdseConfig {
    Index num_steps = 50;
    double step_size = 20.0;
    Index sub_steps = 5;
    TdseSolver solver = TdseSolver::s2;
    bool normalize = false;
    TruncationPolicy truncation{8, 1e-12};
    /// Symmetric Euler schemes propagate with H - E_ref (E_ref = <psi0|H|psi0>)
    /// and restore the phase exp(-i E_ref t) afterwards.
    bool center_energy = true;
    Index dense_cap = kDefaultDenseCap;

    void validate() const;
    double sub_step() const { return step_size / static_cast<double>(sub_steps); }
};

// -- initial states ---------------------------------------------------------

enum class PacketKind { fundamental, gaussian, sech, coherent };

PacketKind parse_packet_kind(const std::string& name);

struct PacketSpec {
    PacketKind kind = PacketKind::fundamental;
    /// Center site (0-based); negative selects N/2.
    Index center = -1;
    double width = 1.0;
    double momentum = 0.0;
    /// Explicit single-excitation coefficients (fundamental only; empty = unit at center).
    std::vector<Complex> coeffs;
    /// Coherent displacements <R_i> per site (coherent only).
    std::vector<double> displacement;
};

/// Normalized single-excitation amplitudes of a packet on N sites.
std::vector<Complex> packet_coefficients(const PacketSpec& spec, Index n_site);

/**
 * sum_j coeffs[j] |0 .. 1_j .. 0> as a rank-2 TT. The local "excited"
 * basis index is `excited_index` on every site (1 for bare two-level or
 * phonon sites, d_ph for coupled sites where the exciton factor is slowest).
 */
TTState initial_fundamental(const std::vector<Index>& dims, const std::vector<Complex>& coeffs,
                            Index excited_index = 1);

struct CoherentState {
    TTState state;
    std::vector<Complex> zeta;
    /// Weight of the untruncated coherent vector captured by the basis, per site.
    std::vector<double> weight;
    /// Set when some site keeps less than 99% of its weight.
    bool truncation_warning = false;
};

/// zeta_i = <R_i> sqrt(m_i nu~_i / 2).
std::vector<Complex> coherent_zeta(const PhononModel& model, const std::vector<double>& displacement);
CoherentState initial_coherent(const PhononModel& model, const std::vector<double>& displacement, Index n_dim);
CoherentState initial_coherent(const std::vector<Complex>& zeta, Index n_dim);

// -- propagators ------------------------------------------------------------

/// psi_next = psi_prev - 2i Phi_order(h H) psi_curr with Phi the odd Taylor polynomial of sin.
TTState step_symmetric(const TTOperator& h, const TTState& prev, const TTState& curr, double dt, int order,
                       const TruncationPolicy& policy);

/// Yoshida triple-jump weights (w1, w0, w1).
std::array<double, 3> yoshida_weights();
/// 8th-order 15-stage symmetric composition weights.
const std::array<double, 15>& kahan_li_weights();

/**
 * Nearest-neighbour splitting propagator. Bonds are colored into
 * even/odd groups (three groups on odd rings); each bond carries its
 * coupling plus half of the single-site terms of both ends (the full term
 * for chain ends). Two-site exponentials are cached per step length.
 */
class SplittingPropagator {
public:
    SplittingPropagator(const ChainHamiltonian& h, TdseSolver scheme, TruncationPolicy policy);

    TTState step(const TTState& psi, double dt);
    Index group_count() const { return static_cast<Index>(groups_.size()); }
    bool three_group_split() const { return groups_.size() == 3; }
    /// Dense sum of the bond Hamiltonians of one group (for tests).
    const Matrix& bond_hamiltonian(Index bond) const { return bond_h_[static_cast<std::size_t>(bond)]; }
    const std::vector<std::vector<Index>>& groups() const { return groups_; }

private:
    struct Gate {
        Index bond;
        Matrix u;
    };
    const std::vector<Gate>& gates(std::size_t group, double tau);
    TTState apply_group(const TTState& psi, std::size_t group, double tau);

    ChainSpec chain_;
    std::vector<Index> dims_;
    TdseSolver scheme_;
    TruncationPolicy policy_;
    std::vector<Matrix> bond_h_;
    std::vector<std::vector<Index>> groups_;
    std::map<std::pair<std::size_t, double>, std::vector<Gate>> cache_;
};

struct TdseResult {
    std::vector<ObservableRecord> records;
    TTState final_state;
    double final_time = 0.0;
    double energy_reference = 0.0;
};

/**
 * Main-step loop. Records are taken at t0 (when `record_initial`) and after
 * each main step; the ACF uses `acf_reference` (psi0 when null).
 */
TdseResult propagate(const ChainHamiltonian& h, const TTState& psi0, const TdseConfig& cfg,
                     const QuantumObserver& observer, double t0 = 0.0, const TTState* acf_reference = nullptr,
                     bool record_initial = true);

/// Exact propagation of the matricized Hamiltonian via its eigendecomposition.
TdseResult propagate_dense(const TTOperator& h, const TTState& psi0, const TdseConfig& cfg,
                           const QuantumObserver& observer, double t0 = 0.0, const TTState* acf_reference = nullptr,
                           bool record_initial = true);

/// exp(-i H t) psi for a dense Hermitian H.
Vector evolve_dense(const Matrix& h, const Vector& psi, double t);

// -- analytic reference -----------------------------------------------------

/// J_{i-i0}(2 beta t)^2, the infinite-chain single-excitation population.
double bessel_population(Index i, Index i0, double beta, double t);
/// Populations on all sites of a homogeneous exciton chain.
std::vector<double> bessel_reference(const ExcitonModel& model, Index i0, double t);

}  // namespace chaintt
