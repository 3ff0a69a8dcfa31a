#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chaintt/models.hpp"
#include "chaintt/tensor_train.hpp"

namespace chaintt {

/// Mean value with its standard deviation.
struct Moment {
    double mean = 0.0;
    double uncertainty = 0.0;
};

/**
 * Everything measured at one output point of a run: a TISE level, a main
 * time step of a TDSE/QCMD/CEoM run, or t = 0.
 */
struct ObservableRecord {
    std::string kind;  // tise | tdse | qcmd | ceom
    Index index = 0;
    double time = 0.0;
    double energy = 0.0;
    std::map<std::string, double> energy_parts;
    double norm = 1.0;
    Complex acf{1.0, 0.0};
    /// Reduced density matrix per site (quantum runs only).
    std::vector<Matrix> densities;
    /// Per-site populations of the local basis states (diagonal of the densities).
    std::vector<std::vector<double>> populations;
    /// Per-site local expectation values, keyed by observable name
    /// (quantum_number, phonon_number, position, momentum).
    std::map<std::string, std::vector<Moment>> sites;
    /// Optional snapshot of the state, kept for state-mode comparisons.
    std::optional<TTState> state;
};

/// rho_i = Tr_{!=i} |psi><psi| / <psi|psi>.
Matrix reduce_site(const TTState& psi, Index site);
/// All reduced densities in one pass over left/right environments.
std::vector<Matrix> reduce_sites(const TTState& psi);

/// (Tr(rho O), sqrt(Tr(rho O^2) - mean^2)) with negative roundoff clamped.
Moment expect_local(const Matrix& rho, const Matrix& op);
Moment expect_local(const TTState& psi, Index site, const Matrix& op);

/// Builds records of quantum runs from a fixed list of local observables.
class QuantumObserver {
public:
    QuantumObserver(TTOperator hamiltonian, std::vector<LocalObservable> observables, bool keep_states = false);

    /// `reference` is the initial state for the ACF; pass nullptr to skip it (ACF = 1).
    ObservableRecord observe(const TTState& psi, const TTState* reference, const std::string& kind, Index index,
                             double time) const;
    /// Same for dense state vectors with the given site dims.
    ObservableRecord observe_dense(const Vector& psi, const std::vector<Index>& dims, const Vector* reference,
                                   const std::string& kind, Index index, double time) const;

    const TTOperator& hamiltonian() const { return hamiltonian_; }
    const std::vector<LocalObservable>& observables() const { return observables_; }

private:
    ObservableRecord from_densities(std::vector<Matrix> densities, const std::string& kind, Index index,
                                    double time) const;

    TTOperator hamiltonian_;
    std::vector<LocalObservable> observables_;
    bool keep_states_;
};

enum class CompareMode { state, populations, positions, momenta };

CompareMode parse_compare_mode(const std::string& name);
std::string to_string(CompareMode mode);

/// Per-record RMSD between two record series on the same time grid.
std::vector<double> compare_runs(const std::vector<ObservableRecord>& a, const std::vector<ObservableRecord>& b,
                                 CompareMode mode);

struct Regression {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

/// Ordinary least squares of value against time.
Regression regress_conserved(const std::vector<double>& times, const std::vector<double>& values);

}  // namespace chaintt
