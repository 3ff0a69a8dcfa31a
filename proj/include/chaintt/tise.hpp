#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chaintt/tensor_train.hpp"

namespace chaintt {

enum class TiseSolver { als, qe };
/// Micro-eigensolver semantics: general dense eigensolver, Hermitian dense
/// eigensolver, or shift-invert around e_est (iterative above 2000 unknowns).
enum class EigenSelector { dense_all, dense_hermitian, sparse_shift_invert };

TiseSolver parse_tise_solver(const std::string& name);
EigenSelector parse_eigen_selector(const std::string& name);

struct TiseConfig {
    Index n_levels = 1;
    TiseSolver solver = TiseSolver::als;
    EigenSelector eigen = EigenSelector::dense_hermitian;
    Index ranks = 8;
    Index repeats = 20;
    double conv_eps = 1e-8;
    /// Target energy; without it the lowest eigenvalues are taken.
    std::optional<double> e_est;
    std::uint64_t seed = 0;
    Index dense_cap = kDefaultDenseCap;

    void validate() const;
};

struct TiseLevel {
    double energy = 0.0;
    TTState state;
    Index sweeps = 0;
    /// Deflated eigenvalue estimate before the first sweep and after each sweep.
    std::vector<double> history;
    double residual = 0.0;
    bool converged = false;
};

struct TiseResult {
    std::vector<TiseLevel> levels;
};

struct SweepResult {
    TTState state;
    double eigenvalue = 0.0;
};

/// Spectral shift used to displace already-found states.
double deflation_shift(const TTOperator& h);

/**
 * One left-to-right plus right-to-left ALS sweep. Already-found states in
 * `deflation` are displaced by `shift` inside each micro-problem only.
 */
SweepResult als_sweep(const TTOperator& h, const TTState& trial, const std::vector<TTState>& deflation, double shift,
                      EigenSelector selector, std::optional<double> e_est, Index sweep_number = 0);

TiseResult solve_tise(const TTOperator& h, const TiseConfig& cfg);
TiseResult solve_tise_dense(const TTOperator& h, const TiseConfig& cfg);

/// ||H psi - E psi|| evaluated in TT arithmetic.
double residual_norm(const TTOperator& h, const TTState& psi, double energy);

}  // namespace chaintt
