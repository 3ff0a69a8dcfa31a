#pragma once

#include <string>
#include <vector>

#include "chaintt/ceom.hpp"
#include "chaintt/models.hpp"
#include "chaintt/observables.hpp"

namespace chaintt {

enum class QcmdSolver { lt, sm, pb };

QcmdSolver parse_qcmd_solver(const std::string& name);
std::string to_string(QcmdSolver solver);

struct QcmdConfig {
    Index num_steps = 50;
    double step_size = 20.0;
    Index sub_steps = 5;
    QcmdSolver solver = QcmdSolver::sm;
    bool normalize = false;

    void validate() const;
    double sub_step() const { return step_size / static_cast<double>(sub_steps); }
};

/// Single-exciton amplitudes plus the classical lattice coordinates.
struct QcmdState {
    Vector a;
    RealVector q;
    RealVector p;
};

struct QcmdRhs {
    Vector da;
    RealVector dq;
    RealVector dp;
};

/// Instantaneous N x N quantum Hamiltonian: alpha + eta + sigma_i (q_{i+1} - q_{i-1}) + W on the diagonal.
RealMatrix quantum_hamiltonian(const CoupledModel& model, const RealVector& q, double w = 0.0);

/// Time derivatives of the mean-field equations (W = kinetic + potential classical energy).
QcmdRhs qcmd_rhs(const CoupledModel& model, const QcmdState& x);

struct QcmdEnergies {
    double quantum = 0.0;
    double classical = 0.0;
    double coupling = 0.0;
    double total() const { return quantum + classical + coupling; }
};

/// Energy split; the W phase term is not part of the quantum energy.
QcmdEnergies qcmd_energies(const CoupledModel& model, const QcmdState& x);

/// Amplitudes `coeffs` (normalized) with the lattice at rest: q = p = 0.
QcmdState qcmd_initial(const CoupledModel& model, const std::vector<Complex>& coeffs);

/// Exact quantum propagation over dt at frozen q, p.
Vector qcmd_quantum_step(const CoupledModel& model, const QcmdState& x, double dt);
/// One sub step of the selected scheme.
QcmdState qcmd_step(const CoupledModel& model, const QcmdState& x, double dt, QcmdSolver solver);

struct QcmdResult {
    std::vector<ObservableRecord> records;
    QcmdState final_state;
    double final_time = 0.0;
};

/// Records (kind "qcmd") at t0 when `record_initial` and after each main step; ACF against `acf_reference` (a0 when null).
QcmdResult qcmd_propagate(const CoupledModel& model, const QcmdState& x0, const QcmdConfig& cfg, double t0 = 0.0,
                          const Vector* acf_reference = nullptr, bool record_initial = true);

}  // namespace chaintt
