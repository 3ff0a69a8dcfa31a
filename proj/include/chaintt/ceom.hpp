#pragma once

#include <string>
#include <vector>

#include "chaintt/models.hpp"
#include "chaintt/observables.hpp"

namespace chaintt {

enum class CeomSolver { rk, vv, qe };

CeomSolver parse_ceom_solver(const std::string& name);
std::string to_string(CeomSolver solver);

struct CeomConfig {
    Index num_steps = 50;
    double step_size = 20.0;
    Index sub_steps = 5;
    CeomSolver solver = CeomSolver::rk;

    void validate() const;
    double sub_step() const { return step_size / static_cast<double>(sub_steps); }
};

struct PhaseSpacePoint {
    RealVector q;
    RealVector p;
};

/// Classical counterpart of a coherent state: q0 = <R>, p0 = 0.
PhaseSpacePoint ceom_coherent_init(const PhononModel& model, const std::vector<double>& displacement);

/// Classical RK4 step under the harmonic lattice forces plus an optional constant external force.
PhaseSpacePoint rk4_step(const PhononModel& model, const PhaseSpacePoint& x, double dt,
                         const RealVector* external = nullptr);
/// Kick-drift-kick velocity Verlet step.
PhaseSpacePoint verlet_step(const PhononModel& model, const PhaseSpacePoint& x, double dt,
                            const RealVector* external = nullptr);

/// Normal-mode solution of the harmonic lattice at time t.
PhaseSpacePoint ceom_exact(const PhononModel& model, const PhaseSpacePoint& x0, double t);

double classical_energy(const PhononModel& model, const PhaseSpacePoint& x);

struct CeomResult {
    std::vector<ObservableRecord> records;
    PhaseSpacePoint final_state;
    double final_time = 0.0;
};

/// Records (kind "ceom") at t0 when `record_initial` and after each main step.
CeomResult ceom_propagate(const PhononModel& model, const PhaseSpacePoint& x0, const CeomConfig& cfg, double t0 = 0.0,
                          bool record_initial = true);

}  // namespace chaintt
