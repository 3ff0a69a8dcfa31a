#include "chaintt/qcmd.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace chaintt {

QcmdSolver parse_qcmd_solver(const std::string& name) {
    if (name == "lt") return QcmdSolver::lt;
    if (name == "sm") return QcmdSolver::sm;
    if (name == "pb") return QcmdSolver::pb;
    throw ConfigError("dynamics.solver", fmt::format("unknown QCMD solver '{}'", name));
}

std::string to_string(QcmdSolver solver) {
    switch (solver) {
        case QcmdSolver::lt: return "lt";
        case QcmdSolver::sm: return "sm";
        case QcmdSolver::pb: return "pb";
    }
    return "?";
}

void QcmdConfig::validate() const {
    if (num_steps < 1) throw ConfigError("dynamics.num_steps", "must be >= 1");
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("dynamics.step_size", "must be > 0");
    if (sub_steps < 1) throw ConfigError("dynamics.sub_steps", "must be >= 1");
}

namespace {

void check_state(const CoupledModel& model, const QcmdState& x) {
    if (!model.sigma_only()) throw ModelError("QCMD supports sigma coupling only (chi, rho, tau must vanish)");
    const Index n = model.chain().n_site;
    if (x.a.size() != n || x.q.size() != n || x.p.size() != n)
        throw ModelError(fmt::format("QCMD state has lengths {}/{}/{}, chain has {} sites", x.a.size(), x.q.size(),
                                     x.p.size(), n));
}

double classical_part(const CoupledModel& model, const QcmdState& x) {
    return model.phonon().kinetic(x.p) + model.phonon().potential(x.q);
}

PhaseSpacePoint classical_step(const CoupledModel& model, const QcmdState& x, double dt) {
    const RealVector f = model.cl_coupling(x.a);
    return verlet_step(model.phonon(), {x.q, x.p}, dt, &f);
}

ObservableRecord qcmd_record(const CoupledModel& model, const QcmdState& x, const Vector& ref, Index index,
                             double time) {
    ObservableRecord r;
    r.kind = "qcmd";
    r.index = index;
    r.time = time;
    const QcmdEnergies e = qcmd_energies(model, x);
    r.energy_parts["quantum"] = e.quantum;
    r.energy_parts["classical"] = e.classical;
    r.energy_parts["coupling"] = e.coupling;
    r.energy = e.total();
    r.norm = x.a.norm();
    r.acf = ref.dot(x.a);
    auto& num = r.sites["quantum_number"];
    auto& pos = r.sites["position"];
    auto& mom = r.sites["momentum"];
    for (Index i = 0; i < x.a.size(); ++i) {
        const double p = std::norm(x.a(i));
        num.push_back({p, std::sqrt(std::max(0.0, p * (1.0 - p)))});
        pos.push_back({x.q(i), 0.0});
        mom.push_back({x.p(i), 0.0});
        r.populations.push_back({1.0 - p, p});
        Matrix rho = Matrix::Zero(2, 2);
        rho(0, 0) = 1.0 - p;
        rho(1, 1) = p;
        r.densities.push_back(std::move(rho));
    }
    return r;
}

}  // namespace

RealMatrix quantum_hamiltonian(const CoupledModel& model, const RealVector& q, double w) {
    RealMatrix h = model.exciton().single_exciton_matrix();
    h.diagonal() += model.qu_coupling(q);
    h.diagonal().array() += model.exciton().eta() + w;
    return h;
}

QcmdRhs qcmd_rhs(const CoupledModel& model, const QcmdState& x) {
    check_state(model, x);
    const RealMatrix h = quantum_hamiltonian(model, x.q, classical_part(model, x));
    QcmdRhs d;
    d.da = Complex(0.0, -1.0) * (h.cast<Complex>() * x.a);
    d.dq = model.phonon().hess_kin() * x.p;
    d.dp = model.phonon().force(x.q) + model.cl_coupling(x.a);
    return d;
}

QcmdEnergies qcmd_energies(const CoupledModel& model, const QcmdState& x) {
    check_state(model, x);
    QcmdEnergies e;
    const RealMatrix h0 = quantum_hamiltonian(model, RealVector::Zero(x.q.size()));
    e.quantum = x.a.dot(h0.cast<Complex>() * x.a).real();
    e.classical = classical_part(model, x);
    const RealVector c = model.qu_coupling(x.q);
    for (Index i = 0; i < x.a.size(); ++i) e.coupling += c(i) * std::norm(x.a(i));
    return e;
}

QcmdState qcmd_initial(const CoupledModel& model, const std::vector<Complex>& coeffs) {
    const Index n = model.chain().n_site;
    if (static_cast<Index>(coeffs.size()) != n)
        throw ModelError(fmt::format("{} amplitudes given, chain has {} sites", coeffs.size(), n));
    QcmdState x{Vector(n), RealVector::Zero(n), RealVector::Zero(n)};
    for (Index i = 0; i < n; ++i) x.a(i) = coeffs[static_cast<std::size_t>(i)];
    const double nrm = x.a.norm();
    if (!(nrm > 0.0)) throw ModelError("initial amplitudes vanish");
    x.a /= nrm;
    return x;
}

Vector qcmd_quantum_step(const CoupledModel& model, const QcmdState& x, double dt) {
    const RealMatrix h = quantum_hamiltonian(model, x.q, classical_part(model, x));
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("quantum sub step: eigendecomposition failed");
    const Matrix v = es.eigenvectors().cast<Complex>();
    Vector phase(h.rows());
    for (Index k = 0; k < h.rows(); ++k) phase(k) = std::exp(Complex(0.0, -es.eigenvalues()(k) * dt));
    return v * phase.cwiseProduct(v.adjoint() * x.a);
}

QcmdState qcmd_step(const CoupledModel& model, const QcmdState& x, double dt, QcmdSolver solver) {
    check_state(model, x);
    QcmdState y = x;
    auto classical = [&](double tau) {
        PhaseSpacePoint c = classical_step(model, y, tau);
        y.q = std::move(c.q);
        y.p = std::move(c.p);
    };
    switch (solver) {
        case QcmdSolver::lt:
            y.a = qcmd_quantum_step(model, y, dt);
            classical(dt);
            break;
        case QcmdSolver::sm:
            classical(0.5 * dt);
            y.a = qcmd_quantum_step(model, y, dt);
            classical(0.5 * dt);
            break;
        case QcmdSolver::pb:
            y.a = qcmd_quantum_step(model, y, 0.5 * dt);
            classical(dt);
            y.a = qcmd_quantum_step(model, y, 0.5 * dt);
            break;
    }
    return y;
}

QcmdResult qcmd_propagate(const CoupledModel& model, const QcmdState& x0, const QcmdConfig& cfg, double t0,
                          const Vector* acf_reference, bool record_initial) {
    cfg.validate();
    check_state(model, x0);
    const Vector ref = acf_reference ? *acf_reference : x0.a;
    if (ref.size() != x0.a.size()) throw ModelError("ACF reference length does not match the chain");

    QcmdResult out;
    const Index base = std::llround(t0 / cfg.step_size);
    if (record_initial) out.records.push_back(qcmd_record(model, x0, ref, base, t0));

    const double h = cfg.sub_step();
    QcmdState x = x0;
    for (Index m = 1; m <= cfg.num_steps; ++m) {
        for (Index s = 0; s < cfg.sub_steps; ++s) {
            x = qcmd_step(model, x, h, cfg.solver);
            if (!x.a.allFinite() || !x.q.allFinite() || !x.p.allFinite())
                throw NumericalError(fmt::format("non-finite state at main step {}, sub step {}", m, s + 1));
        }
        if (cfg.normalize) x.a /= x.a.norm();
        out.records.push_back(qcmd_record(model, x, ref, base + m, t0 + static_cast<double>(m) * cfg.step_size));
    }
    out.final_state = x;
    out.final_time = t0 + static_cast<double>(cfg.num_steps) * cfg.step_size;
    return out;
}

}  // namespace chaintt
