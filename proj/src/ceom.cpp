#include "chaintt/ceom.hpp"

#include <cmath>
#include <optional>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace chaintt {

CeomSolver parse_ceom_solver(const std::string& name) {
    if (name == "rk") return CeomSolver::rk;
    if (name == "vv") return CeomSolver::vv;
    if (name == "qe") return CeomSolver::qe;
    throw ConfigError("dynamics.solver", fmt::format("unknown classical solver '{}'", name));
}

std::string to_string(CeomSolver solver) {
    switch (solver) {
        case CeomSolver::rk: return "rk";
        case CeomSolver::vv: return "vv";
        case CeomSolver::qe: return "qe";
    }
    return "?";
}

void CeomConfig::validate() const {
    if (num_steps < 1) throw ConfigError("dynamics.num_steps", "must be >= 1");
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("dynamics.step_size", "must be > 0");
    if (sub_steps < 1) throw ConfigError("dynamics.sub_steps", "must be >= 1");
}

PhaseSpacePoint ceom_coherent_init(const PhononModel& model, const std::vector<double>& displacement) {
    const Index n = model.chain().n_site;
    if (static_cast<Index>(displacement.size()) != n)
        throw ModelError(fmt::format("displacement has {} entries, chain has {} sites", displacement.size(), n));
    PhaseSpacePoint x{RealVector(n), RealVector::Zero(n)};
    for (Index i = 0; i < n; ++i) x.q(i) = displacement[static_cast<std::size_t>(i)];
    return x;
}

namespace {

struct Lattice {
    RealMatrix k;
    RealVector inv_mass;

    explicit Lattice(const PhononModel& model) : k(model.hess_pot()), inv_mass(model.hess_kin().diagonal()) {}
};

void check_point(const PhononModel& model, const PhaseSpacePoint& x) {
    const Index n = model.chain().n_site;
    if (x.q.size() != n || x.p.size() != n)
        throw ModelError(fmt::format("phase-space point has lengths {}/{}, chain has {} sites", x.q.size(), x.p.size(), n));
}

PhaseSpacePoint rk4(const Lattice& lat, const PhaseSpacePoint& x, double dt, const RealVector* external) {
    // y' = (M^-1 p, F(q))
    auto dq = [&](const RealVector& p) -> RealVector { return lat.inv_mass.cwiseProduct(p); };
    auto dp = [&](const RealVector& q) -> RealVector {
        RealVector f = -(lat.k * q);
        if (external) f += *external;
        return f;
    };
    const RealVector k1q = dq(x.p), k1p = dp(x.q);
    const RealVector k2q = dq(x.p + 0.5 * dt * k1p), k2p = dp(x.q + 0.5 * dt * k1q);
    const RealVector k3q = dq(x.p + 0.5 * dt * k2p), k3p = dp(x.q + 0.5 * dt * k2q);
    const RealVector k4q = dq(x.p + dt * k3p), k4p = dp(x.q + dt * k3q);
    return {x.q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q), x.p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)};
}

PhaseSpacePoint kdk(const Lattice& lat, const PhaseSpacePoint& x, double dt, const RealVector* external) {
    auto force = [&](const RealVector& q) -> RealVector {
        RealVector f = -(lat.k * q);
        if (external) f += *external;
        return f;
    };
    RealVector p = x.p + 0.5 * dt * force(x.q);
    RealVector q = x.q + dt * lat.inv_mass.cwiseProduct(p);
    p += 0.5 * dt * force(q);
    return {std::move(q), std::move(p)};
}

class NormalModes {
public:
    explicit NormalModes(const PhononModel& model) {
        const Index n = model.chain().n_site;
        sqrt_m_ = model.hess_kin().diagonal().cwiseInverse().cwiseSqrt();
        const RealVector inv = sqrt_m_.cwiseInverse();
        const RealMatrix d = inv.asDiagonal() * model.hess_pot() * inv.asDiagonal();
        Eigen::SelfAdjointEigenSolver<RealMatrix> es(d);
        if (es.info() != Eigen::Success) throw NumericalError("normal-mode diagonalization failed");
        u_ = es.eigenvectors();
        const RealVector w = es.eigenvalues();
        const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
        omega_.resize(n);
        for (Index k = 0; k < n; ++k) {
            if (w(k) < -1e-12 * scale) throw ModelError(fmt::format("negative squared mode frequency {}", w(k)));
            omega_(k) = std::sqrt(std::max(0.0, w(k)));
        }
    }

    PhaseSpacePoint evolve(const PhaseSpacePoint& x0, double t) const {
        const RealVector y0 = u_.transpose() * sqrt_m_.cwiseProduct(x0.q);
        const RealVector v0 = u_.transpose() * sqrt_m_.cwiseInverse().cwiseProduct(x0.p);
        RealVector y(y0.size()), v(y0.size());
        for (Index k = 0; k < y0.size(); ++k) {
            const double w = omega_(k);
            if (w * std::abs(t) < 1e-8) {
                // free motion with the leading harmonic correction
                y(k) = y0(k) + v0(k) * t;
                v(k) = v0(k) - w * w * y0(k) * t;
            } else {
                const double c = std::cos(w * t), s = std::sin(w * t);
                y(k) = y0(k) * c + v0(k) / w * s;
                v(k) = -y0(k) * w * s + v0(k) * c;
            }
        }
        return {sqrt_m_.cwiseInverse().cwiseProduct(u_ * y), sqrt_m_.cwiseProduct(u_ * v)};
    }

private:
    RealVector sqrt_m_;
    RealMatrix u_;
    RealVector omega_;
};

ObservableRecord classical_record(const PhononModel& model, const PhaseSpacePoint& x, Index index, double time) {
    ObservableRecord r;
    r.kind = "ceom";
    r.index = index;
    r.time = time;
    const double kin = model.kinetic(x.p), pot = model.potential(x.q);
    r.energy_parts["kinetic"] = kin;
    r.energy_parts["potential"] = pot;
    r.energy = kin + pot;
    auto& pos = r.sites["position"];
    auto& mom = r.sites["momentum"];
    for (Index i = 0; i < x.q.size(); ++i) {
        pos.push_back({x.q(i), 0.0});
        mom.push_back({x.p(i), 0.0});
    }
    return r;
}

}  // namespace

PhaseSpacePoint rk4_step(const PhononModel& model, const PhaseSpacePoint& x, double dt, const RealVector* external) {
    check_point(model, x);
    return rk4(Lattice(model), x, dt, external);
}

PhaseSpacePoint verlet_step(const PhononModel& model, const PhaseSpacePoint& x, double dt,
                            const RealVector* external) {
    check_point(model, x);
    return kdk(Lattice(model), x, dt, external);
}

PhaseSpacePoint ceom_exact(const PhononModel& model, const PhaseSpacePoint& x0, double t) {
    check_point(model, x0);
    return NormalModes(model).evolve(x0, t);
}

double classical_energy(const PhononModel& model, const PhaseSpacePoint& x) {
    return model.kinetic(x.p) + model.potential(x.q);
}

CeomResult ceom_propagate(const PhononModel& model, const PhaseSpacePoint& x0, const CeomConfig& cfg, double t0,
                          bool record_initial) {
    cfg.validate();
    check_point(model, x0);
    const Lattice lat(model);
    std::optional<NormalModes> modes;
    if (cfg.solver == CeomSolver::qe) modes.emplace(model);

    CeomResult out;
    const Index base = std::llround(t0 / cfg.step_size);
    if (record_initial) out.records.push_back(classical_record(model, x0, base, t0));

    const double h = cfg.sub_step();
    PhaseSpacePoint x = x0;
    for (Index m = 1; m <= cfg.num_steps; ++m) {
        if (modes) {
            x = modes->evolve(x0, static_cast<double>(m) * cfg.step_size);
        } else {
            for (Index s = 0; s < cfg.sub_steps; ++s)
                x = cfg.solver == CeomSolver::rk ? rk4(lat, x, h, nullptr) : kdk(lat, x, h, nullptr);
        }
        if (!x.q.allFinite() || !x.p.allFinite())
            throw NumericalError(fmt::format("non-finite classical state at main step {}", m));
        out.records.push_back(classical_record(model, x, base + m, t0 + static_cast<double>(m) * cfg.step_size));
    }
    out.final_state = x;
    out.final_time = t0 + static_cast<double>(cfg.num_steps) * cfg.step_size;
    return out;
}

}  // namespace chaintt
