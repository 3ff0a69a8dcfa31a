#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "chaintt/ceom.hpp"
#include "chaintt/tdse.hpp"

using namespace chaintt;

namespace {

PhononModel default_chain(Index n, bool periodic) {
    return PhononModel{ChainSpec{n, periodic, true}, {1.0}, {1e-3}, {std::sqrt(2.0) * 1e-3}};
}

std::vector<double> center_displacement(Index n, double r) {
    std::vector<double> d(static_cast<std::size_t>(n), 0.0);
    d[static_cast<std::size_t>(n / 2)] = r;
    return d;
}

double max_diff(const PhaseSpacePoint& a, const PhaseSpacePoint& b) {
    return std::max((a.q - b.q).cwiseAbs().maxCoeff(), (a.p - b.p).cwiseAbs().maxCoeff());
}

PhaseSpacePoint run(const PhononModel& model, const PhaseSpacePoint& x0, CeomSolver solver, double h, Index steps) {
    PhaseSpacePoint x = x0;
    for (Index s = 0; s < steps; ++s)
        x = solver == CeomSolver::rk ? rk4_step(model, x, h) : verlet_step(model, x, h);
    return x;
}

}  // namespace

TEST(CeomConfig, Validation) {
    CeomConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.sub_steps = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_EQ(parse_ceom_solver("vv"), CeomSolver::vv);
    EXPECT_EQ(to_string(CeomSolver::qe), "qe");
    EXPECT_THROW(parse_ceom_solver("euler"), ConfigError);
}

TEST(CeomInit, CoherentDisplacement) {
    const PhononModel model = default_chain(9, false);
    const PhaseSpacePoint x = ceom_coherent_init(model, center_displacement(9, 1.0));
    EXPECT_EQ(x.q(4), 1.0);
    EXPECT_EQ(x.q.cwiseAbs().sum(), 1.0);
    EXPECT_EQ(x.p.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(ceom_coherent_init(model, {1.0}), ModelError);

    const PhaseSpacePoint rest = ceom_coherent_init(model, std::vector<double>(9, 0.0));
    CeomConfig cfg;
    cfg.num_steps = 5;
    for (CeomSolver s : {CeomSolver::rk, CeomSolver::vv, CeomSolver::qe}) {
        cfg.solver = s;
        const CeomResult r = ceom_propagate(model, rest, cfg);
        EXPECT_EQ(r.final_state.q.cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(r.final_state.p.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(CeomInit, MatchesCoherentStateExpectation) {
    const PhononModel model = default_chain(3, false);
    const std::vector<double> disp{0.0, 5.0, -2.0};
    const CoherentState cs = initial_coherent(model, disp, 16);
    QuantumObserver obs(model.hamiltonian(16).op, model.observables(16));
    const ObservableRecord r = obs.observe(cs.state, nullptr, "tdse", 0, 0.0);
    const PhaseSpacePoint x = ceom_coherent_init(model, disp);
    for (Index i = 0; i < 3; ++i) {
        EXPECT_NEAR(r.sites.at("position")[static_cast<std::size_t>(i)].mean, x.q(i), 1e-10);
        EXPECT_NEAR(r.sites.at("momentum")[static_cast<std::size_t>(i)].mean, x.p(i), 1e-10);
    }
}

TEST(CeomExact, IsolatedOscillator) {
    const double nu = 1e-3, r0 = 3.0;
    const PhononModel model{ChainSpec{2, false, true}, {1.0}, {nu}, {0.0}};
    const PhaseSpacePoint x0{RealVector::Unit(2, 0) * r0, RealVector::Zero(2)};
    for (double t : {0.0, 100.0, 1234.5, 8400.0}) {
        const PhaseSpacePoint x = ceom_exact(model, x0, t);
        EXPECT_NEAR(x.q(0), r0 * std::cos(nu * t), 1e-12);
        EXPECT_NEAR(x.p(0), -r0 * nu * std::sin(nu * t), 1e-15);
        EXPECT_EQ(x.q(1), 0.0);
    }
    // scheme order on the same oscillator
    const double t = 2000.0;
    for (auto [solver, order] : {std::pair{CeomSolver::rk, 4.0}, std::pair{CeomSolver::vv, 2.0}}) {
        double errs[2];
        for (int k = 0; k < 2; ++k) {
            const Index steps = 10 << k;
            errs[k] = std::abs(run(model, x0, solver, t / static_cast<double>(steps), steps).q(0) - r0 * std::cos(nu * t));
        }
        EXPECT_NEAR(std::log2(errs[0] / errs[1]), order, 0.1) << to_string(solver);
    }
}

TEST(CeomExact, IdentityAtZero) {
    const PhononModel model = default_chain(5, true);
    PhaseSpacePoint x0{RealVector::LinSpaced(5, -1.0, 2.0), RealVector::LinSpaced(5, 0.3, -0.1) * 1e-3};
    EXPECT_LE(max_diff(ceom_exact(model, x0, 0.0), x0), 1e-15);
}

TEST(CeomExact, RingPeriodicity) {
    // Omega_k^2 = nu^2 + 2 omega^2 sin^2(pi k / N): N=3, nu=1, omega=sqrt(2) gives 1, 2, 2
    const PhononModel model{ChainSpec{3, true, true}, {1.0}, {1.0}, {std::sqrt(2.0)}};
    const RealVector omega = model.normal_modes();
    for (Index k = 0; k < 3; ++k) {
        const double s = std::sin(std::numbers::pi * static_cast<double>(k) / 3.0);
        const double expect = std::sqrt(1.0 + 2.0 * 2.0 * s * s);
        EXPECT_TRUE((omega.array() - expect).abs().minCoeff() <= 1e-12);
    }
    const PhaseSpacePoint x0{RealVector::LinSpaced(3, 0.5, -0.25), RealVector::LinSpaced(3, 0.1, 0.7)};
    EXPECT_LE(max_diff(ceom_exact(model, x0, 2.0 * std::numbers::pi), x0), 1e-10);
    EXPECT_LE(max_diff(ceom_exact(model, x0, 10.0 * std::numbers::pi), x0), 1e-10);
    EXPECT_GT(max_diff(ceom_exact(model, x0, std::numbers::pi / 3.0), x0), 1e-2);
}

TEST(CeomExact, FreeTranslationMode) {
    // nu = 0 on a ring: the centre of mass moves freely
    const PhononModel model{ChainSpec{4, true, true}, {2.0}, {0.0}, {1e-3}};
    const PhaseSpacePoint x0{RealVector::Zero(4), RealVector::Constant(4, 0.5)};
    const PhaseSpacePoint x = ceom_exact(model, x0, 100.0);
    for (Index i = 0; i < 4; ++i) {
        EXPECT_NEAR(x.q(i), 25.0, 1e-12);
        EXPECT_NEAR(x.p(i), 0.5, 1e-15);
    }
}

TEST(CeomPropagate, RungeKuttaMatchesExact) {
    const PhononModel model = default_chain(9, false);
    const PhaseSpacePoint x0 = ceom_coherent_init(model, center_displacement(9, 1.0));
    CeomConfig cfg;
    cfg.num_steps = 20;
    cfg.sub_steps = 5 * 64;
    cfg.solver = CeomSolver::rk;
    const CeomResult rk = ceom_propagate(model, x0, cfg);
    cfg.solver = CeomSolver::qe;
    const CeomResult qe = ceom_propagate(model, x0, cfg);
    ASSERT_EQ(rk.records.size(), qe.records.size());
    for (std::size_t m = 0; m < rk.records.size(); ++m)
        for (std::size_t i = 0; i < 9; ++i)
            EXPECT_NEAR(rk.records[m].sites.at("position")[i].mean, qe.records[m].sites.at("position")[i].mean, 1e-9);
    EXPECT_LE(max_diff(rk.final_state, qe.final_state), 1e-9);
}

TEST(CeomPropagate, EnergyConservation) {
    const PhononModel model = default_chain(9, true);
    const PhaseSpacePoint x0 = ceom_coherent_init(model, center_displacement(9, 20.0));
    CeomConfig cfg;
    cfg.num_steps = 420;
    cfg.step_size = 20.0;
    cfg.sub_steps = 5;

    cfg.solver = CeomSolver::qe;
    const CeomResult qe = ceom_propagate(model, x0, cfg);
    const double e0 = qe.records.front().energy;
    for (const auto& r : qe.records) {
        EXPECT_LE(std::abs(r.energy - e0), 1e-12 * e0);
        EXPECT_NEAR(r.energy_parts.at("kinetic") + r.energy_parts.at("potential"), r.energy, 1e-15 * e0);
    }

    auto drift = [&](double h_scale) {
        CeomConfig c = cfg;
        c.solver = CeomSolver::vv;
        c.sub_steps = static_cast<Index>(5 * h_scale);
        const CeomResult r = ceom_propagate(model, x0, c);
        std::vector<double> t, e;
        double dev = 0.0;
        for (const auto& rec : r.records) {
            t.push_back(rec.time);
            e.push_back(rec.energy);
            dev = std::max(dev, std::abs(rec.energy - e0));
        }
        return std::pair{regress_conserved(t, e).slope, dev};
    };
    const auto [slope, dev1] = drift(1.0);
    EXPECT_LE(std::abs(slope), 1e-10);
    const auto [slope2, dev2] = drift(2.0);
    EXPECT_LE(std::abs(slope2), 1e-10);
    // bounded O(h^2) energy error
    EXPECT_NEAR(std::log2(dev1 / dev2), 2.0, 0.2);
}

TEST(CeomPropagate, MomentumConservedOnFreeRing) {
    const PhononModel model{ChainSpec{6, true, true}, {1.0}, {0.0}, {std::sqrt(2.0) * 1e-3}};
    PhaseSpacePoint x0 = ceom_coherent_init(model, center_displacement(6, 20.0));
    x0.p(1) = 0.01;
    const double p0 = x0.p.sum();
    CeomConfig cfg;
    cfg.num_steps = 100;
    for (CeomSolver s : {CeomSolver::rk, CeomSolver::vv, CeomSolver::qe}) {
        cfg.solver = s;
        const CeomResult r = ceom_propagate(model, x0, cfg);
        for (const auto& rec : r.records) {
            double total = 0.0;
            for (const auto& m : rec.sites.at("momentum")) total += m.mean;
            EXPECT_NEAR(total, p0, 1e-12) << to_string(s);
        }
    }
}

TEST(CeomPropagate, SplitRunMatches) {
    const PhononModel model = default_chain(5, false);
    const PhaseSpacePoint x0 = ceom_coherent_init(model, center_displacement(5, 2.0));
    CeomConfig cfg;
    cfg.num_steps = 10;
    for (CeomSolver s : {CeomSolver::rk, CeomSolver::vv, CeomSolver::qe}) {
        cfg.solver = s;
        const CeomResult full = ceom_propagate(model, x0, cfg);
        CeomConfig half = cfg;
        half.num_steps = 5;
        const CeomResult a = ceom_propagate(model, x0, half);
        const CeomResult b = ceom_propagate(model, a.final_state, half, a.final_time, false);
        EXPECT_EQ(b.records.front().index, 6);
        EXPECT_DOUBLE_EQ(b.final_time, full.final_time);
        EXPECT_LE(max_diff(b.final_state, full.final_state), 1e-12) << to_string(s);
    }
}
