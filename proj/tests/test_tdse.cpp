#include <gtest/gtest.h>

#include <numeric>

#include "chaintt/tdse.hpp"
#include "oracles.hpp"

using namespace chaintt;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

ExcitonModel exciton(Index n, bool periodic, double beta = -0.01) {
    return {ChainSpec{n, periodic, true}, {0.1}, {beta}, 0.0};
}

TruncationPolicy exact_policy() { return {1 << 20, 0.0}; }

/// Error of one splitting step against the dense exponential.
double splitting_error(const ChainHamiltonian& h, TdseSolver scheme, const TTState& psi0, double t, int steps) {
    SplittingPropagator prop(h, scheme, exact_policy());
    TTState x = psi0;
    for (int k = 0; k < steps; ++k) x = prop.step(x, t / steps);
    const Vector ref = evolve_dense(to_dense(h.op), to_dense(psi0).data, t);
    return (to_dense(x).data - ref).norm();
}

TTState random_normalized(const std::vector<Index>& dims, Index rank, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto x = random_state(dims, rank, rng);
    return scale(x, 1.0 / norm(x));
}

}  // namespace

TEST(TdseConfig, Validation) {
    TdseConfig c;
    EXPECT_NO_THROW(c.validate());
    c.sub_steps = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.step_size = -1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.num_steps = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    for (const char* n : {"s2", "s4", "s6", "lt", "sm", "yn", "kl", "qe"}) EXPECT_EQ(to_string(parse_tdse_solver(n)), n);
    EXPECT_THROW(parse_tdse_solver("rk"), ConfigError);
}

TEST(Packets, GaussianConvention) {
    PacketSpec s;
    s.kind = PacketKind::gaussian;
    s.width = 2.0;
    s.momentum = 0.3;
    const auto c = packet_coefficients(s, 9);
    std::vector<Complex> ref;
    double n2 = 0.0;
    for (int j = 0; j < 9; ++j) {
        const double x = j - 4;
        ref.push_back(std::exp(-x * x / 16.0) * std::exp(Complex(0.0, 0.3 * x)));
        n2 += std::norm(ref.back());
    }
    for (std::size_t j = 0; j < 9; ++j) EXPECT_NEAR(std::abs(c[j] - ref[j] / std::sqrt(n2)), 0.0, 1e-15);
}

TEST(Packets, SechConventionAndCenter) {
    PacketSpec s;
    s.kind = PacketKind::sech;
    s.width = 3.0;
    s.center = 2;
    const auto c = packet_coefficients(s, 7);
    double n2 = 0.0;
    for (const auto& v : c) n2 += std::norm(v);
    EXPECT_NEAR(n2, 1.0, 1e-15);
    EXPECT_NEAR(std::abs(c[4]) / std::abs(c[2]), 1.0 / std::cosh(2.0 / 3.0), 1e-15);
    s.center = 7;
    EXPECT_THROW(packet_coefficients(s, 7), ConfigError);
    s = {};
    const auto unit = packet_coefficients(s, 7);
    EXPECT_EQ(unit[3], Complex(1.0));
}

TEST(InitialFundamental, BasisVector) {
    const std::vector<Index> dims(3, 2);
    const auto psi = initial_fundamental(dims, {0.0, 1.0, 0.0});
    const Vector v = to_dense(psi).data;
    EXPECT_EQ(v, Vector::Unit(8, 2));  // |0 1 0>
}

TEST(InitialFundamental, UniformSuperposition) {
    const std::vector<Index> dims(3, 2);
    const double c = 1.0 / std::sqrt(3.0);
    const auto psi = initial_fundamental(dims, {c, c, c});
    EXPECT_NEAR(norm(psi), 1.0, 1e-15);
    EXPECT_LE(psi.max_rank(), 3);
    Vector ref = Vector::Zero(8);
    ref(4) = ref(2) = ref(1) = c;
    EXPECT_LE((to_dense(psi).data - ref).norm(), 1e-15);
}

TEST(InitialFundamental, CoupledSitesExciteOnlyTheExciton) {
    const Index dph = 3;
    const std::vector<Index> dims(2, 2 * dph);
    const auto psi = initial_fundamental(dims, {1.0, 0.0}, dph);
    Vector ref = Vector::Zero(36);
    ref(dph * 6 + 0) = 1.0;  // site 0 in |1>_ex |0>_ph, site 1 in |0>|0>
    EXPECT_LE((to_dense(psi).data - ref).norm(), 1e-15);
    EXPECT_THROW(initial_fundamental(dims, {0.0, 0.0}), DimensionError);
    EXPECT_THROW(initial_fundamental(dims, {1.0}), DimensionError);
}

TEST(InitialCoherent, ZeroDisplacementIsGroundState) {
    PhononModel model{ChainSpec{3, false, true}, {1.0}, {1e-3}, {std::sqrt(2.0) * 1e-3}};
    const auto cs = initial_coherent(model, {0.0, 0.0, 0.0}, 4);
    EXPECT_LE((to_dense(cs.state).data - Vector::Unit(64, 0)).norm(), 1e-15);
    EXPECT_FALSE(cs.truncation_warning);
}

TEST(InitialCoherent, DisplacementToZeta) {
    PhononModel model{ChainSpec{3, true, true}, {1.0}, {1e-3}, {std::sqrt(2.0) * 1e-3}};
    EXPECT_NEAR(model.nu_eff()[1], std::sqrt(3.0) * 1e-3, 1e-15);
    const auto z = coherent_zeta(model, {0.0, 1.0, 0.0});
    EXPECT_NEAR(z[1].real(), std::sqrt(std::sqrt(3.0) * 1e-3 / 2.0), 1e-15);
    EXPECT_NEAR(z[1].real(), 0.02943, 1e-5);
}

TEST(InitialCoherent, PositionExpectation) {
    PhononModel model{ChainSpec{3, false, true}, {1.0}, {1e-3}, {std::sqrt(2.0) * 1e-3}};
    const std::vector<double> target{0.0, 20.0, -5.0};
    const Index d = 12;
    const auto cs = initial_coherent(model, target, d);
    const auto obs = model.observables(d);
    const auto& pos = *std::find_if(obs.begin(), obs.end(), [](const auto& o) { return o.name == "position"; });
    for (Index i = 0; i < 3; ++i) {
        const double m = expect_local(cs.state, i, pos.per_site[static_cast<std::size_t>(i)]).mean;
        const double lost = 1.0 - cs.weight[static_cast<std::size_t>(i)];
        EXPECT_NEAR(m, target[static_cast<std::size_t>(i)], 1e-9 + 50.0 * std::sqrt(lost) * std::abs(target[1]));
    }
    EXPECT_FALSE(cs.truncation_warning);
    EXPECT_TRUE(initial_coherent(model, {0.0, 200.0, 0.0}, 4).truncation_warning);
}

TEST(SymmetricEuler, ZeroHamiltonianReturnsPrevious) {
    const std::vector<Index> dims(3, 2);
    const auto h = scale(identity_operator(dims), 0.0);
    const auto a = random_normalized(dims, 2, 1);
    const auto b = random_normalized(dims, 2, 2);
    const auto c = step_symmetric(h, a, b, 0.5, 4, exact_policy());
    EXPECT_LE((to_dense(c).data - to_dense(a).data).norm(), 1e-14);
    EXPECT_THROW(step_symmetric(h, a, b, 0.5, 3, exact_policy()), ConfigError);
}

TEST(SymmetricEuler, TwoLevelLocalErrorIsThirdOrder) {
    Matrix m(2, 2);
    m << 0.3, 0.2, 0.2, -0.1;
    const std::vector<Matrix> site{m};
    const auto h = product_operator(site);
    const Vector psi = Vector::Unit(2, 0);
    auto local_error = [&](double dt, int order) {
        const std::vector<Index> dims{2};
        const auto prev = from_dense(dims, evolve_dense(m, psi, -dt), exact_policy());
        const auto curr = from_dense(dims, psi, exact_policy());
        const auto next = step_symmetric(h, prev, curr, dt, order, exact_policy());
        return (to_dense(next).data - evolve_dense(m, psi, dt)).norm();
    };
    const double r2 = local_error(0.2, 2) / local_error(0.1, 2);
    const double r4 = local_error(0.4, 4) / local_error(0.2, 4);
    const double r6 = local_error(0.8, 6) / local_error(0.4, 6);
    EXPECT_NEAR(std::log2(r2), 3.0, 0.1);
    EXPECT_NEAR(std::log2(r4), 5.0, 0.2);
    EXPECT_NEAR(std::log2(r6), 7.0, 0.3);
}

TEST(Splitting, BondTermsSumToHamiltonian) {
    for (Index n : {2, 3, 4, 5}) {
        for (bool periodic : {false, true}) {
            if (periodic && n < 3) continue;
            const auto h = exciton(n, periodic).hamiltonian(2);
            SplittingPropagator prop(h, TdseSolver::sm, exact_policy());
            EXPECT_EQ(prop.three_group_split(), periodic && n % 2 == 1);
            const std::vector<Index> dims(static_cast<std::size_t>(n), 2);
            Matrix sum = Matrix::Zero(1 << n, 1 << n);
            for (Index b = 0; b < h.chain.n_bonds(); ++b) {
                Matrix full = prop.bond_hamiltonian(b);
                if (b + 1 < n) {
                    Matrix left = Matrix::Identity(1 << b, 1 << b);
                    Matrix right = Matrix::Identity(1 << (n - b - 2), 1 << (n - b - 2));
                    sum += oracle::kron(oracle::kron(left, full), right);
                } else {
                    // wrap bond: site n-1 slow in the bond matrix, site 0 slow in the chain
                    const Index mid = 1 << (n - 2);
                    for (Index r = 0; r < (1 << n); ++r)
                        for (Index c = 0; c < (1 << n); ++c) {
                            const Index r0 = r >> (n - 1), rl = r & 1, rm = (r >> 1) & (mid - 1);
                            const Index c0 = c >> (n - 1), cl = c & 1, cm = (c >> 1) & (mid - 1);
                            if (rm == cm) sum(r, c) += full(rl * 2 + r0, cl * 2 + c0);
                        }
                }
            }
            EXPECT_LE(max_abs(sum - to_dense(h.op)), 1e-15) << n << " " << periodic;
        }
    }
}

TEST(Splitting, CommutingSplitIsExact) {
    const auto h = exciton(4, false, 0.0).hamiltonian(2);
    const auto psi = random_normalized(h.dims(), 3, 5);
    EXPECT_LE(splitting_error(h, TdseSolver::lt, psi, 30.0, 1), 1e-12);
}

TEST(Splitting, StrangIsTimeReversible) {
    for (bool periodic : {false, true}) {
        const auto h = exciton(5, periodic).hamiltonian(2);
        const auto psi = random_normalized(h.dims(), 3, 6);
        SplittingPropagator prop(h, TdseSolver::sm, exact_policy());
        const auto back = prop.step(prop.step(psi, 7.0), -7.0);
        EXPECT_LE((to_dense(back).data - to_dense(psi).data).norm(), 1e-10);
    }
}

TEST(Splitting, ConvergenceOrders) {
    struct Case {
        TdseSolver scheme;
        double order;
        double tol;
    };
    for (bool periodic : {false, true}) {
        for (Index n : {4, 5}) {
            const auto h = exciton(n, periodic, -0.05).hamiltonian(2);
            const auto psi = random_normalized(h.dims(), 4, 7);
            for (const auto& c : {Case{TdseSolver::lt, 1.0, 0.2}, Case{TdseSolver::sm, 2.0, 0.2},
                                  Case{TdseSolver::yn, 4.0, 0.4}}) {
                const double e1 = splitting_error(h, c.scheme, psi, 20.0, 8);
                const double e2 = splitting_error(h, c.scheme, psi, 20.0, 16);
                EXPECT_NEAR(std::log2(e1 / e2), c.order, c.tol) << to_string(c.scheme) << " n=" << n;
            }
            EXPECT_LE(splitting_error(h, TdseSolver::kl, psi, 10.0, 10), 1e-10);
        }
    }
}

TEST(Splitting, CompositionWeights) {
    const auto& kl = kahan_li_weights();
    EXPECT_NEAR(std::accumulate(kl.begin(), kl.end(), 0.0), 1.0, 1e-15);
    for (std::size_t k = 0; k < 15; ++k) EXPECT_EQ(kl[k], kl[14 - k]);
    EXPECT_EQ(kl[7], -0.79688793935291635401978884);
    const auto yn = yoshida_weights();
    EXPECT_NEAR(yn[0] + yn[1] + yn[2], 1.0, 1e-15);
    EXPECT_NEAR(2.0 * std::pow(yn[0], 3) + std::pow(yn[1], 3), 0.0, 1e-14);
}

TEST(Propagate, ZeroHamiltonianKeepsState) {
    ExcitonModel model{ChainSpec{4, false, true}, {0.0}, {0.0}, 0.0};
    const auto h = model.hamiltonian(2);
    QuantumObserver obs(h.op, model.observables(2));
    const auto psi = random_normalized(h.dims(), 2, 8);
    for (auto s : {TdseSolver::s2, TdseSolver::s6, TdseSolver::sm, TdseSolver::qe}) {
        TdseConfig cfg;
        cfg.solver = s;
        cfg.num_steps = 3;
        cfg.truncation = exact_policy();
        const auto r = propagate(h, psi, cfg, obs);
        ASSERT_EQ(r.records.size(), 4u);
        for (const auto& rec : r.records) EXPECT_NEAR(std::abs(rec.acf - Complex(1.0)), 0.0, 1e-12);
        EXPECT_LE((to_dense(r.final_state).data - to_dense(psi).data).norm(), 1e-12);
    }
}

TEST(Propagate, DenseIsUnitaryAndConservesEnergy) {
    const auto model = exciton(4, true);
    const auto h = model.hamiltonian(2);
    QuantumObserver obs(h.op, model.observables(2));
    const auto psi = initial_fundamental(h.dims(), packet_coefficients(PacketSpec{}, 4));
    TdseConfig cfg;
    cfg.solver = TdseSolver::qe;
    const auto r = propagate(h, psi, cfg, obs);
    EXPECT_EQ(r.records.front().acf, Complex(1.0));
    for (const auto& rec : r.records) {
        EXPECT_NEAR(rec.norm, 1.0, 1e-13);
        EXPECT_NEAR(rec.energy, r.records.front().energy, 1e-12);
        double total = 0.0;
        for (const auto& m : rec.sites.at("quantum_number")) total += m.mean;
        EXPECT_NEAR(total, 1.0, 1e-8);
    }
    cfg.dense_cap = 8;
    EXPECT_THROW(propagate(h, psi, cfg, obs), CapExceeded);
}

TEST(Propagate, FourthOrderEulerMatchesDense) {
    const auto model = exciton(4, false);
    const auto h = model.hamiltonian(2);
    QuantumObserver obs(h.op, model.observables(2), true);
    PacketSpec spec;
    spec.kind = PacketKind::gaussian;
    spec.width = 1.0;
    spec.momentum = 0.5;
    const auto psi = initial_fundamental(h.dims(), packet_coefficients(spec, 4));
    TdseConfig cfg;
    cfg.num_steps = 10;
    cfg.sub_steps = 20;
    cfg.truncation = exact_policy();
    cfg.solver = TdseSolver::s4;
    const auto a = propagate(h, psi, cfg, obs);
    cfg.solver = TdseSolver::qe;
    const auto b = propagate(h, psi, cfg, obs);
    for (double d : compare_runs(a.records, b.records, CompareMode::state)) EXPECT_LE(d, 1e-6);
    for (double d : compare_runs(a.records, b.records, CompareMode::populations)) EXPECT_LE(d, 1e-6);
}

TEST(Propagate, NormalizeKeepsUnitNorm) {
    const auto model = exciton(5, false);
    const auto h = model.hamiltonian(2);
    QuantumObserver obs(h.op, model.observables(2));
    const auto psi = initial_fundamental(h.dims(), packet_coefficients(PacketSpec{}, 5));
    TdseConfig cfg;
    cfg.num_steps = 5;
    cfg.normalize = true;
    cfg.truncation = {2, 0.0};
    for (auto s : {TdseSolver::s2, TdseSolver::yn}) {
        cfg.solver = s;
        for (const auto& rec : propagate(h, psi, cfg, obs).records) EXPECT_NEAR(rec.norm, 1.0, 1e-13);
    }
}

TEST(Propagate, SplitRunEqualsUninterruptedDenseRun) {
    const auto model = exciton(4, true);
    const auto h = model.hamiltonian(2);
    QuantumObserver obs(h.op, model.observables(2));
    const auto psi = initial_fundamental(h.dims(), packet_coefficients(PacketSpec{}, 4));
    TdseConfig cfg;
    cfg.solver = TdseSolver::qe;
    cfg.num_steps = 8;
    const auto full = propagate(h, psi, cfg, obs);
    cfg.num_steps = 3;
    const auto first = propagate(h, psi, cfg, obs);
    cfg.num_steps = 5;
    const auto second = propagate(h, first.final_state, cfg, obs, first.final_time, &psi, false);
    ASSERT_EQ(second.records.size(), 5u);
    for (std::size_t k = 0; k < 5; ++k) {
        const auto& x = full.records[k + 4];
        const auto& y = second.records[k];
        EXPECT_EQ(x.index, y.index);
        EXPECT_NEAR(x.time, y.time, 1e-12);
        EXPECT_NEAR(std::abs(x.acf - y.acf), 0.0, 1e-12);
        for (std::size_t i = 0; i < 4; ++i)
            EXPECT_NEAR(x.sites.at("quantum_number")[i].mean, y.sites.at("quantum_number")[i].mean, 1e-12);
    }
}

TEST(Bessel, InitialAndSumRule) {
    EXPECT_EQ(bessel_population(5, 5, -0.01, 0.0), 1.0);
    EXPECT_EQ(bessel_population(4, 5, -0.01, 0.0), 0.0);
    for (double t : {100.0, 540.0, 1500.0}) {
        double s = 0.0;
        for (Index k = -60; k <= 60; ++k) s += bessel_population(k, 0, -0.01, t);
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
    ExcitonModel hetero{ChainSpec{3, false, false}, {0.1, 0.2, 0.1}, {-0.01, -0.01}, 0.0};
    EXPECT_THROW(bessel_reference(hetero, 1, 1.0), ModelError);
}
