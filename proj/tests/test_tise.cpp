#include <gtest/gtest.h>

#include <algorithm>

#include "chaintt/models.hpp"
#include "chaintt/tise.hpp"
#include "oracles.hpp"

using namespace chaintt;

namespace {

std::vector<double> energies(const TiseResult& r) {
    std::vector<double> e;
    for (const auto& lv : r.levels) e.push_back(lv.energy);
    std::sort(e.begin(), e.end());
    return e;
}

void expect_orthonormal(const TiseResult& r) {
    for (std::size_t a = 0; a < r.levels.size(); ++a) {
        EXPECT_NEAR(norm(r.levels[a].state), 1.0, 1e-10);
        for (std::size_t b = 0; b < a; ++b)
            EXPECT_LE(std::abs(inner(r.levels[a].state, r.levels[b].state)), 1e-8) << a << "," << b;
    }
}

TiseConfig als_config(Index levels, Index ranks) {
    TiseConfig c;
    c.n_levels = levels;
    c.ranks = ranks;
    c.repeats = 30;
    c.conv_eps = 1e-10;
    return c;
}

}  // namespace

TEST(TiseConfig, Validation) {
    TiseConfig c;
    EXPECT_NO_THROW(c.validate());
    c.repeats = 2;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.ranks = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.conv_eps = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.n_levels = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_EQ(parse_tise_solver("qe"), TiseSolver::qe);
    EXPECT_EQ(parse_eigen_selector("sparse-shift-invert"), EigenSelector::sparse_shift_invert);
    EXPECT_THROW(parse_eigen_selector("eigs"), ConfigError);
}

TEST(Tise, UncoupledExcitonDegeneracy) {
    ExcitonModel model{ChainSpec{4, false, true}, {0.1}, {0.0}, 0.05};
    const auto h = model.hamiltonian(2).op;
    for (auto solver : {TiseSolver::als, TiseSolver::qe}) {
        auto cfg = als_config(5, 4);
        cfg.solver = solver;
        const auto r = solve_tise(h, cfg);
        const auto e = energies(r);
        ASSERT_EQ(e.size(), 5u);
        EXPECT_NEAR(e[0], 0.05, 1e-10);
        for (int k = 1; k < 5; ++k) EXPECT_NEAR(e[static_cast<std::size_t>(k)], 0.15, 1e-10);
        expect_orthonormal(r);
    }
}

TEST(Tise, ThreeSiteExcitonSingleManifold) {
    ExcitonModel model{ChainSpec{3, false, true}, {0.1}, {-0.01}, 0.0};
    const auto h = model.hamiltonian(2).op;
    const std::vector<double> expect{0.0, 0.1 - 0.01 * std::sqrt(2.0), 0.1, 0.1 + 0.01 * std::sqrt(2.0)};
    for (auto solver : {TiseSolver::als, TiseSolver::qe}) {
        auto cfg = als_config(4, 4);
        cfg.solver = solver;
        const auto e = energies(solve_tise(h, cfg));
        for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(e[k], expect[k], 1e-10);
    }
    EXPECT_NEAR(expect[1], 0.085858, 1e-6);
    EXPECT_NEAR(expect[3], 0.114142, 1e-6);
}

TEST(Tise, PhononGroundStateMatchesNormalModes) {
    PhononModel model{ChainSpec{3, false, true}, {1.0}, {1e-3}, {std::sqrt(2.0) * 1e-3}};
    const auto h = model.hamiltonian(8).op;
    auto cfg = als_config(1, 8);
    const auto r = solve_tise(h, cfg);
    const double zero_point = 0.5 * model.normal_modes().sum();
    EXPECT_NEAR(r.levels[0].energy, zero_point, 1e-8);
    EXPECT_TRUE(r.levels[0].converged);
}

TEST(AlsSweep, DiagonalFixedPoint) {
    ExcitonModel model{ChainSpec{3, false, false}, {0.3, 0.1, 0.2}, {0.0, 0.0}, -0.4};
    const auto h = model.hamiltonian(2).op;
    const std::vector<Vector> ground(3, Vector::Unit(2, 0));
    const auto trial = product_state(ground);
    const auto sw = als_sweep(h, trial, {}, 0.0, EigenSelector::dense_hermitian, std::nullopt);
    EXPECT_NEAR(sw.eigenvalue, -0.4, 1e-14);
    EXPECT_NEAR(std::abs(inner(sw.state, trial)), 1.0, 1e-14);
}

TEST(AlsSweep, RayleighQuotientIsMonotone) {
    ExcitonModel model{ChainSpec{4, false, true}, {0.1}, {-0.01}, 0.0};
    const auto h = model.hamiltonian(2).op;
    std::mt19937_64 rng(17);
    TTState x = orthonormalize(random_state(h.dims(), 2, rng), Direction::right);
    double last = expectation(x, h, x).real() / inner(x, x).real();
    for (Index s = 1; s <= 6; ++s) {
        const auto sw = als_sweep(h, x, {}, 0.0, EigenSelector::sparse_shift_invert, -1.0, s);
        x = sw.state;
        const double rq = expectation(x, h, x).real() / inner(x, x).real();
        EXPECT_LE(rq, last + 1e-13) << "sweep " << s;
        EXPECT_NEAR(rq, sw.eigenvalue, 1e-12);
        last = rq;
    }
}

TEST(AlsSweep, RejectsMismatchedTrial) {
    ExcitonModel model{ChainSpec{3, false, true}, {0.1}, {-0.01}, 0.0};
    const auto h = model.hamiltonian(2).op;
    std::mt19937_64 rng(1);
    const auto trial = random_state(std::vector<Index>{2, 2}, 1, rng);
    EXPECT_THROW(als_sweep(h, trial, {}, 0.0, EigenSelector::dense_hermitian, std::nullopt), DimensionError);
}

TEST(Tise, LevelsMatchDenseAndAreOrthogonal) {
    ExcitonModel model{ChainSpec{4, true, true}, {0.1}, {-0.01}, 0.0};
    const auto h = model.hamiltonian(2).op;
    const auto dense = oracle::lowest_eigenvalues(to_dense(h), 6);
    const auto r = solve_tise(h, als_config(6, 6));
    const auto e = energies(r);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(e[k], dense[k], 1e-9);
    expect_orthonormal(r);
    for (const auto& lv : r.levels) {
        EXPECT_TRUE(lv.converged);
        EXPECT_LE(lv.residual, 1e-6 * std::max(1.0, std::abs(lv.energy)));
        EXPECT_NEAR(lv.residual, residual_norm(h, lv.state, lv.energy), 1e-12);
        ASSERT_GE(lv.history.size(), 4u);
        const auto& hist = lv.history;
        for (std::size_t j = hist.size() - 3; j < hist.size(); ++j)
            EXPECT_LT(std::abs(hist[j] - hist[j - 1]), 1e-10);
    }
}

TEST(Tise, DeflationLeavesLowerLevelsUnchanged) {
    PhononModel model{ChainSpec{4, true, true}, {1.0}, {1e-3}, {std::sqrt(2.0) * 1e-3}};
    const auto h = model.hamiltonian(3).op;
    auto cfg = als_config(4, 9);
    const auto many = solve_tise(h, cfg);
    cfg.n_levels = 1;
    const auto one = solve_tise(h, cfg);
    EXPECT_NEAR(one.levels[0].energy, many.levels[0].energy, cfg.conv_eps);
    expect_orthonormal(many);
}

TEST(Tise, ConvergedFlagImpliesSmallDeltas) {
    ExcitonModel model{ChainSpec{5, true, true}, {0.1}, {-0.01}, 0.0};
    const auto h = model.hamiltonian(2).op;
    TiseConfig cfg = als_config(2, 2);
    cfg.repeats = 3;
    cfg.conv_eps = 1e-14;
    const auto r = solve_tise(h, cfg);
    for (const auto& lv : r.levels) {
        EXPECT_LE(lv.sweeps, 3);
        EXPECT_EQ(lv.history.size(), static_cast<std::size_t>(lv.sweeps + 1));
        if (lv.converged) {
            for (std::size_t j = lv.history.size() - 3; j < lv.history.size(); ++j)
                EXPECT_LT(std::abs(lv.history[j] - lv.history[j - 1]), cfg.conv_eps);
        }
    }
}

TEST(Tise, TargetedLevelsWithShiftInvert) {
    ExcitonModel model{ChainSpec{4, false, true}, {0.1}, {-0.01}, 0.0};
    const auto h = model.hamiltonian(2).op;
    const Matrix a = to_dense(h);
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    std::vector<double> all(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    const double target = 0.1;
    std::sort(all.begin(), all.end(), [&](double x, double y) { return std::abs(x - target) < std::abs(y - target); });
    std::vector<double> expect(all.begin(), all.begin() + 2);
    std::sort(expect.begin(), expect.end());
    for (auto sel : {EigenSelector::sparse_shift_invert, EigenSelector::dense_all}) {
        for (auto solver : {TiseSolver::als, TiseSolver::qe}) {
            auto cfg = als_config(2, 4);
            cfg.eigen = sel;
            cfg.solver = solver;
            cfg.e_est = target;
            const auto e = energies(solve_tise(h, cfg));
            for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(e[k], expect[k], 1e-9);
        }
    }
}

TEST(Tise, SingleSite) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 0.1;
    m(1, 1) = 0.4;
    const std::vector<Matrix> site{m};
    const auto h = product_operator(site);
    const auto e = energies(solve_tise(h, als_config(2, 1)));
    EXPECT_NEAR(e[0], 0.1, 1e-14);
    EXPECT_NEAR(e[1], 0.4, 1e-14);
}

TEST(TiseDense, ExactExcitonLevels) {
    for (Index n = 3; n <= 5; ++n) {
        ExcitonModel model{ChainSpec{n, false, true}, {0.1}, {-0.01}, 0.02};
        TiseConfig cfg;
        cfg.solver = TiseSolver::qe;
        cfg.n_levels = n + 1;
        const auto e = energies(solve_tise(model.hamiltonian(2).op, cfg));
        const auto ref = model.exact_levels(n + 1);
        for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(e[k], ref[k], 1e-12);
    }
}

TEST(TiseDense, StatesAreEigenvectors) {
    ExcitonModel model{ChainSpec{4, true, true}, {0.1}, {-0.01}, 0.0};
    const auto h = model.hamiltonian(2).op;
    TiseConfig cfg;
    cfg.n_levels = 3;
    const auto r = solve_tise_dense(h, cfg);
    expect_orthonormal(r);
    for (const auto& lv : r.levels) EXPECT_LE(residual_norm(h, lv.state, lv.energy), 1e-12);
}

TEST(TiseDense, HermiticityGateAndCap) {
    std::mt19937_64 rng(4);
    const auto h = random_operator(std::vector<Index>{2, 2, 2}, 2, rng);
    TiseConfig cfg;
    EXPECT_THROW(solve_tise_dense(h, cfg), ModelError);
    ExcitonModel model{ChainSpec{6, false, true}, {0.1}, {-0.01}, 0.0};
    cfg.dense_cap = 32;
    EXPECT_THROW(solve_tise_dense(model.hamiltonian(2).op, cfg), CapExceeded);
}
