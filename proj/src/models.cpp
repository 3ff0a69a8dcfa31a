#include "chaintt/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <unsupported/Eigen/KroneckerProduct>

namespace chaintt {

namespace {

Matrix kron(const Matrix& a, const Matrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

Index wrap(Index i, Index n) { return ((i % n) + n) % n; }

}  // namespace

std::vector<double> expand_parameter(const std::vector<double>& values, Index count, const std::string& name,
                                     bool homogen) {
    if (values.empty()) throw ModelError(fmt::format("parameter '{}' is empty", name));
    if (values.size() == 1) return std::vector<double>(static_cast<std::size_t>(count), values[0]);
    if (homogen)
        throw ModelError(fmt::format("parameter '{}': homogeneous chains take a single value (got {})", name,
                                     values.size()));
    if (static_cast<Index>(values.size()) != count)
        throw ModelError(fmt::format("parameter '{}' has {} entries, expected {}", name, values.size(), count));
    return values;
}

// ---------------------------------------------------------------------------
// excitons

ExcitonModel::ExcitonModel(ChainSpec chain, std::vector<double> alpha, std::vector<double> beta, double eta)
    : chain_(chain), eta_(eta) {
    chain_.validate();
    alpha_ = expand_parameter(alpha, chain_.n_site, "alpha", chain_.homogen);
    beta_ = expand_parameter(beta, chain_.n_bonds(), "beta", chain_.homogen);
}

double ExcitonModel::bond_beta(Index i) const {
    return i < static_cast<Index>(beta_.size()) ? beta_[static_cast<std::size_t>(i)] : 0.0;
}

SlimParts ExcitonModel::slim(Index n_dim) const {
    const LadderOps b = ladder_ops(n_dim);
    const Index n = chain_.n_site;
    SlimParts parts;
    for (Index i = 0; i < n; ++i) {
        SiteParts s;
        s.single = alpha_[static_cast<std::size_t>(i)] * b.number + (eta_ / static_cast<double>(n)) * b.identity;
        const double beta = bond_beta(i);
        s.left = {beta * b.raise, beta * b.lower};
        s.right = {b.lower, b.raise};
        parts.sites.push_back(std::move(s));
    }
    return parts;
}

RealMatrix ExcitonModel::single_exciton_matrix() const {
    const Index n = chain_.n_site;
    RealMatrix t = RealMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) t(i, i) = alpha_[static_cast<std::size_t>(i)];
    for (Index i = 0; i < chain_.n_bonds(); ++i) {
        const Index j = wrap(i + 1, n);
        t(i, j) += beta_[static_cast<std::size_t>(i)];
        t(j, i) += beta_[static_cast<std::size_t>(i)];
    }
    return t;
}

std::vector<double> ExcitonModel::two_quanta_levels() const {
    if (!chain_.homogen) throw ModelError("analytic exciton levels need a homogeneous chain");
    if (!chain_.periodic) throw ModelError("two-quanta levels are available for rings only");
    const Index n = chain_.n_site;
    const double a = alpha_[0];
    const double b = beta_[0];
    std::vector<double> out;
    for (Index j1 = 0; j1 < n; ++j1)
        for (Index j2 = j1 + 1; j2 < n; ++j2) {
            const double k1 = 2.0 * std::numbers::pi * (static_cast<double>(j1) + 0.5) / static_cast<double>(n);
            const double k2 = 2.0 * std::numbers::pi * (static_cast<double>(j2) + 0.5) / static_cast<double>(n);
            out.push_back(eta_ + 2.0 * a + 2.0 * b * (std::cos(k1) + std::cos(k2)));
        }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> ExcitonModel::exact_levels(Index n_levels, bool two_quanta) const {
    if (!chain_.homogen) throw ModelError("analytic exciton levels need a homogeneous chain");
    std::vector<double> levels{eta_};
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(single_exciton_matrix(), Eigen::EigenvaluesOnly);
    for (Index k = 0; k < es.eigenvalues().size(); ++k) levels.push_back(eta_ + es.eigenvalues()(k));
    if (two_quanta) {
        const auto two = two_quanta_levels();
        levels.insert(levels.end(), two.begin(), two.end());
    }
    std::sort(levels.begin(), levels.end());
    if (static_cast<Index>(levels.size()) > n_levels) levels.resize(static_cast<std::size_t>(n_levels));
    return levels;
}

std::vector<LocalObservable> ExcitonModel::observables(Index n_dim) const {
    const LadderOps b = ladder_ops(n_dim);
    return {LocalObservable{"quantum_number", std::vector<Matrix>(static_cast<std::size_t>(chain_.n_site), b.number)}};
}

// ---------------------------------------------------------------------------
// phonons

PhononModel::PhononModel(ChainSpec chain, std::vector<double> mass, std::vector<double> nu, std::vector<double> omg)
    : chain_(chain) {
    chain_.validate();
    const Index n = chain_.n_site;
    mass_ = expand_parameter(mass, n, "mass", chain_.homogen);
    nu_ = expand_parameter(nu, n, "nu", chain_.homogen);
    omg_ = expand_parameter(omg, chain_.n_bonds(), "omg", chain_.homogen);
    for (Index i = 0; i < n; ++i)
        if (!(mass_[static_cast<std::size_t>(i)] > 0.0))
            throw ModelError(fmt::format("mass of site {} must be positive", i));

    nu_eff_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const double m = mass_[static_cast<std::size_t>(i)];
        double arg = nu_[static_cast<std::size_t>(i)] * nu_[static_cast<std::size_t>(i)];
        const bool has_prev = chain_.periodic || i > 0;
        const bool has_next = chain_.periodic || i + 1 < n;
        if (has_prev) {
            const Index p = wrap(i - 1, n);
            const double mp = mass_[static_cast<std::size_t>(p)];
            arg += mp / (m + mp) * bond_omg(p) * bond_omg(p);
        }
        if (has_next) {
            const double mn = mass_[static_cast<std::size_t>(wrap(i + 1, n))];
            arg += mn / (m + mn) * bond_omg(i) * bond_omg(i);
        }
        if (!(arg > 0.0)) throw ModelError(fmt::format("effective frequency of site {} is not real and positive", i));
        nu_eff_[static_cast<std::size_t>(i)] = std::sqrt(arg);
    }
    omg_eff_.assign(static_cast<std::size_t>(n), 0.0);
    for (Index i = 0; i < chain_.n_bonds(); ++i) {
        const Index j = wrap(i + 1, n);
        const double w = bond_omg(i);
        omg_eff_[static_cast<std::size_t>(i)] =
            reduced_mass(i) * w * w /
            (2.0 * std::sqrt(mass_[static_cast<std::size_t>(i)] * nu_eff_[static_cast<std::size_t>(i)] *
                             mass_[static_cast<std::size_t>(j)] * nu_eff_[static_cast<std::size_t>(j)]));
        if (!std::isfinite(omg_eff_[static_cast<std::size_t>(i)]))
            throw ModelError(fmt::format("effective bond frequency of bond {} is not finite", i));
    }
}

double PhononModel::bond_omg(Index i) const {
    return i < static_cast<Index>(omg_.size()) ? omg_[static_cast<std::size_t>(i)] : 0.0;
}

double PhononModel::reduced_mass(Index i) const {
    const double a = mass_[static_cast<std::size_t>(i)];
    const double b = mass_[static_cast<std::size_t>(wrap(i + 1, chain_.n_site))];
    return a * b / (a + b);
}

double PhononModel::length_scale(Index i) const {
    return std::sqrt(2.0 * mass_[static_cast<std::size_t>(i)] * nu_eff_[static_cast<std::size_t>(i)]);
}

SlimParts PhononModel::slim(Index n_dim) const {
    const LadderOps c = ladder_ops(n_dim);
    const Matrix x = c.raise + c.lower;
    SlimParts parts;
    for (Index i = 0; i < chain_.n_site; ++i) {
        SiteParts s;
        s.single = nu_eff_[static_cast<std::size_t>(i)] * (c.number + 0.5 * c.identity);
        s.left = {-omg_eff_[static_cast<std::size_t>(i)] * x};
        s.right = {x};
        parts.sites.push_back(std::move(s));
    }
    return parts;
}

void PhononModel::check_length(const RealVector& v, const char* what) const {
    if (v.size() != chain_.n_site)
        throw DimensionError(fmt::format("{} has {} entries, chain has {} sites", what, v.size(), chain_.n_site));
}

RealMatrix PhononModel::hess_pot() const {
    const Index n = chain_.n_site;
    RealMatrix k = RealMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        k(i, i) += mass_[static_cast<std::size_t>(i)] * nu_[static_cast<std::size_t>(i)] * nu_[static_cast<std::size_t>(i)];
    for (Index b = 0; b < chain_.n_bonds(); ++b) {
        const Index j = wrap(b + 1, n);
        const double s = reduced_mass(b) * bond_omg(b) * bond_omg(b);
        k(b, b) += s;
        k(j, j) += s;
        k(b, j) -= s;
        k(j, b) -= s;
    }
    return k;
}

RealMatrix PhononModel::hess_kin() const {
    RealVector inv(chain_.n_site);
    for (Index i = 0; i < chain_.n_site; ++i) inv(i) = 1.0 / mass_[static_cast<std::size_t>(i)];
    return inv.asDiagonal();
}

double PhononModel::potential(const RealVector& q) const {
    check_length(q, "positions");
    return 0.5 * q.dot(hess_pot() * q);
}

double PhononModel::kinetic(const RealVector& p) const {
    check_length(p, "momenta");
    return 0.5 * p.dot(hess_kin() * p);
}

RealVector PhononModel::force(const RealVector& q) const {
    check_length(q, "positions");
    return -(hess_pot() * q);
}

RealVector PhononModel::normal_modes() const {
    const Index n = chain_.n_site;
    RealVector inv_sqrt_m(n);
    for (Index i = 0; i < n; ++i) inv_sqrt_m(i) = 1.0 / std::sqrt(mass_[static_cast<std::size_t>(i)]);
    const RealMatrix d = inv_sqrt_m.asDiagonal() * hess_pot() * inv_sqrt_m.asDiagonal();
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(d, Eigen::EigenvaluesOnly);
    RealVector w = es.eigenvalues();
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    RealVector omega(n);
    for (Index k = 0; k < n; ++k) {
        if (w(k) < -1e-12 * scale) throw ModelError(fmt::format("unstable chain: squared mode frequency {}", w(k)));
        omega(k) = std::sqrt(std::max(0.0, w(k)));
    }
    return omega;
}

std::vector<double> PhononModel::exact_levels(Index n_levels) const {
    const RealVector omega = normal_modes();
    const Index n = omega.size();
    using Occupation = std::vector<int>;
    auto energy = [&](const Occupation& occ) {
        double e = 0.0;
        for (Index k = 0; k < n; ++k) e += (occ[static_cast<std::size_t>(k)] + 0.5) * omega(k);
        return e;
    };
    using Item = std::pair<double, Occupation>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::set<Occupation> seen;
    Occupation ground(static_cast<std::size_t>(n), 0);
    heap.emplace(energy(ground), ground);
    seen.insert(ground);
    std::vector<double> levels;
    while (static_cast<Index>(levels.size()) < n_levels && !heap.empty()) {
        auto [e, occ] = heap.top();
        heap.pop();
        levels.push_back(e);
        for (Index k = 0; k < n; ++k) {
            Occupation next = occ;
            ++next[static_cast<std::size_t>(k)];
            if (seen.insert(next).second) heap.emplace(energy(next), next);
        }
    }
    return levels;
}

std::vector<LocalObservable> PhononModel::observables(Index n_dim) const {
    const LadderOps c = ladder_ops(n_dim);
    const auto n = static_cast<std::size_t>(chain_.n_site);
    LocalObservable number{"quantum_number", std::vector<Matrix>(n, c.number)};
    LocalObservable pos{"position", {}};
    LocalObservable mom{"momentum", {}};
    for (std::size_t i = 0; i < n; ++i) {
        const double s = length_scale(static_cast<Index>(i));
        pos.per_site.push_back((c.raise + c.lower) / s);
        mom.per_site.push_back(Complex(0.0, 0.5 * s) * (c.raise - c.lower));
    }
    return {number, pos, mom};
}

// ---------------------------------------------------------------------------
// coupled excitons and phonons

CoupledModel::CoupledModel(ExcitonModel exciton, PhononModel phonon, std::vector<double> chi, std::vector<double> rho,
                           std::vector<double> sig, std::vector<double> tau)
    : exciton_(std::move(exciton)), phonon_(std::move(phonon)) {
    const ChainSpec& a = exciton_.chain();
    const ChainSpec& b = phonon_.chain();
    if (a.n_site != b.n_site || a.periodic != b.periodic || a.homogen != b.homogen)
        throw ModelError("exciton and phonon parts must share the chain topology");
    const Index n = a.n_site;
    chi_ = expand_parameter(chi, n, "chi", a.homogen);
    rho_ = expand_parameter(rho, n, "rho", a.homogen);
    sig_ = expand_parameter(sig, n, "sig", a.homogen);
    tau_ = expand_parameter(tau, a.n_bonds(), "tau", a.homogen);
    if (a.periodic && n < 3) {
        auto nonzero = [](const std::vector<double>& v) {
            return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
        };
        if (nonzero(sig_) || nonzero(tau_))
            throw ModelError("rings with sigma or tau coupling need at least 3 sites");
    }

    const auto sz = static_cast<std::size_t>(n);
    auto s = [&](Index i) { return phonon_.length_scale(wrap(i, n)); };
    barred_.chi_bar.resize(sz);
    barred_.rho_bar.assign(sz, 0.0);
    barred_.rho_bbar.resize(sz);
    barred_.sig_bar.assign(sz, 0.0);
    barred_.sig_bbar.assign(sz, 0.0);
    barred_.tau_bar.assign(sz, 0.0);
    barred_.tau_bbar.assign(sz, 0.0);
    for (Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const bool has_next = a.periodic || i + 1 < n;
        const bool has_prev = a.periodic || i > 0;
        barred_.chi_bar[k] = chi_[k] / s(i);
        barred_.rho_bbar[k] = rho_[k] / s(i);
        if (has_next) {
            barred_.rho_bar[k] = rho_[k] / s(i + 1);
            barred_.sig_bar[k] = sig_[k] / s(i + 1);
            barred_.tau_bar[k] = bond_tau(i) / s(i + 1);
            barred_.tau_bbar[k] = bond_tau(i) / s(i);
        }
        if (has_prev) barred_.sig_bbar[k] = sig_[k] / s(i - 1);
    }
}

double CoupledModel::bond_tau(Index i) const {
    return i < static_cast<Index>(tau_.size()) ? tau_[static_cast<std::size_t>(i)] : 0.0;
}

SlimParts CoupledModel::slim(Index dim_ex, Index dim_ph) const {
    const LadderOps b = ladder_ops(dim_ex);
    const LadderOps c = ladder_ops(dim_ph);
    const Matrix x = c.raise + c.lower;
    const Matrix& ie = b.identity;
    const Matrix& ip = c.identity;
    const Index n = chain().n_site;
    const double eta_share = exciton_.eta() / static_cast<double>(n);

    const Matrix bd_i = kron(b.raise, ip);
    const Matrix b_i = kron(b.lower, ip);
    const Matrix n_i = kron(b.number, ip);
    const Matrix i_x = kron(ie, x);
    const Matrix n_x = kron(b.number, x);
    const Matrix bd_x = kron(b.raise, x);
    const Matrix b_x = kron(b.lower, x);

    SlimParts parts;
    for (Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double beta = exciton_.bond_beta(i);
        const double omg = phonon_.omg_eff()[k];
        const double nu = phonon_.nu_eff()[k];
        SiteParts s;
        s.single = kron(exciton_.alpha()[k] * b.number + eta_share * ie, ip) + kron(ie, nu * (c.number + 0.5 * ip)) +
                   (barred_.chi_bar[k] - barred_.rho_bbar[k]) * n_x;
        s.left = {
            beta * bd_i,
            beta * b_i,
            -omg * i_x,
            (barred_.rho_bar[k] + barred_.sig_bar[k]) * n_i,
            -i_x,
            barred_.tau_bar[k] * bd_i,
            -barred_.tau_bbar[k] * bd_x,
            barred_.tau_bar[k] * b_i,
            -barred_.tau_bbar[k] * b_x,
        };
        s.right = {
            b_i, bd_i, i_x, i_x, barred_.sig_bbar[k] * n_i, b_x, b_i, bd_x, bd_i,
        };
        parts.sites.push_back(std::move(s));
    }
    return parts;
}

bool CoupledModel::sigma_only() const {
    auto zero = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    };
    return zero(chi_) && zero(rho_) && zero(tau_);
}

void CoupledModel::require_sigma_only() const {
    if (!sigma_only())
        throw ModelError("mean-field dynamics supports the sigma coupling only (chi, rho and tau must vanish)");
}

RealVector CoupledModel::qu_coupling(const RealVector& q) const {
    require_sigma_only();
    const Index n = chain().n_site;
    if (q.size() != n) throw DimensionError(fmt::format("positions have {} entries, chain has {} sites", q.size(), n));
    const bool ring = chain().periodic;
    RealVector e(n);
    for (Index i = 0; i < n; ++i) {
        const double next = (ring || i + 1 < n) ? q(wrap(i + 1, n)) : 0.0;
        const double prev = (ring || i > 0) ? q(wrap(i - 1, n)) : 0.0;
        e(i) = sig_[static_cast<std::size_t>(i)] * (next - prev);
    }
    return e;
}

RealVector CoupledModel::cl_coupling(const Vector& a) const {
    require_sigma_only();
    const Index n = chain().n_site;
    if (a.size() != n) throw DimensionError(fmt::format("amplitudes have {} entries, chain has {} sites", a.size(), n));
    const bool ring = chain().periodic;
    RealVector f = RealVector::Zero(n);
    for (Index i = 0; i < n; ++i) {
        if (ring || i > 0) {
            const Index p = wrap(i - 1, n);
            f(i) -= sig_[static_cast<std::size_t>(p)] * std::norm(a(p));
        }
        if (ring || i + 1 < n) {
            const Index m = wrap(i + 1, n);
            f(i) += sig_[static_cast<std::size_t>(m)] * std::norm(a(m));
        }
    }
    return f;
}

std::vector<LocalObservable> CoupledModel::observables(Index dim_ex, Index dim_ph) const {
    const LadderOps b = ladder_ops(dim_ex);
    const LadderOps c = ladder_ops(dim_ph);
    const auto n = static_cast<std::size_t>(chain().n_site);
    LocalObservable ex{"quantum_number", std::vector<Matrix>(n, kron(b.number, c.identity))};
    LocalObservable ph{"phonon_number", std::vector<Matrix>(n, kron(b.identity, c.number))};
    LocalObservable pos{"position", {}};
    LocalObservable mom{"momentum", {}};
    for (std::size_t i = 0; i < n; ++i) {
        const double s = phonon_.length_scale(static_cast<Index>(i));
        pos.per_site.push_back(kron(b.identity, (c.raise + c.lower) / s));
        mom.per_site.push_back(kron(b.identity, Complex(0.0, 0.5 * s) * (c.raise - c.lower)));
    }
    return {ex, ph, pos, mom};
}

}  // namespace chaintt
