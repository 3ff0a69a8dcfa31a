#include "chaintt/observables.hpp"

#include <cmath>

#include <fmt/format.h>

namespace chaintt {

namespace {

/// Slice X_s (left x right) of a state core.
Matrix slice(const StateCore& c, Index s) {
    Matrix m(c.left, c.right);
    for (Index a = 0; a < c.left; ++a)
        for (Index b = 0; b < c.right; ++b) m(a, b) = c(a, s, b);
    return m;
}

std::vector<Matrix> left_environments(const TTState& x) {
    std::vector<Matrix> env;
    env.push_back(Matrix::Ones(1, 1));
    for (std::size_t k = 0; k + 1 < x.order(); ++k) {
        const auto& c = x.core(k);
        Matrix next = Matrix::Zero(c.right, c.right);
        for (Index s = 0; s < c.phys[0]; ++s) {
            const Matrix xs = slice(c, s);
            next.noalias() += xs.transpose() * env.back() * xs.conjugate();
        }
        env.push_back(std::move(next));
    }
    return env;
}

std::vector<Matrix> right_environments(const TTState& x) {
    const std::size_t n = x.order();
    std::vector<Matrix> env(n);
    env[n - 1] = Matrix::Ones(1, 1);
    for (std::size_t k = n - 1; k > 0; --k) {
        const auto& c = x.core(k);
        Matrix next = Matrix::Zero(c.left, c.left);
        for (Index s = 0; s < c.phys[0]; ++s) {
            const Matrix xs = slice(c, s);
            next.noalias() += xs * env[k] * xs.adjoint();
        }
        env[k - 1] = std::move(next);
    }
    return env;
}

Matrix local_density(const StateCore& c, const Matrix& left, const Matrix& right) {
    const Index d = c.phys[0];
    std::vector<Matrix> slices;
    for (Index s = 0; s < d; ++s) slices.push_back(slice(c, s));
    Matrix rho(d, d);
    for (Index s = 0; s < d; ++s) {
        const Matrix ls = slices[static_cast<std::size_t>(s)].transpose() * left;
        for (Index t = 0; t < d; ++t)
            rho(s, t) = (ls * slices[static_cast<std::size_t>(t)].conjugate()).cwiseProduct(right).sum();
    }
    const Complex tr = rho.trace();
    if (std::abs(tr) == 0.0) throw NumericalError("reduced density of a zero state");
    rho /= tr.real();
    // symmetrize away roundoff
    return 0.5 * (rho + rho.adjoint());
}

}  // namespace

Matrix reduce_site(const TTState& psi, Index site) {
    if (site < 0 || site >= static_cast<Index>(psi.order()))
        throw DimensionError(fmt::format("site {} out of range (chain has {} sites)", site, psi.order()));
    const auto left = left_environments(psi);
    const auto right = right_environments(psi);
    const auto k = static_cast<std::size_t>(site);
    return local_density(psi.core(k), left[k], right[k]);
}

std::vector<Matrix> reduce_sites(const TTState& psi) {
    const auto left = left_environments(psi);
    const auto right = right_environments(psi);
    std::vector<Matrix> out;
    for (std::size_t k = 0; k < psi.order(); ++k) out.push_back(local_density(psi.core(k), left[k], right[k]));
    return out;
}

Moment expect_local(const Matrix& rho, const Matrix& op) {
    if (rho.rows() != op.rows() || op.rows() != op.cols())
        throw DimensionError(fmt::format("operator is {}x{}, density is {}x{}", op.rows(), op.cols(), rho.rows(),
                                         rho.cols()));
    const double mean = (rho * op).trace().real();
    const double second = (rho * op * op).trace().real();
    return {mean, std::sqrt(std::max(0.0, second - mean * mean))};
}

Moment expect_local(const TTState& psi, Index site, const Matrix& op) {
    return expect_local(reduce_site(psi, site), op);
}

// ---------------------------------------------------------------------------

QuantumObserver::QuantumObserver(TTOperator hamiltonian, std::vector<LocalObservable> observables, bool keep_states)
    : hamiltonian_(std::move(hamiltonian)), observables_(std::move(observables)), keep_states_(keep_states) {
    for (const auto& o : observables_)
        if (o.per_site.size() != hamiltonian_.order())
            throw DimensionError(fmt::format("observable '{}' covers {} sites, chain has {}", o.name,
                                             o.per_site.size(), hamiltonian_.order()));
}

ObservableRecord QuantumObserver::from_densities(std::vector<Matrix> densities, const std::string& kind, Index index,
                                                 double time) const {
    ObservableRecord r;
    r.kind = kind;
    r.index = index;
    r.time = time;
    for (const auto& rho : densities) {
        std::vector<double> pop(static_cast<std::size_t>(rho.rows()));
        for (Index s = 0; s < rho.rows(); ++s) pop[static_cast<std::size_t>(s)] = rho(s, s).real();
        r.populations.push_back(std::move(pop));
    }
    for (const auto& o : observables_) {
        std::vector<Moment> values;
        for (std::size_t k = 0; k < densities.size(); ++k) values.push_back(expect_local(densities[k], o.per_site[k]));
        r.sites[o.name] = std::move(values);
    }
    r.densities = std::move(densities);
    return r;
}

ObservableRecord QuantumObserver::observe(const TTState& psi, const TTState* reference, const std::string& kind,
                                          Index index, double time) const {
    const double nrm = norm(psi);
    if (!std::isfinite(nrm)) throw NumericalError(fmt::format("{} record {}: state norm is not finite", kind, index));
    if (nrm == 0.0) throw NumericalError(fmt::format("{} record {}: state vanished", kind, index));
    ObservableRecord r = from_densities(reduce_sites(psi), kind, index, time);
    r.norm = nrm;
    r.energy = expectation(psi, hamiltonian_, psi).real() / (nrm * nrm);
    r.acf = reference ? inner(*reference, psi) : Complex(1.0, 0.0);
    if (keep_states_) r.state = psi;
    return r;
}

ObservableRecord QuantumObserver::observe_dense(const Vector& psi, const std::vector<Index>& dims,
                                                const Vector* reference, const std::string& kind, Index index,
                                                double time) const {
    const TTState x = from_dense(dims, psi, TruncationPolicy{}, psi.size());
    ObservableRecord r = observe(x, nullptr, kind, index, time);
    r.norm = psi.norm();
    r.acf = reference ? reference->dot(psi) : Complex(1.0, 0.0);
    return r;
}

// ---------------------------------------------------------------------------

CompareMode parse_compare_mode(const std::string& name) {
    if (name == "state") return CompareMode::state;
    if (name == "populations") return CompareMode::populations;
    if (name == "positions") return CompareMode::positions;
    if (name == "momenta") return CompareMode::momenta;
    throw ConfigError("io.compare_mode", fmt::format("unknown comparison mode '{}'", name));
}

std::string to_string(CompareMode mode) {
    switch (mode) {
        case CompareMode::state: return "state";
        case CompareMode::populations: return "populations";
        case CompareMode::positions: return "positions";
        case CompareMode::momenta: return "momenta";
    }
    return "?";
}

namespace {

const std::vector<Moment>& site_values(const ObservableRecord& r, const std::string& name) {
    const auto it = r.sites.find(name);
    if (it == r.sites.end())
        throw DimensionError(fmt::format("record {} carries no '{}' values", r.index, name));
    return it->second;
}

double rmsd(const std::vector<Moment>& a, const std::vector<Moment>& b) {
    if (a.size() != b.size() || a.empty())
        throw DimensionError(fmt::format("site counts differ ({} vs {})", a.size(), b.size()));
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k].mean - b[k].mean) * (a[k].mean - b[k].mean);
    return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace

std::vector<double> compare_runs(const std::vector<ObservableRecord>& a, const std::vector<ObservableRecord>& b,
                                 CompareMode mode) {
    if (a.size() != b.size())
        throw DimensionError(fmt::format("time grids differ: {} vs {} records", a.size(), b.size()));
    std::vector<double> out;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double ta = a[k].time;
        const double tb = b[k].time;
        if (std::abs(ta - tb) > 1e-9 * std::max(1.0, std::abs(ta)))
            throw DimensionError(fmt::format("time grids differ at record {} ({} vs {})", k, ta, tb));
        switch (mode) {
            case CompareMode::state: {
                if (!a[k].state || !b[k].state)
                    throw DimensionError(fmt::format("record {} has no stored state", k));
                const TTState diff = add(*a[k].state, scale(*b[k].state, -1.0));
                out.push_back(norm(diff) / std::sqrt(static_cast<double>(a[k].state->full_dim())));
                break;
            }
            case CompareMode::populations:
                out.push_back(rmsd(site_values(a[k], "quantum_number"), site_values(b[k], "quantum_number")));
                break;
            case CompareMode::positions:
                out.push_back(rmsd(site_values(a[k], "position"), site_values(b[k], "position")));
                break;
            case CompareMode::momenta:
                out.push_back(rmsd(site_values(a[k], "momentum"), site_values(b[k], "momentum")));
                break;
        }
    }
    return out;
}

Regression regress_conserved(const std::vector<double>& times, const std::vector<double>& values) {
    if (times.size() != values.size())
        throw DimensionError(fmt::format("regression: {} times but {} values", times.size(), values.size()));
    const auto n = static_cast<double>(times.size());
    if (times.size() < 2) return {0.0, values.empty() ? 0.0 : values[0], 1.0};
    double mt = 0.0, mv = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        mt += times[k];
        mv += values[k];
    }
    mt /= n;
    mv /= n;
    double stt = 0.0, stv = 0.0, svv = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        stt += (times[k] - mt) * (times[k] - mt);
        stv += (times[k] - mt) * (values[k] - mv);
        svv += (values[k] - mv) * (values[k] - mv);
    }
    if (stt == 0.0) throw DimensionError("regression: all times are equal");
    Regression r;
    r.slope = stv / stt;
    r.intercept = mv - r.slope * mt;
    double sse = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double e = values[k] - (r.intercept + r.slope * times[k]);
        sse += e * e;
    }
    r.r2 = svv > 0.0 ? 1.0 - sse / svv : 1.0;
    return r;
}

}  // namespace chaintt
