#include "chaintt/tdse.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "svd.hpp"
#include <unsupported/Eigen/KroneckerProduct>

namespace chaintt {

TdseSolver parse_tdse_solver(const std::string& name) {
    static const std::map<std::string, TdseSolver> names{
        {"s2", TdseSolver::s2}, {"s4", TdseSolver::s4}, {"s6", TdseSolver::s6}, {"lt", TdseSolver::lt},
        {"sm", TdseSolver::sm}, {"yn", TdseSolver::yn}, {"kl", TdseSolver::kl}, {"qe", TdseSolver::qe}};
    const auto it = names.find(name);
    if (it == names.end()) throw ConfigError("dynamics.solver", fmt::format("unknown TDSE solver '{}'", name));
    return it->second;
}

std::string to_string(TdseSolver solver) {
    switch (solver) {
        case TdseSolver::s2: return "s2";
        case TdseSolver::s4: return "s4";
        case TdseSolver::s6: return "s6";
        case TdseSolver::lt: return "lt";
        case TdseSolver::sm: return "sm";
        case TdseSolver::yn: return "yn";
        case TdseSolver::kl: return "kl";
        case TdseSolver::qe: return "qe";
    }
    return "?";
}

bool is_symmetric_euler(TdseSolver s) { return s == TdseSolver::s2 || s == TdseSolver::s4 || s == TdseSolver::s6; }

bool is_splitting(TdseSolver s) {
    return s == TdseSolver::lt || s == TdseSolver::sm || s == TdseSolver::yn || s == TdseSolver::kl;
}

void TdseConfig::validate() const {
    if (num_steps < 1) throw ConfigError("dynamics.num_steps", "must be >= 1");
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("dynamics.step_size", "must be > 0");
    if (sub_steps < 1) throw ConfigError("dynamics.sub_steps", "must be >= 1");
    try {
        truncation.validate();
    } catch (const Error& e) {
        throw ConfigError("dynamics.max_rank", e.what());
    }
}

// -- initial states ---------------------------------------------------------

PacketKind parse_packet_kind(const std::string& name) {
    if (name == "fundamental") return PacketKind::fundamental;
    if (name == "gaussian") return PacketKind::gaussian;
    if (name == "sech") return PacketKind::sech;
    if (name == "coherent") return PacketKind::coherent;
    throw ConfigError("dynamics.initial.kind", fmt::format("unknown initial state '{}'", name));
}

std::vector<Complex> packet_coefficients(const PacketSpec& spec, Index n_site) {
    const Index i0 = spec.center < 0 ? n_site / 2 : spec.center;
    if (i0 >= n_site) throw ConfigError("dynamics.initial.center", fmt::format("site {} outside the chain", i0));
    std::vector<Complex> c(static_cast<std::size_t>(n_site), Complex(0.0));
    switch (spec.kind) {
        case PacketKind::fundamental:
            if (spec.coeffs.empty()) {
                c[static_cast<std::size_t>(i0)] = 1.0;
            } else {
                if (static_cast<Index>(spec.coeffs.size()) != n_site)
                    throw ConfigError("dynamics.initial.coeffs",
                                      fmt::format("{} coefficients for {} sites", spec.coeffs.size(), n_site));
                c = spec.coeffs;
            }
            break;
        case PacketKind::gaussian:
        case PacketKind::sech:
            if (!(spec.width > 0.0)) throw ConfigError("dynamics.initial.width", "must be > 0");
            for (Index j = 0; j < n_site; ++j) {
                const double x = static_cast<double>(j - i0);
                const double env = spec.kind == PacketKind::gaussian
                                       ? std::exp(-x * x / (4.0 * spec.width * spec.width))
                                       : 1.0 / std::cosh(x / spec.width);
                c[static_cast<std::size_t>(j)] = env * std::polar(1.0, spec.momentum * x);
            }
            break;
        case PacketKind::coherent:
            throw ConfigError("dynamics.initial.kind", "coherent states are not single-excitation packets");
    }
    double n2 = 0.0;
    for (const auto& v : c) n2 += std::norm(v);
    if (!(n2 > 0.0)) throw DimensionError("packet coefficients are all zero");
    for (auto& v : c) v /= std::sqrt(n2);
    return c;
}

TTState initial_fundamental(const std::vector<Index>& dims, const std::vector<Complex>& coeffs,
                            Index excited_index) {
    const std::size_t n = dims.size();
    if (n == 0) throw DimensionError("initial_fundamental: empty chain");
    if (coeffs.size() != n)
        throw DimensionError(fmt::format("initial_fundamental: {} coefficients for {} sites", coeffs.size(), n));
    double n2 = 0.0;
    for (const auto& v : coeffs) n2 += std::norm(v);
    if (!(n2 > 0.0)) throw DimensionError("initial_fundamental: coefficient vector is zero");
    for (Index d : dims)
        if (excited_index < 1 || excited_index >= d)
            throw DimensionError(fmt::format("excited index {} outside local dimension {}", excited_index, d));
    std::vector<StateCore> cores;
    if (n == 1) {
        StateCore c(1, {dims[0]}, 1);
        c(0, excited_index, 0) = coeffs[0];
        cores.push_back(std::move(c));
        return TTState(std::move(cores));
    }
    // rank-2 automaton: channel 0 = no excitation yet, channel 1 = excitation placed
    for (std::size_t k = 0; k < n; ++k) {
        const Index left = k == 0 ? 1 : 2;
        const Index right = k + 1 == n ? 1 : 2;
        StateCore c(left, {dims[k]}, right);
        if (k == 0) {
            c(0, 0, 0) = 1.0;
            c(0, excited_index, 1) = coeffs[k];
        } else if (k + 1 == n) {
            c(0, excited_index, 0) = coeffs[k];
            c(1, 0, 0) = 1.0;
        } else {
            c(0, 0, 0) = 1.0;
            c(0, excited_index, 1) = coeffs[k];
            c(1, 0, 1) = 1.0;
        }
        cores.push_back(std::move(c));
    }
    return TTState(std::move(cores));
}

std::vector<Complex> coherent_zeta(const PhononModel& model, const std::vector<double>& displacement) {
    const auto n = static_cast<std::size_t>(model.chain().n_site);
    if (displacement.size() != n)
        throw ConfigError("dynamics.initial.displacement",
                          fmt::format("{} displacements for {} sites", displacement.size(), n));
    std::vector<Complex> z;
    for (std::size_t i = 0; i < n; ++i)
        z.emplace_back(displacement[i] * std::sqrt(model.mass()[i] * model.nu_eff()[i] / 2.0), 0.0);
    return z;
}

CoherentState initial_coherent(const std::vector<Complex>& zeta, Index n_dim) {
    if (n_dim < 2) throw DimensionError("coherent states need a local dimension >= 2");
    CoherentState out;
    out.zeta = zeta;
    std::vector<Vector> sites;
    for (const auto& z : zeta) {
        Vector v(n_dim);
        Complex term = std::exp(-0.5 * std::norm(z));
        for (Index k = 0; k < n_dim; ++k) {
            if (k > 0) term *= z / std::sqrt(static_cast<double>(k));
            v(k) = term;
        }
        const double w = v.squaredNorm();
        out.weight.push_back(w);
        out.truncation_warning = out.truncation_warning || w < 0.99;
        sites.push_back(v / std::sqrt(w));
    }
    out.state = product_state(sites);
    return out;
}

CoherentState initial_coherent(const PhononModel& model, const std::vector<double>& displacement, Index n_dim) {
    return initial_coherent(coherent_zeta(model, displacement), n_dim);
}

// -- symmetric Euler ----------------------------------------------------------

TTState step_symmetric(const TTOperator& h, const TTState& prev, const TTState& curr, double dt, int order,
                       const TruncationPolicy& policy) {
    if (order != 2 && order != 4 && order != 6)
        throw ConfigError("dynamics.solver", fmt::format("symmetric Euler order {} (expected 2, 4 or 6)", order));
    if (prev.empty() || curr.empty()) throw DimensionError("symmetric Euler step needs two previous states");
    auto hx = [&](const TTState& x) { return truncate(scale(apply(h, x), dt), policy); };
    const TTState x1 = hx(curr);
    TTState phi = x1;
    if (order >= 4) {
        const TTState x3 = hx(hx(x1));
        phi = truncate(add(phi, scale(x3, -1.0 / 6.0)), policy);
        if (order == 6) {
            const TTState x5 = hx(hx(x3));
            phi = truncate(add(phi, scale(x5, 1.0 / 120.0)), policy);
        }
    }
    return truncate(add(prev, scale(phi, Complex(0.0, -2.0))), policy);
}

// -- splitting ------------------------------------------------------------------

std::array<double, 3> yoshida_weights() {
    const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
    return {w1, 1.0 - 2.0 * w1, w1};
}

const std::array<double, 15>& kahan_li_weights() {
    static const std::array<double, 15> w = [] {
        const std::array<double, 8> half{
            0.74167036435061295344822780, -0.40910082580003159399730010, 0.19075471029623837995387626,
            -0.57386247111608226665638773, 0.29906418130365592384446354, 0.33462491824529818378495798,
            0.31529309239676659663205666, -0.79688793935291635401978884};
        std::array<double, 15> out{};
        for (std::size_t k = 0; k < 8; ++k) out[k] = out[14 - k] = half[k];
        return out;
    }();
    return w;
}

namespace {

/// Thin QR of core k (left unfolding); R moves into core k+1.
void shift_center_right(std::vector<StateCore>& cores, std::size_t k) {
    auto& c = cores[k];
    const RowMatrix u = c.left_unfolding();
    const Index r = std::min(u.rows(), u.cols());
    Eigen::HouseholderQR<RowMatrix> qr(u);
    const RowMatrix q = qr.householderQ() * RowMatrix::Identity(u.rows(), r);
    const RowMatrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    StateCore nc(c.left, c.phys, r);
    nc.left_unfolding() = q;
    auto& next = cores[k + 1];
    StateCore nn(r, next.phys, next.right);
    nn.right_unfolding() = rr * next.right_unfolding();
    c = std::move(nc);
    next = std::move(nn);
}

/// Gate on sites (k, k+1) with SVD truncation; the center moves to k+1.
void apply_local_gate(std::vector<StateCore>& cores, std::size_t k, const Matrix& u, const TruncationPolicy& policy) {
    const auto& a = cores[k];
    const auto& b = cores[k + 1];
    const Index rl = a.left, rr = b.right, da = a.phys[0], db = b.phys[0];
    // theta((a s), (t b)) = A_s B_t
    const RowMatrix theta = a.left_unfolding() * b.right_unfolding();  // (rl*da) x (db*rr)
    // gather the physical pair into rows: T((s t), (l b))
    Matrix t(da * db, rl * rr);
    for (Index l = 0; l < rl; ++l)
        for (Index s = 0; s < da; ++s)
            for (Index q = 0; q < db; ++q)
                for (Index c = 0; c < rr; ++c) t(s * db + q, l * rr + c) = theta(l * da + s, q * rr + c);
    const Matrix ut = u * t;
    Matrix out(rl * da, db * rr);
    for (Index l = 0; l < rl; ++l)
        for (Index s = 0; s < da; ++s)
            for (Index q = 0; q < db; ++q)
                for (Index c = 0; c < rr; ++c) out(l * da + s, q * rr + c) = ut(s * db + q, l * rr + c);
    const ThinSvd svd = thin_svd(out);
    const RealVector& sv = svd.s;
    std::vector<double> s(sv.data(), sv.data() + sv.size());
    const Index r = kept_rank(s, policy);
    StateCore na(rl, {da}, r);
    na.left_unfolding() = svd.u.leftCols(r);
    StateCore nb(r, {db}, rr);
    nb.right_unfolding() = sv.head(r).cast<Complex>().asDiagonal() * svd.v.leftCols(r).adjoint();
    cores[k] = std::move(na);
    cores[k + 1] = std::move(nb);
}

/// Gate on (site N-1, site 0) as an operator passing identities through the chain.
TTOperator wrap_gate_operator(const std::vector<Index>& dims, const Matrix& u) {
    const std::size_t n = dims.size();
    const Index dl = dims[n - 1], d0 = dims[0];
    // u acts on (last slow, first fast); rearrange to R((s s'), (t t'))
    Matrix r(dl * dl, d0 * d0);
    for (Index s = 0; s < dl; ++s)
        for (Index t = 0; t < d0; ++t)
            for (Index sp = 0; sp < dl; ++sp)
                for (Index tp = 0; tp < d0; ++tp) r(s * dl + sp, t * d0 + tp) = u(s * d0 + t, sp * d0 + tp);
    Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector sv = svd.singularValues();
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > 1e-15 * sv(0)) ++rank;
    rank = std::max<Index>(rank, 1);
    std::vector<OperatorCore> cores;
    OperatorCore first(1, {d0, d0}, rank);
    for (Index q = 0; q < rank; ++q)
        for (Index t = 0; t < d0; ++t)
            for (Index tp = 0; tp < d0; ++tp) first(0, t, tp, q) = std::conj(svd.matrixV()(t * d0 + tp, q));
    cores.push_back(std::move(first));
    for (std::size_t k = 1; k + 1 < n; ++k) {
        OperatorCore c(rank, {dims[k], dims[k]}, rank);
        for (Index q = 0; q < rank; ++q)
            for (Index s = 0; s < dims[k]; ++s) c(q, s, s, q) = 1.0;
        cores.push_back(std::move(c));
    }
    OperatorCore last(rank, {dl, dl}, 1);
    for (Index q = 0; q < rank; ++q)
        for (Index s = 0; s < dl; ++s)
            for (Index sp = 0; sp < dl; ++sp) last(q, s, sp, 0) = sv(q) * svd.matrixU()(s * dl + sp, q);
    cores.push_back(std::move(last));
    return TTOperator(std::move(cores));
}

struct Stage {
    std::size_t group;
    double tau;
};

void push_stage(std::vector<Stage>& seq, std::size_t group, double tau) {
    if (!seq.empty() && seq.back().group == group)
        seq.back().tau += tau;
    else
        seq.push_back({group, tau});
}

void symmetric_stages(std::vector<Stage>& seq, std::size_t groups, double tau) {
    for (std::size_t g = 0; g + 1 < groups; ++g) push_stage(seq, g, tau / 2.0);
    push_stage(seq, groups - 1, tau);
    for (std::size_t g = groups - 1; g-- > 0;) push_stage(seq, g, tau / 2.0);
}

}  // namespace

SplittingPropagator::SplittingPropagator(const ChainHamiltonian& h, TdseSolver scheme, TruncationPolicy policy)
    : chain_(h.chain), dims_(h.dims()), scheme_(scheme), policy_(policy) {
    if (!is_splitting(scheme)) throw ConfigError("dynamics.solver", "not a splitting scheme");
    policy_.validate();
    validate_parts(chain_, h.parts);
    const Index n = chain_.n_site;
    const Index nb = chain_.n_bonds();
    std::vector<int> share(static_cast<std::size_t>(n), 0);
    for (Index b = 0; b < nb; ++b) {
        ++share[static_cast<std::size_t>(b)];
        ++share[static_cast<std::size_t>((b + 1) % n)];
    }
    for (Index b = 0; b < nb; ++b) {
        const auto i = static_cast<std::size_t>(b);
        const auto j = static_cast<std::size_t>((b + 1) % n);
        const Matrix& si = h.parts.sites[i].single;
        const Matrix& sj = h.parts.sites[j].single;
        const Index di = si.rows(), dj = sj.rows();
        Matrix hb = bond_coupling(chain_, h.parts, b);
        hb += Eigen::kroneckerProduct(si / share[i], Matrix::Identity(dj, dj)).eval();
        hb += Eigen::kroneckerProduct(Matrix::Identity(di, di), sj / share[j]).eval();
        bond_h_.push_back(0.5 * (hb + hb.adjoint()));
    }
    const bool odd_ring = chain_.periodic && n % 2 == 1;
    groups_.assign(odd_ring ? 3 : 2, {});
    for (Index b = 0; b < nb; ++b) {
        if (odd_ring && b == nb - 1)
            groups_[2].push_back(b);
        else
            groups_[static_cast<std::size_t>(b % 2)].push_back(b);
    }
    if (groups_[1].empty()) groups_.pop_back();  // two-site open chain
}

const std::vector<SplittingPropagator::Gate>& SplittingPropagator::gates(std::size_t group, double tau) {
    const auto key = std::make_pair(group, tau);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<Gate> out;
    for (Index b : groups_[group]) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(bond_h_[static_cast<std::size_t>(b)]);
        const Vector ph = (Complex(0.0, -tau) * es.eigenvalues().cast<Complex>()).array().exp();
        out.push_back({b, es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint()});
    }
    return cache_.emplace(key, std::move(out)).first->second;
}

TTState SplittingPropagator::apply_group(const TTState& psi, std::size_t group, double tau) {
    const auto& gs = gates(group, tau);
    const Index n = chain_.n_site;
    std::vector<StateCore> cores = orthonormalize(psi, Direction::right).cores();
    std::size_t center = 0;
    const Matrix* wrap = nullptr;
    for (const auto& g : gs) {
        if (chain_.periodic && g.bond == n - 1) {
            wrap = &g.u;
            continue;
        }
        const auto k = static_cast<std::size_t>(g.bond);
        while (center < k) shift_center_right(cores, center++);
        apply_local_gate(cores, k, g.u, policy_);
        center = k + 1;
    }
    TTState out(std::move(cores));
    if (wrap) out = truncate(apply(wrap_gate_operator(dims_, *wrap), out), policy_);
    return out;
}

TTState SplittingPropagator::step(const TTState& psi, double dt) {
    if (psi.dims() != dims_) throw DimensionError("splitting step: state dims differ from the Hamiltonian");
    const std::size_t ng = groups_.size();
    std::vector<Stage> seq;
    switch (scheme_) {
        case TdseSolver::lt:
            for (std::size_t g = ng; g-- > 0;) push_stage(seq, g, dt);
            break;
        case TdseSolver::sm:
            symmetric_stages(seq, ng, dt);
            break;
        case TdseSolver::yn:
            for (double w : yoshida_weights()) symmetric_stages(seq, ng, w * dt);
            break;
        case TdseSolver::kl:
            for (double w : kahan_li_weights()) symmetric_stages(seq, ng, w * dt);
            break;
        default:
            throw ConfigError("dynamics.solver", "not a splitting scheme");
    }
    TTState x = psi;
    for (const auto& s : seq) x = apply_group(x, s.group, s.tau);
    return x;
}

// -- drivers --------------------------------------------------------------------

Vector evolve_dense(const Matrix& h, const Vector& psi, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    const Vector ph = (Complex(0.0, -t) * es.eigenvalues().cast<Complex>()).array().exp();
    return es.eigenvectors() * ph.asDiagonal() * (es.eigenvectors().adjoint() * psi);
}

namespace {

Index index_at(double t, double step) { return static_cast<Index>(std::llround(t / step)); }

void check_finite(const TTState& x, double& nrm, Index main, Index sub) {
    nrm = norm(x);
    if (!std::isfinite(nrm))
        throw NumericalError(fmt::format("non-finite state at main step {}, sub step {}", main, sub));
}

}  // namespace

TdseResult propagate(const ChainHamiltonian& h, const TTState& psi0, const TdseConfig& cfg,
                     const QuantumObserver& observer, double t0, const TTState* acf_reference, bool record_initial) {
    cfg.validate();
    if (cfg.solver == TdseSolver::qe)
        return propagate_dense(h.op, psi0, cfg, observer, t0, acf_reference, record_initial);
    if (psi0.dims() != h.dims()) throw DimensionError("initial state dims differ from the Hamiltonian");
    const TTState& ref = acf_reference ? *acf_reference : psi0;
    const double dt = cfg.sub_step();
    const Index idx0 = index_at(t0, cfg.step_size);
    TdseResult res;
    if (record_initial) res.records.push_back(observer.observe(psi0, &ref, "tdse", idx0, t0));

    TTState curr = psi0;
    double nrm = 0.0;
    if (is_symmetric_euler(cfg.solver)) {
        const int order = cfg.solver == TdseSolver::s2 ? 2 : cfg.solver == TdseSolver::s4 ? 4 : 6;
        double e_ref = 0.0;
        if (cfg.center_energy) e_ref = expectation(psi0, h.op, psi0).real() / inner(psi0, psi0).real();
        res.energy_reference = e_ref;
        const auto dims = h.dims();
        const TTOperator hs = cfg.center_energy ? add(h.op, scale(identity_operator(dims), -e_ref)) : h.op;
        // one step backwards in time: exp(+i (H - E_ref) dt) psi0
        TTState prev;
        if (dense_size(dims) <= cfg.dense_cap) {
            const Vector back = evolve_dense(to_dense(hs, cfg.dense_cap), to_dense(psi0).data, -dt);
            prev = truncate(from_dense(dims, back, TruncationPolicy{}, cfg.dense_cap), cfg.truncation);
        } else {
            SplittingPropagator yn(h, TdseSolver::yn, cfg.truncation);
            prev = scale(yn.step(psi0, -dt), std::polar(1.0, -e_ref * dt));
        }
        for (Index m = 1; m <= cfg.num_steps; ++m) {
            for (Index s = 1; s <= cfg.sub_steps; ++s) {
                TTState next = step_symmetric(hs, prev, curr, dt, order, cfg.truncation);
                check_finite(next, nrm, m, s);
                if (cfg.normalize) next = scale(next, 1.0 / nrm);
                prev = std::move(curr);
                curr = std::move(next);
            }
            const double elapsed = static_cast<double>(m) * cfg.step_size;
            const TTState phys = scale(curr, std::polar(1.0, -e_ref * elapsed));
            res.records.push_back(observer.observe(phys, &ref, "tdse", idx0 + m, t0 + elapsed));
        }
        res.final_state = scale(curr, std::polar(1.0, -e_ref * static_cast<double>(cfg.num_steps) * cfg.step_size));
    } else {
        SplittingPropagator prop(h, cfg.solver, cfg.truncation);
        for (Index m = 1; m <= cfg.num_steps; ++m) {
            for (Index s = 1; s <= cfg.sub_steps; ++s) {
                curr = prop.step(curr, dt);
                check_finite(curr, nrm, m, s);
                if (cfg.normalize) curr = scale(curr, 1.0 / nrm);
            }
            const double elapsed = static_cast<double>(m) * cfg.step_size;
            res.records.push_back(observer.observe(curr, &ref, "tdse", idx0 + m, t0 + elapsed));
        }
        res.final_state = curr;
    }
    res.final_time = t0 + static_cast<double>(cfg.num_steps) * cfg.step_size;
    return res;
}

TdseResult propagate_dense(const TTOperator& h, const TTState& psi0, const TdseConfig& cfg,
                           const QuantumObserver& observer, double t0, const TTState* acf_reference,
                           bool record_initial) {
    cfg.validate();
    const auto dims = h.dims();
    if (psi0.dims() != dims) throw DimensionError("initial state dims differ from the Hamiltonian");
    check_dense_cap(dims, cfg.dense_cap);
    const Matrix a = to_dense(h, cfg.dense_cap);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    const Vector v0 = to_dense(psi0, cfg.dense_cap).data;
    const Vector ref = acf_reference ? to_dense(*acf_reference, cfg.dense_cap).data : v0;
    const Vector c0 = es.eigenvectors().adjoint() * v0;
    const Index idx0 = index_at(t0, cfg.step_size);
    TdseResult res;
    if (record_initial) res.records.push_back(observer.observe_dense(v0, dims, &ref, "tdse", idx0, t0));
    Vector v = v0;
    for (Index m = 1; m <= cfg.num_steps; ++m) {
        const double elapsed = static_cast<double>(m) * cfg.step_size;
        const Vector ph = (Complex(0.0, -elapsed) * es.eigenvalues().cast<Complex>()).array().exp();
        v = es.eigenvectors() * ph.cwiseProduct(c0);
        res.records.push_back(observer.observe_dense(v, dims, &ref, "tdse", idx0 + m, t0 + elapsed));
    }
    res.final_state = from_dense(dims, v, TruncationPolicy{}, cfg.dense_cap);
    res.final_time = t0 + static_cast<double>(cfg.num_steps) * cfg.step_size;
    return res;
}

// -- analytic reference -----------------------------------------------------

double bessel_population(Index i, Index i0, double beta, double t) {
    const double j = std::cyl_bessel_j(static_cast<double>(std::abs(i - i0)), std::abs(2.0 * beta * t));
    return j * j;
}

std::vector<double> bessel_reference(const ExcitonModel& model, Index i0, double t) {
    const auto& a = model.alpha();
    const auto& b = model.beta();
    const bool uniform = std::all_of(a.begin(), a.end(), [&](double x) { return x == a.front(); }) &&
                         std::all_of(b.begin(), b.end(), [&](double x) { return x == b.front(); });
    if (!uniform || b.empty()) throw ModelError("the Bessel reference needs a homogeneous exciton chain");
    std::vector<double> p;
    for (Index i = 0; i < model.chain().n_site; ++i) p.push_back(bessel_population(i, i0, b.front(), t));
    return p;
}

}  // namespace chaintt
