#include "chaintt/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <fmt/format.h>
#include <json.hpp>

namespace chaintt {

namespace fs = std::filesystem;

void apply_overrides(RunConfig& cfg, const RunOverrides& o) {
    if (o.output_dir) cfg.io.output_dir = *o.output_dir;
    if (o.seed) cfg.dynamics.tise.seed = *o.seed;
    if (o.dense_cap) {
        if (*o.dense_cap < 1) throw ConfigError("dense_cap", "must be >= 1");
        cfg.dynamics.tise.dense_cap = *o.dense_cap;
        cfg.dynamics.tdse.dense_cap = *o.dense_cap;
    }
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
        dynamic_cast<const ModelError*>(&e) || dynamic_cast<const CapExceeded*>(&e))
        return 2;
    if (dynamic_cast<const NumericalError*>(&e)) return 3;
    if (dynamic_cast<const IoError*>(&e)) return 4;
    return 1;
}

namespace {

struct Restart {
    std::optional<RunArchive> archive;

    bool tdse_continuation() const {
        return archive && !archive->records.empty() && archive->records.back().kind == "tdse";
    }
};

Restart load_restart(const RunConfig& cfg) {
    Restart r;
    if (cfg.io.load_file) r.archive = load_run(*cfg.io.load_file);
    return r;
}

std::string header(const RunConfig& cfg) {
    const auto& m = cfg.model;
    std::string solver;
    switch (cfg.dynamics.kind) {
        case DynamicsKind::tise: solver = cfg.dynamics.tise.solver == TiseSolver::als ? "als" : "qe"; break;
        case DynamicsKind::tdse: solver = to_string(cfg.dynamics.tdse.solver); break;
        case DynamicsKind::qcmd: solver = to_string(cfg.dynamics.qcmd.solver); break;
        case DynamicsKind::ceom: solver = to_string(cfg.dynamics.ceom.solver); break;
    }
    return fmt::format("# {}: {} model, N={} ({}), {} with solver {}\n", cfg.io.name, to_string(m.kind), m.chain.n_site,
                       m.chain.periodic ? "periodic" : "linear", to_string(cfg.dynamics.kind), solver);
}

std::string regression_table(const std::vector<ObservableRecord>& records) {
    std::vector<double> t, nrm, e;
    double worst = 0.0;
    for (const auto& r : records) {
        t.push_back(r.time);
        nrm.push_back(r.norm);
        e.push_back(r.energy);
        worst = std::max(worst, std::abs(r.norm - 1.0));
    }
    std::string out = fmt::format("{:<10} {:>14} {:>22} {:>10}\n", "quantity", "slope", "intercept", "r2");
    if (t.size() >= 2) {
        const Regression rn = regress_conserved(t, nrm), re = regress_conserved(t, e);
        out += fmt::format("{:<10} {:>14.6e} {:>22.15e} {:>10.6f}\n", "norm", rn.slope, rn.intercept, rn.r2);
        out += fmt::format("{:<10} {:>14.6e} {:>22.15e} {:>10.6f}\n", "energy", re.slope, re.intercept, re.r2);
    }
    out += fmt::format("max |norm - 1| = {:.3e}\n", worst);
    if (!records.empty()) {
        const auto& last = records.back();
        out += fmt::format("final time {} a.u., energy {:.15e}", last.time, last.energy);
        for (const auto& [k, v] : last.energy_parts) out += fmt::format(", {} {:.6e}", k, v);
        out += "\n";
    }
    return out;
}

std::string bessel_table(const ExcitonModel& model, const ObservableRecord& rec, Index i0) {
    const std::vector<double> ref = bessel_reference(model, i0, rec.time);
    std::string out = fmt::format("populations vs infinite-chain Bessel reference at t = {} a.u.\n", rec.time);
    out += fmt::format("{:>5} {:>14} {:>14} {:>12}\n", "site", "tdse", "bessel", "deviation");
    const auto& num = rec.sites.at("quantum_number");
    for (std::size_t i = 0; i < num.size(); ++i)
        out += fmt::format("{:>5} {:>14.8f} {:>14.8f} {:>12.3e}\n", i, num[i].mean, ref[i], num[i].mean - ref[i]);
    return out;
}

TTState tdse_initial(const RunConfig& cfg, const std::vector<Index>& dims, std::string& note) {
    const auto& m = cfg.model;
    const auto& init = cfg.dynamics.initial;
    const Index n = m.chain.n_site;
    if (init.packet.kind == PacketKind::coherent) {
        CoherentState cs = initial_coherent(m.phonon(), init.displacement, m.n_dim);
        if (cs.truncation_warning) {
            const double w = *std::min_element(cs.weight.begin(), cs.weight.end());
            note += fmt::format("warning: coherent state keeps only {:.6f} of its weight in the truncated basis\n", w);
        }
        return cs.state;
    }
    const Index excited = m.kind == ModelKind::coupled ? m.dim_ph : 1;
    return initial_fundamental(dims, packet_coefficients(init.packet, n), excited);
}

void check_restart_dims(const TTState& psi, const std::vector<Index>& dims) {
    if (psi.dims() != dims)
        throw ConfigError("io.load_file", "stored state does not match the model's site dimensions");
}

RunArchive run_tise(const RunConfig& cfg, std::string& summary) {
    const ChainHamiltonian h = cfg.model.hamiltonian();
    const TiseResult res = solve_tise(h.op, cfg.dynamics.tise);
    const QuantumObserver obs(h.op, cfg.model.observables(), cfg.io.keep_states);
    RunArchive a;
    std::optional<std::vector<double>> exact;
    if (!cfg.dynamics.tise.e_est && cfg.model.kind != ModelKind::coupled) {
        try {
            const Index nl = cfg.dynamics.tise.n_levels;
            exact = cfg.model.kind == ModelKind::exciton ? cfg.model.exciton().exact_levels(nl)
                                                         : cfg.model.phonon().exact_levels(nl);
        } catch (const Error&) {
        }
    }
    summary += fmt::format("{:>5} {:>22} {:>12} {:>7} {:>9}{}\n", "level", "energy", "residual", "sweeps", "converged",
                           exact ? fmt::format(" {:>22}", "reference") : "");
    for (std::size_t n = 0; n < res.levels.size(); ++n) {
        const TiseLevel& l = res.levels[n];
        ObservableRecord r = obs.observe(l.state, nullptr, "tise", static_cast<Index>(n), 0.0);
        r.energy = l.energy;
        a.records.push_back(std::move(r));
        std::string ref;
        if (exact && n < exact->size()) ref = fmt::format(" {:>22.15e}", (*exact)[n]);
        summary += fmt::format("{:>5} {:>22.15e} {:>12.3e} {:>7} {:>9}{}\n", n, l.energy, l.residual, l.sweeps,
                               l.converged ? "yes" : "no", ref);
    }
    if (!res.levels.empty()) a.checkpoint = res.levels.front().state;
    return a;
}

RunArchive run_tdse(const RunConfig& cfg, const Restart& restart, std::string& summary) {
    const ChainHamiltonian h = cfg.model.hamiltonian();
    const auto dims = h.dims();
    TTState psi0;
    double t0 = 0.0;
    bool record_initial = true;
    if (restart.archive) {
        if (!restart.archive->checkpoint) throw ConfigError("io.load_file", "archive carries no state checkpoint");
        psi0 = *restart.archive->checkpoint;
        check_restart_dims(psi0, dims);
        if (restart.tdse_continuation()) {
            t0 = restart.archive->records.back().time;
            record_initial = false;
        }
    } else {
        psi0 = tdse_initial(cfg, dims, summary);
    }
    const QuantumObserver obs(h.op, cfg.model.observables(), cfg.io.keep_states);
    TdseResult res = propagate(h, psi0, cfg.dynamics.tdse, obs, t0, nullptr, record_initial);
    summary += regression_table(res.records);
    if (cfg.dynamics.bessel_reference && !res.records.empty()) {
        const auto& p = cfg.dynamics.initial.packet;
        const Index i0 = p.center < 0 ? cfg.model.chain.n_site / 2 : p.center;
        summary += bessel_table(cfg.model.exciton(), res.records.back(), i0);
    }
    RunArchive a;
    a.records = std::move(res.records);
    a.checkpoint = std::move(res.final_state);
    return a;
}

RunArchive run_qcmd(const RunConfig& cfg, const Restart& restart, std::string& summary) {
    const CoupledModel model = cfg.model.coupled();
    const Index n = cfg.model.chain.n_site;
    QcmdState x0;
    double t0 = 0.0;
    bool record_initial = true;
    if (restart.archive) {
        if (!restart.archive->classical) throw ConfigError("io.load_file", "archive carries no classical checkpoint");
        const ClassicalCheckpoint& c = *restart.archive->classical;
        if (c.amplitudes.size() != n || c.q.size() != n)
            throw ConfigError("io.load_file", "stored trajectory does not match the chain");
        x0 = {c.amplitudes, c.q, c.p};
        t0 = c.time;
        record_initial = false;
    } else {
        x0 = qcmd_initial(model, packet_coefficients(cfg.dynamics.initial.packet, n));
    }
    QcmdResult res = qcmd_propagate(model, x0, cfg.dynamics.qcmd, t0, nullptr, record_initial);
    summary += regression_table(res.records);
    RunArchive a;
    a.records = std::move(res.records);
    a.classical = ClassicalCheckpoint{res.final_time, res.final_state.a, res.final_state.q, res.final_state.p};
    return a;
}

RunArchive run_ceom(const RunConfig& cfg, const Restart& restart, std::string& summary) {
    const PhononModel model = cfg.model.phonon();
    const Index n = cfg.model.chain.n_site;
    PhaseSpacePoint x0;
    double t0 = 0.0;
    bool record_initial = true;
    if (restart.archive) {
        if (!restart.archive->classical) throw ConfigError("io.load_file", "archive carries no classical checkpoint");
        const ClassicalCheckpoint& c = *restart.archive->classical;
        if (c.q.size() != n) throw ConfigError("io.load_file", "stored trajectory does not match the chain");
        x0 = {c.q, c.p};
        t0 = c.time;
        record_initial = false;
    } else {
        x0 = ceom_coherent_init(model, cfg.dynamics.initial.displacement);
    }
    CeomResult res = ceom_propagate(model, x0, cfg.dynamics.ceom, t0, record_initial);
    summary += regression_table(res.records);
    RunArchive a;
    a.records = std::move(res.records);
    a.classical = ClassicalCheckpoint{res.final_time, Vector(), res.final_state.q, res.final_state.p};
    return a;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", dir, ec.message()));
}

}  // namespace

RunOutput execute_run(const RunConfig& cfg, bool write_files) {
    const Restart restart = load_restart(cfg);
    RunOutput out;
    out.summary = header(cfg);
    switch (cfg.dynamics.kind) {
        case DynamicsKind::tise: out.archive = run_tise(cfg, out.summary); break;
        case DynamicsKind::tdse: out.archive = run_tdse(cfg, restart, out.summary); break;
        case DynamicsKind::qcmd: out.archive = run_qcmd(cfg, restart, out.summary); break;
        case DynamicsKind::ceom: out.archive = run_ceom(cfg, restart, out.summary); break;
    }
    out.archive.config_text = cfg.text;
    out.archive.model_text = nlohmann::json::parse(cfg.text).at("model").dump();
    if (write_files) {
        ensure_dir(cfg.io.output_dir);
        const std::string ext = cfg.io.format == ArchiveFormat::binary ? ".wtra" : ".wtmc";
        out.archive_path = (fs::path(cfg.io.output_dir) / (cfg.io.name + ext)).string();
        out.records_path = (fs::path(cfg.io.output_dir) / (cfg.io.name + ".ndjson")).string();
        save_run(out.archive, out.archive_path, cfg.io.format);
        write_records_ndjson(out.archive.records, out.records_path);
    }
    return out;
}

std::string compare_report(const RunConfig& cfg, const RunArchive& own) {
    if (!cfg.io.compare_file) throw ConfigError("io.compare_file", "required for compare");
    const RunArchive other = load_run(*cfg.io.compare_file);
    const std::vector<double> rmsd = compare_runs(own.records, other.records, cfg.io.compare_mode);
    std::string out = fmt::format("# RMSD ({}) against {}\n", to_string(cfg.io.compare_mode), *cfg.io.compare_file);
    out += fmt::format("{:>6} {:>12} {:>14}\n", "index", "time", "rmsd");
    double worst = 0.0;
    for (std::size_t k = 0; k < rmsd.size(); ++k) {
        out += fmt::format("{:>6} {:>12} {:>14.6e}\n", own.records[k].index, own.records[k].time, rmsd[k]);
        worst = std::max(worst, rmsd[k]);
    }
    out += fmt::format("max rmsd = {:.6e}\n", worst);
    return out;
}

}  // namespace chaintt
