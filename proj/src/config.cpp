#include "chaintt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace chaintt {

using nlohmann::json;

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::exciton: return "exciton";
        case ModelKind::phonon: return "phonon";
        case ModelKind::coupled: return "coupled";
    }
    return "?";
}

std::string to_string(DynamicsKind kind) {
    switch (kind) {
        case DynamicsKind::tise: return "tise";
        case DynamicsKind::tdse: return "tdse";
        case DynamicsKind::qcmd: return "qcmd";
        case DynamicsKind::ceom: return "ceom";
    }
    return "?";
}

ExcitonModel ModelConfig::exciton() const { return {chain, alpha, beta, eta}; }
PhononModel ModelConfig::phonon() const { return {chain, mass, nu, omg}; }
CoupledModel ModelConfig::coupled() const { return {exciton(), phonon(), chi, rho, sig, tau}; }

ChainHamiltonian ModelConfig::hamiltonian() const {
    switch (kind) {
        case ModelKind::exciton: return exciton().hamiltonian(n_dim);
        case ModelKind::phonon: return phonon().hamiltonian(n_dim);
        case ModelKind::coupled: return coupled().hamiltonian(dim_ex, dim_ph);
    }
    throw ModelError("unknown model kind");
}

std::vector<LocalObservable> ModelConfig::observables() const {
    switch (kind) {
        case ModelKind::exciton: return exciton().observables(n_dim);
        case ModelKind::phonon: return phonon().observables(n_dim);
        case ModelKind::coupled: return coupled().observables(dim_ex, dim_ph);
    }
    throw ModelError("unknown model kind");
}

Index ModelConfig::local_dim() const { return kind == ModelKind::coupled ? dim_ex * dim_ph : n_dim; }

namespace {

// A JSON object whose keys are consumed one by one; leftovers are rejected.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    bool has(const std::string& k) const { return j_.contains(k); }

    const json& at(const std::string& k) {
        used_.insert(k);
        return j_.at(k);
    }

    template <class T>
    T get(const std::string& k, T fallback) {
        if (!has(k)) return fallback;
        return convert<T>(at(k), key(k));
    }

    template <class T>
    T require(const std::string& k) {
        if (!has(k)) throw ConfigError(key(k), "required key is missing");
        return convert<T>(at(k), key(k));
    }

    std::optional<Section> child(const std::string& k) {
        if (!has(k)) return std::nullopt;
        return Section(at(k), key(k));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
    }

    template <class T>
    static T convert(const json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(where, "expected true or false");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(where, "expected a string");
            return v.get<std::string>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(where, "expected an integer");
            return v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(where, "expected a number");
            return v.get<T>();
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            // scalar or list of numbers
            if (v.is_number()) return {v.get<double>()};
            if (!v.is_array() || v.empty()) throw ConfigError(where, "expected a number or a non-empty list of numbers");
            std::vector<double> out;
            for (const auto& x : v) {
                if (!x.is_number()) throw ConfigError(where, "list entries must be numbers");
                out.push_back(x.get<double>());
            }
            return out;
        } else {
            static_assert(sizeof(T) == 0, "unsupported config type");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <class F>
auto parsed(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(key, e.what());
    }
}

ModelConfig parse_model(Section s) {
    ModelConfig m;
    const auto kind = s.require<std::string>("kind");
    if (kind == "exciton") m.kind = ModelKind::exciton;
    else if (kind == "phonon") m.kind = ModelKind::phonon;
    else if (kind == "coupled") m.kind = ModelKind::coupled;
    else throw ConfigError(s.key("kind"), fmt::format("unknown model kind '{}'", kind));

    m.chain.n_site = s.require<Index>("n_site");
    m.chain.periodic = s.get("periodic", false);
    m.chain.homogen = s.get("homogen", true);
    if (s.get("qtt", false)) throw ConfigError(s.key("qtt"), "quantized tensor trains are not supported");

    const bool ex = m.kind != ModelKind::phonon, ph = m.kind != ModelKind::exciton, cp = m.kind == ModelKind::coupled;
    auto param = [&](const char* k, std::vector<double>& dst, bool allowed) {
        if (!s.has(k)) return;
        if (!allowed) throw ConfigError(s.key(k), fmt::format("not a parameter of {} models", kind));
        dst = s.get(k, dst);
    };
    param("alpha", m.alpha, ex);
    param("beta", m.beta, ex);
    if (s.has("eta")) {
        if (!ex) throw ConfigError(s.key("eta"), "not a parameter of phonon models");
        m.eta = s.get("eta", 0.0);
    }
    param("mass", m.mass, ph);
    param("nu", m.nu, ph);
    param("omg", m.omg, ph);
    param("chi", m.chi, cp);
    param("rho", m.rho, cp);
    param("sig", m.sig, cp);
    param("tau", m.tau, cp);

    if (cp) {
        if (s.has("n_dim")) throw ConfigError(s.key("n_dim"), "coupled models use dim_ex and dim_ph");
        m.dim_ex = s.get<Index>("dim_ex", 2);
        m.dim_ph = s.get<Index>("dim_ph", 4);
        if (m.dim_ex < 2) throw ConfigError(s.key("dim_ex"), "must be >= 2");
        if (m.dim_ph < 1) throw ConfigError(s.key("dim_ph"), "must be >= 1");
    } else {
        m.n_dim = s.get<Index>("n_dim", 2);
        if (m.n_dim < 2) throw ConfigError(s.key("n_dim"), "must be >= 2");
    }
    s.finish();

    parsed("model", [&] {
        if (cp) (void)m.coupled();
        else if (ex) (void)m.exciton();
        else (void)m.phonon();
        return 0;
    });
    return m;
}

void parse_truncation(Section& s, TruncationPolicy& t) {
    t.max_rank = s.get<Index>("max_rank", t.max_rank);
    t.threshold = s.get("threshold", t.threshold);
    if (t.max_rank < 1) throw ConfigError(s.key("max_rank"), "must be >= 1");
    if (!(t.threshold >= 0.0)) throw ConfigError(s.key("threshold"), "must be >= 0");
}

InitialConfig parse_initial(Section s, const ModelConfig& model, DynamicsKind kind) {
    InitialConfig init;
    PacketSpec& p = init.packet;
    const Index n = model.chain.n_site;
    const std::string kind_name = s.get<std::string>("kind", "fundamental");
    p.kind = parsed(s.key("kind"), [&] { return parse_packet_kind(kind_name); });
    p.center = s.get<Index>("center", -1);
    if (p.center >= n) throw ConfigError(s.key("center"), fmt::format("site {} outside a chain of {}", p.center, n));
    p.width = s.get("width", p.width);
    if (!(p.width > 0.0)) throw ConfigError(s.key("width"), "must be > 0");
    p.momentum = s.get("momentum", p.momentum);
    if (s.has("coeffs")) {
        const json& c = s.at("coeffs");
        if (!c.is_array() || static_cast<Index>(c.size()) != n)
            throw ConfigError(s.key("coeffs"), fmt::format("expected {} entries", n));
        for (const auto& x : c) {
            if (x.is_number()) p.coeffs.emplace_back(x.get<double>(), 0.0);
            else if (x.is_array() && x.size() == 2 && x[0].is_number() && x[1].is_number())
                p.coeffs.emplace_back(x[0].get<double>(), x[1].get<double>());
            else throw ConfigError(s.key("coeffs"), "entries are numbers or [re, im] pairs");
        }
    }
    if (s.has("displacement")) {
        const auto d = s.get("displacement", std::vector<double>{});
        if (d.size() == 1 && n > 1) {
            init.displacement.assign(static_cast<std::size_t>(n), 0.0);
            init.displacement[static_cast<std::size_t>(p.center < 0 ? n / 2 : p.center)] = d[0];
        } else if (static_cast<Index>(d.size()) == n) {
            init.displacement = d;
        } else {
            throw ConfigError(s.key("displacement"), fmt::format("expected a number or {} entries", n));
        }
    }
    s.finish();

    const bool needs_displacement = p.kind == PacketKind::coherent || kind == DynamicsKind::ceom;
    if (needs_displacement && init.displacement.empty())
        throw ConfigError(s.key("displacement"), "required for coherent and classical initial conditions");
    if (p.kind == PacketKind::coherent && model.kind != ModelKind::phonon)
        throw ConfigError(s.key("kind"), "coherent states need a phonon model");
    if (p.kind != PacketKind::fundamental && !p.coeffs.empty())
        throw ConfigError(s.key("coeffs"), "explicit coefficients need kind 'fundamental'");
    return init;
}

DynamicsConfig parse_dynamics(Section s, const ModelConfig& model) {
    DynamicsConfig d;
    const auto kind = s.require<std::string>("kind");
    if (kind == "tise") d.kind = DynamicsKind::tise;
    else if (kind == "tdse") d.kind = DynamicsKind::tdse;
    else if (kind == "qcmd") d.kind = DynamicsKind::qcmd;
    else if (kind == "ceom") d.kind = DynamicsKind::ceom;
    else throw ConfigError(s.key("kind"), fmt::format("unknown dynamics kind '{}'", kind));

    if (d.kind == DynamicsKind::qcmd && model.kind != ModelKind::coupled)
        throw ConfigError(s.key("kind"), "qcmd needs a coupled model");
    if (d.kind == DynamicsKind::ceom && model.kind != ModelKind::phonon)
        throw ConfigError(s.key("kind"), "ceom needs a phonon model");

    const std::uint64_t seed = s.get<std::uint64_t>("seed", 0);
    const Index cap = s.get<Index>("dense_cap", kDefaultDenseCap);
    if (cap < 1) throw ConfigError(s.key("dense_cap"), "must be >= 1");
    const bool stepping = d.kind != DynamicsKind::tise;
    auto grid = [&](Index& steps, double& size, Index& sub) {
        steps = s.get<Index>("num_steps", steps);
        size = s.get("step_size", size);
        sub = s.get<Index>("sub_steps", sub);
    };

    switch (d.kind) {
        case DynamicsKind::tise: {
            TiseConfig& t = d.tise;
            if (s.has("solver")) t.solver = parse_tise_solver(s.get<std::string>("solver", ""));
            if (s.has("eigen"))
                t.eigen = parsed(s.key("eigen"), [&] { return parse_eigen_selector(s.get<std::string>("eigen", "")); });
            t.n_levels = s.get<Index>("n_levels", t.n_levels);
            t.ranks = s.get<Index>("ranks", t.ranks);
            t.repeats = s.get<Index>("repeats", t.repeats);
            t.conv_eps = s.get("conv_eps", t.conv_eps);
            if (s.has("e_est")) t.e_est = s.get("e_est", 0.0);
            t.seed = seed;
            t.dense_cap = cap;
            t.validate();
            break;
        }
        case DynamicsKind::tdse: {
            TdseConfig& t = d.tdse;
            if (s.has("solver")) t.solver = parse_tdse_solver(s.get<std::string>("solver", ""));
            grid(t.num_steps, t.step_size, t.sub_steps);
            t.normalize = s.get("normalize", t.normalize);
            t.center_energy = s.get("center_energy", t.center_energy);
            parse_truncation(s, t.truncation);
            t.dense_cap = cap;
            t.validate();
            break;
        }
        case DynamicsKind::qcmd: {
            QcmdConfig& t = d.qcmd;
            if (s.has("solver")) t.solver = parse_qcmd_solver(s.get<std::string>("solver", ""));
            grid(t.num_steps, t.step_size, t.sub_steps);
            t.normalize = s.get("normalize", t.normalize);
            t.validate();
            break;
        }
        case DynamicsKind::ceom: {
            CeomConfig& t = d.ceom;
            if (s.has("solver")) t.solver = parse_ceom_solver(s.get<std::string>("solver", ""));
            grid(t.num_steps, t.step_size, t.sub_steps);
            t.validate();
            break;
        }
    }

    d.bessel_reference = s.get("bessel_reference", false);
    if (d.bessel_reference && (d.kind != DynamicsKind::tdse || model.kind != ModelKind::exciton))
        throw ConfigError(s.key("bessel_reference"), "available for exciton TDSE runs only");

    if (auto init = s.child("initial")) {
        if (!stepping) throw ConfigError(s.key("initial"), "not used by tise runs");
        d.initial = parse_initial(std::move(*init), model, d.kind);
    } else if (d.kind == DynamicsKind::ceom) {
        throw ConfigError(s.key("initial.displacement"), "required for classical runs");
    }
    s.finish();
    return d;
}

IoConfig parse_io(Section s) {
    IoConfig io;
    io.output_dir = s.get("output_dir", io.output_dir);
    io.name = s.get("name", io.name);
    if (io.name.empty() || io.name.find('/') != std::string::npos)
        throw ConfigError(s.key("name"), "must be a plain file stem");
    if (s.has("format"))
        io.format = parsed(s.key("format"), [&] { return parse_archive_format(s.get<std::string>("format", "")); });
    if (s.has("load_file")) io.load_file = s.get<std::string>("load_file", "");
    if (s.has("compare_file")) io.compare_file = s.get<std::string>("compare_file", "");
    if (s.has("compare_mode"))
        io.compare_mode = parsed(s.key("compare_mode"), [&] { return parse_compare_mode(s.get<std::string>("compare_mode", "")); });
    io.keep_states = s.get("keep_states", io.keep_states);
    s.finish();
    return io;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", fmt::format("malformed JSON: {}", e.what()));
    }
    Section top(root, "");
    RunConfig cfg;
    auto model = top.child("model");
    if (!model) throw ConfigError("model", "required section is missing");
    cfg.model = parse_model(std::move(*model));
    auto dyn = top.child("dynamics");
    if (!dyn) throw ConfigError("dynamics", "required section is missing");
    try {
        cfg.dynamics = parse_dynamics(std::move(*dyn), cfg.model);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("dynamics", e.what());
    }
    if (auto io = top.child("io")) cfg.io = parse_io(std::move(*io));
    top.finish();
    cfg.text = root.dump(2);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read config '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace chaintt
