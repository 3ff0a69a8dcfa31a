#include <filesystem>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>
#include <json.hpp>

#include "chaintt/runner.hpp"

using namespace chaintt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json exciton_tise() {
    return json::parse(R"({
      "model": { "kind": "exciton", "n_site": 4, "periodic": false, "n_dim": 2 },
      "dynamics": { "kind": "tise", "n_levels": 2 }
    })");
}

json exciton_tdse(const std::string& solver, Index steps) {
    return json::parse(fmt::format(R"({{
      "model": {{ "kind": "exciton", "n_site": 5, "periodic": true }},
      "dynamics": {{ "kind": "tdse", "solver": "{}", "num_steps": {}, "step_size": 20.0, "sub_steps": 2,
                    "initial": {{ "kind": "gaussian", "width": 1.0, "momentum": 0.5 }} }}
    }})", solver, steps));
}

std::string expect_config_error(const json& j) {
    try {
        parse_config(j.dump());
    } catch (const ConfigError& e) {
        return e.key();
    }
    ADD_FAILURE() << "no ConfigError for " << j.dump();
    return "";
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("chaintt_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, ParsesDefaults) {
    const RunConfig cfg = parse_config(exciton_tise().dump());
    EXPECT_EQ(cfg.model.kind, ModelKind::exciton);
    EXPECT_EQ(cfg.model.chain.n_site, 4);
    EXPECT_EQ(cfg.dynamics.kind, DynamicsKind::tise);
    EXPECT_EQ(cfg.dynamics.tise.n_levels, 2);
    EXPECT_EQ(cfg.io.format, ArchiveFormat::binary);
    EXPECT_EQ(cfg.model.alpha, std::vector<double>{0.1});
}

TEST(Config, KeyPathsInErrors) {
    json j = exciton_tise();
    j["model"].erase("n_site");
    EXPECT_EQ(expect_config_error(j), "model.n_site");

    j = exciton_tise();
    j["model"]["n_sites"] = 4;
    EXPECT_EQ(expect_config_error(j), "model.n_sites");

    j = exciton_tise();
    j["dynamics"]["n_levels"] = "two";
    EXPECT_EQ(expect_config_error(j), "dynamics.n_levels");

    j = exciton_tise();
    j["dynamics"]["solver"] = "dmrg";
    EXPECT_EQ(expect_config_error(j), "dynamics.solver");

    j = exciton_tise();
    j["extra"] = json::object();
    EXPECT_EQ(expect_config_error(j), "extra");

    j = exciton_tise();
    j["model"]["mass"] = 1.0;
    EXPECT_EQ(expect_config_error(j), "model.mass");

    j = exciton_tise();
    j["model"]["qtt"] = true;
    EXPECT_EQ(expect_config_error(j), "model.qtt");

    j = exciton_tise();
    j["model"]["beta"] = json::array({-0.01, -0.02});
    j["model"]["homogen"] = false;
    EXPECT_EQ(expect_config_error(j), "model");

    j = exciton_tise();
    j["dynamics"]["kind"] = "qcmd";
    EXPECT_EQ(expect_config_error(j), "dynamics.kind");

    j = exciton_tdse("s2", 2);
    j["dynamics"]["num_steps"] = 0;
    EXPECT_EQ(expect_config_error(j), "dynamics.num_steps");

    j = exciton_tdse("s2", 2);
    j["dynamics"]["initial"]["kind"] = "coherent";
    EXPECT_EQ(expect_config_error(j), "dynamics.initial.displacement");

    j = exciton_tdse("s2", 2);
    j["io"] = {{"format", "hdf5"}};
    EXPECT_EQ(expect_config_error(j), "io.format");

    EXPECT_EQ(expect_config_error(json::array()), "");
    EXPECT_THROW(parse_config("{ not json"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), IoError);
}

TEST(Config, HeterogeneousLists) {
    json j = exciton_tise();
    j["model"]["homogen"] = false;
    j["model"]["alpha"] = json::array({0.1, 0.2, 0.1, 0.3});
    j["model"]["beta"] = json::array({-0.01, -0.02, -0.01});
    const RunConfig cfg = parse_config(j.dump());
    EXPECT_EQ(cfg.model.alpha.size(), 4u);
    EXPECT_EQ(cfg.model.exciton().bond_beta(1), -0.02);
}

TEST(Config, BundledConfigsParse) {
    for (const char* name : {"exciton_tdse_bessel", "phonon_tdse_coherent", "phonon_ceom_coherent", "coupled_qcmd_sech"}) {
        const RunConfig cfg = load_config(std::string(CHAINTT_SOURCE_DIR) + "/configs/" + name + ".json");
        EXPECT_EQ(cfg.io.name, name);
    }
    const RunConfig sech_run = load_config(std::string(CHAINTT_SOURCE_DIR) + "/configs/coupled_qcmd_sech.json");
    EXPECT_EQ(sech_run.model.chain.n_site, 41);
    EXPECT_EQ(sech_run.dynamics.initial.packet.center, 20);
    const RunConfig coherent_run = load_config(std::string(CHAINTT_SOURCE_DIR) + "/configs/phonon_tdse_coherent.json");
    EXPECT_EQ(coherent_run.dynamics.initial.displacement[4], 50.0);
}

TEST(Runner, ExitCodes) {
    EXPECT_EQ(exit_code(ConfigError("a", "b")), 2);
    EXPECT_EQ(exit_code(ModelError("m")), 2);
    EXPECT_EQ(exit_code(NumericalError("n")), 3);
    EXPECT_EQ(exit_code(IoError("i")), 4);
    EXPECT_EQ(exit_code(std::runtime_error("x")), 1);
}

TEST(Runner, ArtifactsAreDeterministic) {
    const fs::path dir = scratch("determinism");
    json j = exciton_tise();
    j["dynamics"]["seed"] = 5;
    j["io"] = {{"output_dir", dir.string()}, {"name", "levels"}};
    const RunConfig cfg = parse_config(j.dump());
    const RunOutput a = execute_run(cfg);
    const std::string first = slurp(a.archive_path);
    const RunOutput b = execute_run(cfg);
    EXPECT_EQ(first, slurp(b.archive_path));
    EXPECT_TRUE(fs::exists(a.records_path));
    EXPECT_NE(a.summary.find("level"), std::string::npos);

    const RunArchive loaded = load_run(a.archive_path);
    EXPECT_EQ(loaded.records.size(), 2u);
    EXPECT_EQ(loaded.config_text, cfg.text);
    ASSERT_TRUE(loaded.checkpoint.has_value());
    EXPECT_NEAR(loaded.records[0].energy, 0.0, 1e-9);
    EXPECT_NEAR(loaded.records[1].energy, 0.1 + 2 * -0.01 * std::cos(std::numbers::pi / 5), 1e-9);

    RunOverrides o;
    o.output_dir = (dir / "other").string();
    o.seed = 9;
    RunConfig c2 = cfg;
    apply_overrides(c2, o);
    EXPECT_EQ(c2.dynamics.tise.seed, 9u);
    EXPECT_TRUE(fs::exists(execute_run(c2).archive_path));
}

TEST(Runner, TiseArchiveSeedsTdse) {
    const fs::path dir = scratch("tise_restart");
    json t = exciton_tise();
    t["model"] = {{"kind", "exciton"}, {"n_site", 5}, {"periodic", true}};
    t["dynamics"]["n_levels"] = 1;
    t["dynamics"]["e_est"] = 0.08;
    t["io"] = {{"output_dir", dir.string()}, {"name", "ground"}};
    const RunOutput ground = execute_run(parse_config(t.dump()));

    json d = exciton_tdse("qe", 3);
    d["io"] = {{"output_dir", dir.string()}, {"name", "evolved"}, {"load_file", ground.archive_path}};
    const RunOutput evolved = execute_run(parse_config(d.dump()));
    const auto& recs = evolved.archive.records;
    ASSERT_EQ(recs.size(), 4u);
    EXPECT_EQ(recs.front().time, 0.0);
    // an eigenstate only picks up a phase
    EXPECT_NEAR(ground.archive.records[0].energy, 0.08, 1e-10);
    for (const auto& r : recs) {
        EXPECT_NEAR(std::abs(r.acf), 1.0, 1e-10);
        EXPECT_NEAR(r.energy, ground.archive.records[0].energy, 1e-10);
    }

    json bad = d;
    bad["model"]["n_site"] = 6;
    EXPECT_THROW(execute_run(parse_config(bad.dump())), ConfigError);
}

TEST(Runner, SplitRunMatchesDensePath) {
    const fs::path dir = scratch("split");
    json full = exciton_tdse("qe", 6);
    full["io"] = {{"output_dir", dir.string()}, {"name", "full"}};
    const RunOutput whole = execute_run(parse_config(full.dump()));

    json first = exciton_tdse("qe", 3);
    first["io"] = {{"output_dir", dir.string()}, {"name", "first"}};
    const RunOutput a = execute_run(parse_config(first.dump()));
    json second = exciton_tdse("qe", 3);
    second["io"] = {{"output_dir", dir.string()}, {"name", "second"}, {"load_file", a.archive_path}};
    const RunOutput b = execute_run(parse_config(second.dump()));

    ASSERT_EQ(b.archive.records.size(), 3u);
    EXPECT_EQ(b.archive.records.front().index, 4);
    const Vector x = to_dense(*whole.archive.checkpoint).data;
    const Vector y = to_dense(*b.archive.checkpoint).data;
    EXPECT_LE((x - y).cwiseAbs().maxCoeff(), 1e-12);
    for (std::size_t k = 0; k < 3; ++k)
        EXPECT_LE(compare_runs({whole.archive.records[4 + k]}, {b.archive.records[k]}, CompareMode::populations)[0], 1e-12);
}

TEST(Runner, ClassicalRestart) {
    const fs::path dir = scratch("classical");
    const std::string qcmd = R"({
      "model": { "kind": "coupled", "n_site": 6, "periodic": true, "sig": 1.6e-4 },
      "dynamics": { "kind": "qcmd", "solver": "pb", "num_steps": NSTEPS, "initial": { "kind": "sech" } }
    })";
    auto make = [&](int steps, const std::string& name, const std::string& load) {
        json j = json::parse(std::regex_replace(qcmd, std::regex("NSTEPS"), std::to_string(steps)));
        j["io"] = {{"output_dir", dir.string()}, {"name", name}};
        if (!load.empty()) j["io"]["load_file"] = load;
        return parse_config(j.dump());
    };
    const RunOutput whole = execute_run(make(8, "whole", ""));
    const RunOutput a = execute_run(make(4, "a", ""));
    const RunOutput b = execute_run(make(4, "b", a.archive_path));
    ASSERT_TRUE(b.archive.classical.has_value());
    EXPECT_LE((b.archive.classical->amplitudes - whole.archive.classical->amplitudes).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((b.archive.classical->q - whole.archive.classical->q).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_DOUBLE_EQ(b.archive.classical->time, whole.archive.classical->time);

    json ceom = json::parse(R"({
      "model": { "kind": "phonon", "n_site": 5 },
      "dynamics": { "kind": "ceom", "solver": "qe", "num_steps": 4, "initial": { "displacement": 3.0 } }
    })");
    ceom["io"] = {{"output_dir", dir.string()}, {"name", "ceom"}, {"format", "matrix-container"}};
    const RunOutput c = execute_run(parse_config(ceom.dump()));
    EXPECT_EQ(fs::path(c.archive_path).extension(), ".wtmc");
    EXPECT_EQ(c.archive.records.front().sites.at("position")[2].mean, 3.0);
}

TEST(Runner, CompareReport) {
    const fs::path dir = scratch("compare");
    json s2 = exciton_tdse("s2", 4);
    s2["io"] = {{"output_dir", dir.string()}, {"name", "s2"}};
    const RunOutput a = execute_run(parse_config(s2.dump()));

    json self = s2;
    self["io"]["compare_file"] = a.archive_path;
    const RunConfig self_cfg = parse_config(self.dump());
    const std::string rep = compare_report(self_cfg, a.archive);
    EXPECT_NE(rep.find("max rmsd = 0.000000e+00"), std::string::npos) << rep;

    json sm = exciton_tdse("sm", 4);
    sm["io"] = {{"output_dir", dir.string()}, {"name", "sm"}, {"compare_file", a.archive_path}};
    const RunConfig sm_cfg = parse_config(sm.dump());
    const RunOutput b = execute_run(sm_cfg);
    json qe = exciton_tdse("qe", 4);
    qe["io"] = {{"output_dir", dir.string()}, {"name", "qe"}};
    const RunOutput exact = execute_run(parse_config(qe.dump()));
    // bounded by the two scheme errors against the exact propagation
    const auto rmsd = compare_runs(b.archive.records, a.archive.records, CompareMode::populations);
    const auto err_sm = compare_runs(b.archive.records, exact.archive.records, CompareMode::populations);
    const auto err_s2 = compare_runs(a.archive.records, exact.archive.records, CompareMode::populations);
    for (std::size_t k = 1; k < rmsd.size(); ++k) {
        EXPECT_GT(rmsd[k], 0.0);
        EXPECT_LE(rmsd[k], err_sm[k] + err_s2[k] + 1e-15);
    }

    json shorter = exciton_tdse("sm", 3);
    shorter["io"] = {{"output_dir", dir.string()}, {"name", "short"}, {"compare_file", a.archive_path}};
    const RunConfig short_cfg = parse_config(shorter.dump());
    EXPECT_THROW(compare_report(short_cfg, execute_run(short_cfg).archive), DimensionError);

    json missing = s2;
    missing["io"]["compare_file"] = (dir / "missing.wtra").string();
    EXPECT_THROW(compare_report(parse_config(missing.dump()), a.archive), IoError);
}
