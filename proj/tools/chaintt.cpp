#include <algorithm>
#include <filesystem>
#include <future>
#include <iostream>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "chaintt/runner.hpp"

namespace fs = std::filesystem;
using namespace chaintt;

namespace {

struct Job {
    std::string config;
    std::string output_dir;  // empty = keep
};

struct JobResult {
    int code = 0;
    std::string text;
};

JobResult run_one(const Job& job, RunOverrides overrides, bool compare) {
    JobResult r;
    try {
        RunConfig cfg = load_config(job.config);
        if (!job.output_dir.empty()) overrides.output_dir = job.output_dir;
        apply_overrides(cfg, overrides);
        if (compare && !cfg.io.compare_file) throw ConfigError("io.compare_file", "required for compare");
        const RunOutput out = execute_run(cfg);
        r.text = out.summary;
        r.text += fmt::format("archive: {}\nrecords: {}\n", out.archive_path, out.records_path);
        if (compare) r.text += compare_report(cfg, out.archive);
    } catch (const std::exception& e) {
        r.code = exit_code(e);
        r.text += fmt::format("error ({}): {}\n", job.config, e.what());
    }
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor-train dynamics of exciton and phonon chains"};
    app.require_subcommand(1);

    RunOverrides overrides;
    std::string output_dir;
    std::uint64_t seed = 0;
    Index dense_cap = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--output-dir", output_dir, "Directory for archives and record streams");
        cmd->add_option("--seed", seed, "Seed of the random ALS trial states");
        cmd->add_option("--dense-cap", dense_cap, "Largest dense dimension for quasi-exact paths")->check(CLI::PositiveNumber);
    };

    std::string config;
    std::string sweep_dir;
    CLI::App* run = app.add_subcommand("run", "Execute a run configuration");
    run->add_option("config", config, "JSON run configuration");
    run->add_option("--sweep", sweep_dir, "Run every *.json in a directory concurrently")->check(CLI::ExistingDirectory);
    add_common(run);

    std::string compare_config;
    CLI::App* compare = app.add_subcommand("compare", "Run a configuration and report RMSD against io.compare_file");
    compare->add_option("config", compare_config, "JSON run configuration")->required();
    add_common(compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto any_set = [&](CLI::App* cmd, const char* name) { return cmd->count(name) > 0; };
    CLI::App* active = run->parsed() ? run : compare;
    if (any_set(active, "--output-dir")) overrides.output_dir = output_dir;
    if (any_set(active, "--seed")) overrides.seed = seed;
    if (any_set(active, "--dense-cap")) overrides.dense_cap = dense_cap;

    if (compare->parsed()) {
        const JobResult r = run_one({compare_config, ""}, overrides, true);
        std::cout << r.text;
        return r.code;
    }

    if (sweep_dir.empty() == config.empty()) {
        std::cerr << "run: give either a config file or --sweep <dir>\n";
        return 2;
    }
    if (!config.empty()) {
        const JobResult r = run_one({config, ""}, overrides, false);
        (r.code == 0 ? std::cout : std::cerr) << r.text;
        return r.code;
    }

    std::vector<fs::path> configs;
    for (const auto& entry : fs::directory_iterator(sweep_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json") configs.push_back(entry.path());
    std::sort(configs.begin(), configs.end());
    if (configs.empty()) {
        std::cerr << fmt::format("run: no *.json files in '{}'\n", sweep_dir);
        return 4;
    }
    const fs::path base = overrides.output_dir ? fs::path(*overrides.output_dir) : fs::path("out");
    std::vector<std::future<JobResult>> jobs;
    for (const auto& c : configs) {
        Job job{c.string(), (base / c.stem()).string()};
        jobs.push_back(std::async(std::launch::async, run_one, job, overrides, false));
    }
    int code = 0;
    for (auto& j : jobs) {
        const JobResult r = j.get();
        std::cout << r.text << "\n";
        code = std::max(code, r.code);
    }
    return code;
}
