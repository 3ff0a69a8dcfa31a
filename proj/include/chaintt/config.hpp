#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chaintt/archive.hpp"
#include "chaintt/ceom.hpp"
#include "chaintt/models.hpp"
#include "chaintt/qcmd.hpp"
#include "chaintt/tdse.hpp"
#include "chaintt/tise.hpp"

namespace chaintt {

enum class ModelKind { exciton, phonon, coupled };
enum class DynamicsKind { tise, tdse, qcmd, ceom };

std::string to_string(ModelKind kind);
std::string to_string(DynamicsKind kind);

struct ModelConfig {
    ModelKind kind = ModelKind::exciton;
    ChainSpec chain;
    std::vector<double> alpha{0.1};
    std::vector<double> beta{-0.01};
    double eta = 0.0;
    std::vector<double> mass{1.0};
    std::vector<double> nu{1e-3};
    std::vector<double> omg{1.4142135623730951e-3};
    std::vector<double> chi{0.0};
    std::vector<double> rho{0.0};
    std::vector<double> sig{0.0};
    std::vector<double> tau{0.0};
    /// Basis size of exciton or phonon sites.
    Index n_dim = 2;
    /// Basis sizes of coupled sites.
    Index dim_ex = 2;
    Index dim_ph = 4;

    ExcitonModel exciton() const;
    PhononModel phonon() const;
    CoupledModel coupled() const;
    ChainHamiltonian hamiltonian() const;
    std::vector<LocalObservable> observables() const;
    /// Local dimension of every site.
    Index local_dim() const;
};

struct InitialConfig {
    PacketSpec packet;
    /// Per-site <R> (coherent phonon states, classical runs).
    std::vector<double> displacement;
};

struct DynamicsConfig {
    DynamicsKind kind = DynamicsKind::tise;
    TiseConfig tise;
    TdseConfig tdse;
    QcmdConfig qcmd;
    CeomConfig ceom;
    InitialConfig initial;
    /// Append a Bessel comparison table to the summary (exciton TDSE).
    bool bessel_reference = false;
};

struct IoConfig {
    std::string output_dir = "out";
    std::string name = "run";
    ArchiveFormat format = ArchiveFormat::binary;
    std::optional<std::string> load_file;
    std::optional<std::string> compare_file;
    CompareMode compare_mode = CompareMode::populations;
    bool keep_states = false;
};

struct RunConfig {
    ModelConfig model;
    DynamicsConfig dynamics;
    IoConfig io;
    /// Canonical JSON of the parsed input, stored in archives.
    std::string text;
};

/// Parses and validates a JSON run configuration; ConfigError names the offending key.
RunConfig parse_config(const std::string& json_text);
/// Reads a configuration file (IoError when unreadable).
RunConfig load_config(const std::string& path);

}  // namespace chaintt
