#pragma once

#include "avm/lattice.hpp"
#include "avm/melnikov.hpp"
#include "avm/numerics/ode.hpp"
#include "avm/numerics/quadrature.hpp"
#include "avm/numerics/roots.hpp"
#include "avm/persist.hpp"
#include "avm/slowflow.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace avm::cli {

/// Invalid or incomplete configuration. The message starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NumericConfig {
    numerics::IntegratorSpec integrator;
    numerics::QuadratureSpec quadrature;
    numerics::RootSpec root;
};

struct LatticeRun {
    lattice::LatticeConfig lattice;
    enum class Model { Exact, Reduced } model = Model::Exact;
    lattice::LatticeState initial;
    double horizon = 0.0;
    int samples = 201;
    bool velocities = false;
};

struct OrbitsRun {
    std::vector<double> theta0;
    double periods = 1.0;
    int samples = 201;
};

struct MelnikovRun {
    std::vector<double> betas;
    std::vector<double> rhos;
    bool continuation = true;
    melnikov::ContinuationSpec cont;
    std::vector<double> seeds;
};

struct PersistRun {
    double rho = 0.0;
    double seed_beta1 = 0.0;
    std::vector<double> eps;
    enum class Mode { State, AdjustBeta } mode = Mode::State;
    persist::ShootingSpec shooting;
};

struct RunConfig {
    nlohmann::json source;  ///< parsed document, used for hashing
    NumericConfig numerics;
    slowflow::SlowFlowParams slowflow;
    std::optional<LatticeRun> lattice;
    std::optional<OrbitsRun> orbits;
    std::optional<MelnikovRun> melnikov;
    std::optional<PersistRun> persist;
    std::vector<std::string> formats{"csv", "json", "svg"};

    bool wants(const std::string& format) const;
};

/// Parses the document. `command` selects which analysis block is required.
RunConfig parse_config(const nlohmann::json& doc, const std::string& command);
RunConfig load_config(const std::filesystem::path& path, const std::string& command);

/// 64-bit FNV-1a of the canonical (sorted-key, compact) serialization.
std::string config_hash(const nlohmann::json& doc);

} // namespace avm::cli
