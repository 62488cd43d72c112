#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rfolive/dimensions.hpp"
#include "rfolive/fixtures.hpp"
#include "rfolive/io.hpp"
#include "rfolive/olive.hpp"

namespace rfolive::harness {

using io::json;

enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitConfig = 2,
    kExitAssumption = 3,
    kExitCap = 4,
};

/// Maps the library's exception types to process exit codes.
int exit_code_for(const std::exception& e);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "RFOLIVE_OUT_DIR";

enum class Phase { full, online, offline };

struct ExperimentConfig {
    std::string fixture;  // fixture spec; empty when the problem comes from files
    std::string mdp_path;
    std::string class_path;
    std::string rewards_path;  // {"names":[..],"rewards":[R[h][x][a], ..]}
    std::vector<std::string> reward_filter;
    double eps = 0.1;
    double delta = 0.1;
    Variant variant = Variant::q;
    ExecMode mode = ExecMode::exact;
    std::uint64_t seed = 0;
    TieScript script;
    double c = 1.0;
    std::optional<double> tau_off;
    std::optional<int> t_max;
    std::optional<int> d;
    std::optional<std::size_t> n_actv;
    std::optional<std::size_t> n_elim;
    Phase phase = Phase::full;
    std::string constraints_path;  // input for the offline phase
    std::filesystem::path out_dir;
    bool parallel = true;

    void validate() const;
};

/// Known fixture specs: table3, table4, bandit[:N], tree[:H[:i]],
/// random_closed[:seed].
std::vector<std::string> fixture_names();
Fixture load_fixture(const std::string& spec);

/// The fixture, or the MDP/class/reward files, with the reward filter applied.
Fixture load_problem(const ExperimentConfig& config);

json fixture_json(const Fixture& fx);

struct RunArtifacts {
    json result;
    std::optional<std::string> trace_csv;
    std::optional<json> constraints;
};

/// Runs the configured phase in memory.
RunArtifacts run_experiment(const ExperimentConfig& config);

/// result.json, trace.csv, constraints.json under `dir`, each written atomically.
void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& dir);

/// Realizability and completeness reports, or linear completeness over the
/// whole tree family for a tree spec without an instance index.
json check_report(const std::string& spec, std::uint64_t seed = 0);

struct DimOptions {
    double eps = 0.1;
    Variant type = Variant::q;
    DeMode mode = DeMode::exhaustive;
    std::size_t cap = kDefaultDeCap;
    std::optional<int> rank_target;  // default: max_h |X_h| K_h
    std::optional<std::string> reward;  // reward name; "zero" for the zero reward
};

json dim_report(const Fixture& fx, const DimOptions& options);

/// Runs `config` once per seed into out_dir/seed_<s>, in parallel.
/// Returns per-seed exit codes in seed order.
std::vector<int> sweep(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds);

}  // namespace rfolive::harness
