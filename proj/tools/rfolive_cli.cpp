#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfolive/errors.hpp"
#include "rfolive/harness.hpp"

namespace h = rfolive::harness;
namespace io = rfolive::io;

namespace {

const char* kSchemas = R"(Exit codes: 0 ok, 1 internal error, 2 config or input error,
3 assumption violation (empty version space), 4 iteration cap exceeded.

Output directory: --out-dir, else $RFOLIVE_OUT_DIR, else the working directory.

JSON schemas
  MDP       {"horizon":H, "states":[[names] x (H+1)], "actions":[K_h] or K,
             "transitions":P[h][x][a] = [prob over next level], "start":name}
  rewards   {"names":[..], "rewards":[R[h][x][a], ..]}
  class     {"type":"finite", "product":true, "bounds":[B_h],
             "levels":[[{"label":s, "table":[x][a]}]]}
            {"type":"finite", "product":false, "bounds":[B_h],
             "members":[{"label":s, "tables":[[x][a] per level]}]}
            {"type":"linear", "features":{"dim":d, "phi":[[pair*d+i] per level]},
             "bound_per_level":[B_h], "value_bounds":[V_h], "grid_pitch":p}
  dataset   [{"h","x","a","r","x_next"}]
  constraints.json  {"variant","mode","shape":{"states","actions"},"start",
             "eps_elim","records":[{"t","h","policy","mode","action",
             "support":[{"x","a","x_next","weight"}],"data":dataset}],"z_on":class|null}
  result.json  per reward {"policy","V_ghat_x0","survivors","suboptimality",..}
  trace.csv    t,V_opt,h,survivors_before,survivors_after,terminated

Fixtures: table3, table4, bandit[:N], tree[:H[:i]], random_closed[:seed])";

std::vector<int> parse_list(const std::string& s) {
    std::vector<int> out;
    if (s.empty()) return out;
    std::stringstream in(s);
    for (std::string part; std::getline(in, part, ',');) {
        try {
            out.push_back(std::stoi(part));
        } catch (const std::exception&) {
            throw rfolive::ConfigError("bad list entry '" + part + "'");
        }
    }
    return out;
}

struct RunFlags {
    std::string variant = "q";
    std::string mode = "exact";
    std::string phase = "full";
    std::string optimism;
    std::string deviation;
    std::string out_dir;
    bool serial = false;
    double tau_off = 0.0;
    int t_max = 0;
    int d = 0;
    std::size_t n_actv = 0;
    std::size_t n_elim = 0;
};

void add_problem_flags(CLI::App* app, h::ExperimentConfig& c) {
    app->add_option("--fixture", c.fixture, "fixture spec");
    app->add_option("--mdp", c.mdp_path, "MDP JSON file");
    app->add_option("--class", c.class_path, "function class JSON file");
    app->add_option("--rewards", c.rewards_path, "reward class JSON file");
    app->add_option("--reward", c.reward_filter, "keep only these rewards (repeatable)");
}

void add_run_flags(CLI::App* app, h::ExperimentConfig& c, RunFlags& f) {
    add_problem_flags(app, c);
    app->add_option("--eps", c.eps, "target accuracy in (0,1)");
    app->add_option("--delta", c.delta, "failure probability in (0,1)");
    app->add_option("--variant", f.variant, "q or v");
    app->add_option("--mode", f.mode, "exact or sampled");
    app->add_option("--seed", c.seed, "64-bit seed");
    app->add_option("--optimism", f.optimism, "comma list: tie position per iteration (-1 default)");
    app->add_option("--deviation", f.deviation, "comma list: deviation level per iteration (-1 default)");
    app->add_option("--c", c.c, "log-factor constant");
    app->add_option("--tau-off", f.tau_off, "offline threshold (default eps_elim/2)");
    app->add_option("--t-max", f.t_max, "iteration cap (default dH+1)");
    app->add_option("--d", f.d, "dimension estimate (default max_h |X_h| K_h)");
    app->add_option("--n-actv-cap", f.n_actv, "sampled mode: cap on n_actv");
    app->add_option("--n-elim-cap", f.n_elim, "sampled mode: cap on n_elim");
    app->add_option("--phase", f.phase, "full, online or offline");
    app->add_option("--constraints", c.constraints_path, "saved constraint set for --phase offline");
    app->add_option("--out-dir", f.out_dir, "output directory");
    app->add_flag("--serial", f.serial, "use the serial reference kernels");
}

std::string out_dir_of(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(h::kOutDirEnv)) return env;
    return ".";
}

void finish(h::ExperimentConfig& c, const RunFlags& f) {
    c.variant = io::variant_from_string(f.variant);
    c.mode = io::mode_from_string(f.mode);
    if (f.phase == "full")
        c.phase = h::Phase::full;
    else if (f.phase == "online")
        c.phase = h::Phase::online;
    else if (f.phase == "offline")
        c.phase = h::Phase::offline;
    else
        throw rfolive::ConfigError("unknown phase '" + f.phase + "'");
    c.script.optimism = parse_list(f.optimism);
    c.script.deviation = parse_list(f.deviation);
    if (f.tau_off != 0.0) c.tau_off = f.tau_off;
    if (f.t_max != 0) c.t_max = f.t_max;
    if (f.d != 0) c.d = f.d;
    if (f.n_actv != 0) c.n_actv = f.n_actv;
    if (f.n_elim != 0) c.n_elim = f.n_elim;
    c.parallel = !f.serial;
    c.out_dir = out_dir_of(f.out_dir);
}

void emit(const io::json& j, const std::string& out) {
    const std::string text = j.dump(2) + "\n";
    if (out.empty())
        std::cout << text;
    else
        io::write_file_atomic(out, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reward-free OLIVE lab"};
    app.footer(kSchemas);
    app.require_subcommand(1);

    h::ExperimentConfig run_cfg;
    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "online and/or offline phase on one problem");
    add_run_flags(run, run_cfg, run_flags);

    h::ExperimentConfig sweep_cfg;
    RunFlags sweep_flags;
    std::string seeds;
    auto* sweep = app.add_subcommand("sweep", "run once per seed into <out-dir>/seed_<s>");
    add_run_flags(sweep, sweep_cfg, sweep_flags);
    sweep->add_option("--seeds", seeds, "comma list of seeds")->required();

    std::string check_fixture;
    std::string check_out;
    std::uint64_t check_seed = 0;
    auto* check = app.add_subcommand("check", "realizability / completeness / linear completeness report");
    check->add_option("--fixture", check_fixture, "fixture spec; tree[:H] checks the whole family")->required();
    check->add_option("--seed", check_seed, "seed for linear-completeness probes");
    check->add_option("--out", check_out, "write the report here instead of stdout");

    std::string dim_fixture;
    std::string dim_out;
    std::string dim_type = "q";
    std::string dim_mode = "exhaustive";
    std::string dim_reward;
    int dim_target = 0;
    h::DimOptions dim_opts;
    auto* dim = app.add_subcommand("dim", "Bellman-Eluder dimension and Bellman-rank check");
    dim->add_option("--fixture", dim_fixture, "fixture spec")->required();
    dim->add_option("--eps", dim_opts.eps, "scale eps");
    dim->add_option("--type", dim_type, "q or v");
    dim->add_option("--mode", dim_mode, "exhaustive or greedy");
    dim->add_option("--cap", dim_opts.cap, "largest distribution family searched exhaustively");
    dim->add_option("--rank-target", dim_target, "rank bound (default max_h |X_h| K_h)");
    dim->add_option("--reward", dim_reward, "reward name or 'zero' (default: first reward)");
    dim->add_option("--out", dim_out, "write the report here instead of stdout");

    std::string fixture_name;
    std::string fixture_out;
    auto* fixture = app.add_subcommand("fixture", "emit a fixture as MDP / class / reward JSON");
    fixture->add_option("name", fixture_name, "fixture spec")->required();
    fixture->add_option("--out", fixture_out, "write here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? h::kExitOk : h::kExitConfig;
    }

    try {
        if (*run) {
            finish(run_cfg, run_flags);
            const auto art = h::run_experiment(run_cfg);
            h::write_artifacts(art, run_cfg.out_dir);
            std::cout << art.result.dump(2) << "\n";
        } else if (*sweep) {
            finish(sweep_cfg, sweep_flags);
            std::vector<std::uint64_t> list;
            for (int s : parse_list(seeds)) {
                if (s < 0) throw rfolive::ConfigError("seeds must be non-negative");
                list.push_back(static_cast<std::uint64_t>(s));
            }
            if (list.empty()) throw rfolive::ConfigError("--seeds is empty");
            const auto codes = h::sweep(sweep_cfg, list);
            int worst = h::kExitOk;
            for (int c : codes) worst = std::max(worst, c);
            std::cout << "sweep: " << list.size() << " runs, worst exit " << worst << "\n";
            return worst;
        } else if (*check) {
            emit(h::check_report(check_fixture, check_seed), check_out);
        } else if (*dim) {
            dim_opts.type = io::variant_from_string(dim_type);
            if (dim_mode == "exhaustive")
                dim_opts.mode = rfolive::DeMode::exhaustive;
            else if (dim_mode == "greedy")
                dim_opts.mode = rfolive::DeMode::greedy;
            else
                throw rfolive::ConfigError("unknown dimension mode '" + dim_mode + "'");
            if (dim_target > 0) dim_opts.rank_target = dim_target;
            if (!dim_reward.empty()) dim_opts.reward = dim_reward;
            emit(h::dim_report(h::load_fixture(dim_fixture), dim_opts), dim_out);
        } else if (*fixture) {
            emit(h::fixture_json(h::load_fixture(fixture_name)), fixture_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return h::exit_code_for(e);
    }
    return h::kExitOk;
}
