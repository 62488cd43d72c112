#include "rfolive/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

#include "rfolive/errors.hpp"
#include "rfolive/rfolive.hpp"

namespace rfolive::harness {

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const CapExceeded*>(&e)) return kExitCap;
    if (dynamic_cast<const AssumptionViolation*>(&e)) return kExitAssumption;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidInput*>(&e) ||
        dynamic_cast<const UnsupportedRequest*>(&e))
        return kExitConfig;
    return kExitInternal;
}

void ExperimentConfig::validate() const {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(c > 0.0)) throw ConfigError("c must be positive");
    if (fixture.empty() && (mdp_path.empty() || class_path.empty() || rewards_path.empty()))
        throw ConfigError("give --fixture or all of --mdp, --class, --rewards");
    if (!fixture.empty() && !mdp_path.empty()) throw ConfigError("--fixture and --mdp are exclusive");
    if (phase == Phase::offline && constraints_path.empty())
        throw ConfigError("--phase offline needs a saved constraint file (--constraints)");
    if (tau_off && !(*tau_off > 0.0)) throw ConfigError("tau_off must be positive");
    if (t_max && *t_max < 1) throw ConfigError("t_max must be at least 1");
    if (d && *d < 1) throw ConfigError("d must be at least 1");
}

// ---- fixtures ----

std::vector<std::string> fixture_names() { return {"table3", "table4", "bandit", "tree", "random_closed"}; }

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string part; std::getline(in, part, sep);) out.push_back(part);
    return out;
}

long long parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad " + what + " '" + s + "'");
    }
}

Fixture tree_fixture(int H, std::size_t i) {
    const HardnessFamily fam = tree_hardness_family(H);
    HardnessInstance inst = fam.instance(i);
    LinearClassSpec spec;
    spec.features = inst.feature;
    spec.norm_bounds.assign(H, 1.0);
    spec.value_bounds.assign(H, 1.0);
    FunctionClass f = linear_cover(spec, 0.5).members;
    return Fixture{"tree:" + std::to_string(H) + ":" + std::to_string(i), std::move(inst.mdp), std::move(f),
                   {std::move(inst.reward)}, {"R"}};
}

}  // namespace

Fixture load_fixture(const std::string& spec) {
    const auto parts = split(spec, ':');
    if (parts.empty()) throw ConfigError("empty fixture name");
    const std::string& name = parts[0];
    auto arg = [&](std::size_t k, long long def) {
        return parts.size() > k ? parse_int(parts[k], "fixture argument") : def;
    };
    if (name == "table3" && parts.size() == 1) return rfolive_counterexample();
    if (name == "table4" && parts.size() == 1) return jointolive_counterexample();
    if (name == "bandit" && parts.size() <= 2) return contextual_bandit_instance(static_cast<int>(arg(1, 4)));
    if (name == "tree" && parts.size() <= 3) {
        const long long i = arg(2, 0);
        if (i < 0) throw ConfigError("tree instance index must be non-negative");
        return tree_fixture(static_cast<int>(arg(1, 4)), static_cast<std::size_t>(i));
    }
    if (name == "random_closed" && parts.size() <= 2) {
        Rng rng(static_cast<std::uint64_t>(arg(1, 0)));
        Fixture fx = random_closed_instance(rng);
        fx.name = spec;
        return fx;
    }
    throw ConfigError("unknown fixture '" + spec + "'");
}

Fixture load_problem(const ExperimentConfig& config) {
    std::optional<Fixture> fx;
    if (!config.fixture.empty()) {
        fx.emplace(load_fixture(config.fixture));
    } else {
        LayeredMdp mdp = io::mdp_from_json(io::read_json(config.mdp_path));
        FunctionClass f = io::class_from_json(mdp.shape(), io::read_json(config.class_path));
        const json rj = io::read_json(config.rewards_path);
        std::vector<RewardTable> rewards;
        std::vector<std::string> names;
        try {
            for (const auto& r : rj.at("rewards")) rewards.push_back(io::reward_from_json(mdp.shape(), r));
            names = rj.at("names").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw InvalidInput(std::string("malformed reward class JSON: ") + e.what());
        }
        if (names.size() != rewards.size()) throw InvalidInput("reward class needs one name per reward");
        fx.emplace(Fixture{config.mdp_path, std::move(mdp), std::move(f), std::move(rewards), std::move(names)});
    }
    if (!config.reward_filter.empty()) {
        std::vector<RewardTable> rewards;
        std::vector<std::string> names;
        for (const auto& want : config.reward_filter) {
            auto it = std::find(fx->reward_names.begin(), fx->reward_names.end(), want);
            if (it == fx->reward_names.end()) throw ConfigError("unknown reward '" + want + "'");
            const auto k = static_cast<std::size_t>(it - fx->reward_names.begin());
            rewards.push_back(fx->rewards[k]);
            names.push_back(want);
        }
        fx->rewards = std::move(rewards);
        fx->reward_names = std::move(names);
    }
    return std::move(*fx);
}

json fixture_json(const Fixture& fx) {
    json rewards = json::array();
    for (const auto& r : fx.rewards) rewards.push_back(io::to_json(fx.mdp.shape(), r));
    return {{"name", fx.name},
            {"mdp", io::to_json(fx.mdp)},
            {"class", io::to_json(fx.f)},
            {"rewards", {{"names", fx.reward_names}, {"rewards", std::move(rewards)}}}};
}

// ---- run ----

namespace {

json outcome_json(const std::string& name, const RewardOutcome& o, int start) {
    return {{"reward", name},
            {"policy", io::to_json(o.policy)},
            {"start_action", o.policy(0, start)},
            {"selected", o.selected},
            {"V_ghat_x0", o.v_ghat_x0},
            {"survivors", o.survivors},
            {"optimal_value", o.optimal_value},
            {"policy_value", o.policy_value},
            {"suboptimality", o.suboptimality},
            {"optimal_survived", o.optimal_survived}};
}

json header_json(const ExperimentConfig& c, const Fixture& fx) {
    return {{"problem", fx.name},
            {"variant", io::to_string(c.variant)},
            {"mode", io::to_string(c.mode)},
            {"seed", c.seed},
            {"eps", c.eps},
            {"delta", c.delta}};
}

json plan_json(const RewardFreePlan& p) {
    return {{"d", p.d},
            {"log_nf", p.log_nf},
            {"log_nr", p.log_nr},
            {"eps_actv", p.config.eps_actv},
            {"eps_elim", p.config.eps_elim},
            {"n_actv", p.config.n_actv},
            {"n_elim", p.config.n_elim},
            {"t_max", p.config.t_max},
            {"iota", p.config.iota}};
}

RewardFreeOptions options_of(const ExperimentConfig& c) {
    RewardFreeOptions o;
    o.d = c.d;
    o.c = c.c;
    o.tau_off = c.tau_off;
    o.t_max = c.t_max;
    o.script = c.script;
    o.parallel = c.parallel;
    o.n_actv = c.n_actv;
    o.n_elim = c.n_elim;
    return o;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& config) {
    config.validate();
    const Fixture fx = load_problem(config);
    RunArtifacts art;
    art.result = header_json(config, fx);
    OfflineOptions off;
    off.tau_off = config.tau_off;
    off.parallel = config.parallel;

    auto offline_results = [&](const ConstraintSet& cs) {
        json rewards = json::array();
        for (std::size_t k = 0; k < fx.rewards.size(); ++k)
            rewards.push_back(
                outcome_json(fx.reward_names[k], evaluate_reward(fx.mdp, cs, fx.f, fx.rewards[k], off), fx.mdp.start()));
        return rewards;
    };

    if (config.phase == Phase::offline) {
        const ConstraintSet cs = io::constraint_set_from_json(io::read_json(config.constraints_path));
        if (cs.shape != fx.mdp.shape()) throw ConfigError("saved constraints do not match the problem shape");
        art.result["phase"] = "offline";
        art.result["rewards"] = offline_results(cs);
        return art;
    }

    const RewardFreeOptions opts = options_of(config);
    const RewardFreePlan plan =
        plan_reward_free(fx.mdp, fx.f, fx.rewards, config.eps, config.delta, config.variant, config.mode, opts);
    Rng rng(config.seed);
    Rng online_rng = rng.split(0);
    const OnlineResult online = online_phase(fx.mdp, fx.f, plan.config, online_rng);

    art.result["phase"] = config.phase == Phase::online ? "online" : "full";
    art.result["plan"] = plan_json(plan);
    art.result["online"] = {{"terminated", online.run.terminated},
                            {"iterations", online.run.trace.iterations.size()},
                            {"constraints", online.constraints.records.size()},
                            {"policies", online.constraints.policy_count()}};
    art.trace_csv = online.run.trace.to_csv();
    art.constraints = io::to_json(online.constraints);
    if (config.phase == Phase::full) art.result["rewards"] = offline_results(online.constraints);
    return art;
}

void write_artifacts(const RunArtifacts& a, const std::filesystem::path& dir) {
    // everything is serialized before the first file lands
    const std::string result = a.result.dump(2) + "\n";
    const std::string constraints = a.constraints ? a.constraints->dump() + "\n" : std::string();
    if (a.constraints) io::write_file_atomic(dir / "constraints.json", constraints);
    if (a.trace_csv) io::write_file_atomic(dir / "trace.csv", *a.trace_csv);
    io::write_file_atomic(dir / "result.json", result);
}

// ---- check ----

json check_report(const std::string& spec, std::uint64_t seed) {
    const auto parts = split(spec, ':');
    if (!parts.empty() && parts[0] == "tree" && parts.size() <= 2) {
        const int H = parts.size() == 2 ? static_cast<int>(parse_int(parts[1], "tree horizon")) : 4;
        const HardnessFamily fam = tree_hardness_family(H);
        json instances = json::array();
        bool all = true;
        Rng rng(seed);
        for (std::size_t i = 0; i < fam.size(); ++i) {
            const HardnessInstance inst = fam.instance(i);
            std::vector<std::vector<std::vector<double>>> probes;
            for (int h = 0; h < H; ++h) probes.push_back(completeness_probes(inst.feature, h, 1.0, 8, rng));
            const auto rep = check_linear_completeness(inst.mdp, inst.feature, probes);
            all = all && rep.pass;
            json j = io::to_json(rep);
            j["index"] = i;
            instances.push_back(std::move(j));
        }
        return {{"problem", spec},
                {"linear_completeness", {{"pass", all}, {"instances", std::move(instances)}}},
                {"feature_class_size", fam.feature_class_size()},
                {"family_size", fam.size()}};
    }
    const Fixture fx = load_fixture(spec);
    json out = {{"problem", fx.name}, {"realizability", io::to_json(check_realizability(fx.mdp, fx.f, fx.rewards))}};
    if (fx.f.is_product())
        out["completeness"] = io::to_json(check_completeness(fx.mdp, fx.f, fx.rewards));
    else
        out["completeness"] = {{"pass", nullptr}, {"note", "not applicable to joint classes"}};
    return out;
}

// ---- dim ----

json dim_report(const Fixture& fx, const DimOptions& options) {
    if (fx.f.size() > 4096) throw UnsupportedRequest("dimension reports enumerate at most 4096 functions");
    const RewardTable* reward = nullptr;
    std::string reward_name = "zero";
    if (!options.reward && !fx.rewards.empty()) {
        reward = &fx.rewards[0];
        reward_name = fx.reward_names[0];
    } else if (options.reward && *options.reward != "zero") {
        auto it = std::find(fx.reward_names.begin(), fx.reward_names.end(), *options.reward);
        if (it == fx.reward_names.end()) throw ConfigError("unknown reward '" + *options.reward + "'");
        reward = &fx.rewards[static_cast<std::size_t>(it - fx.reward_names.begin())];
        reward_name = *options.reward;
    }
    // Residuals are taken on Q-functions: F + R under a reward, F itself under zero.
    const auto functions = reward ? reward_append(fx.f, *reward).enumerate() : fx.f.enumerate();
    const DimensionResult d = be_dimension(fx.mdp, functions, reward, options.eps, options.type, options.mode, options.cap);
    json out = io::to_json(d, options.eps);
    out["problem"] = fx.name;
    out["type"] = io::to_string(options.type);
    out["reward"] = reward_name;

    std::set<DeterministicPolicy> uniq;
    for (const auto& f : functions) uniq.insert(greedy_policy(fx.mdp.shape(), f));
    const std::vector<DeterministicPolicy> policies(uniq.begin(), uniq.end());
    const int target = options.rank_target.value_or(tabular_dimension(fx.mdp.shape()));
    json ranks = json::array();
    bool accepted = true;
    for (int h = 0; h < fx.mdp.horizon(); ++h) {
        const auto m = error_matrix(fx.mdp, functions, policies, reward, h, options.type);
        const auto r = bellman_rank_check(m, target);
        accepted = accepted && r.accepted;
        json j = io::to_json(r);
        j["level"] = h;
        ranks.push_back(std::move(j));
    }
    out["rank_check"] = {{"target", target}, {"policies", policies.size()}, {"accepted", accepted}, {"levels", ranks}};
    return out;
}

// ---- sweep ----

std::vector<int> sweep(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds) {
    config.validate();
    std::vector<int> codes(seeds.size(), kExitOk);
    std::vector<std::string> errors(seeds.size());
    const long n = static_cast<long>(seeds.size());
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < n; ++k) {
        ExperimentConfig c = config;
        c.seed = seeds[k];
        c.parallel = false;
        try {
            write_artifacts(run_experiment(c), config.out_dir / ("seed_" + std::to_string(seeds[k])));
        } catch (const std::exception& e) {
            codes[k] = exit_code_for(e);
            errors[k] = e.what();
        }
    }
    json summary = json::array();
    for (std::size_t k = 0; k < seeds.size(); ++k)
        summary.push_back({{"seed", seeds[k]}, {"exit", codes[k]}, {"error", errors[k]}});
    io::write_file_atomic(config.out_dir / "sweep.json", summary.dump(2) + "\n");
    return codes;
}

}  // namespace rfolive::harness
