#include "rfolive/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rfolive/bellman.hpp"
#include "rfolive/errors.hpp"

namespace rfolive {

// ---- two-branch counterexamples ----

LayeredMdp two_branch_mdp() {
    // level 0: x0 with left/right; level 1: xA, xB with NULL; level 2: terminal.
    return LayeredMdp({{"x0"}, {"xA", "xB"}, {"x_null"}}, {2, 1},
                      {{1.0, 0.0, 0.0, 1.0}, {1.0, 1.0}}, "x0");
}

RewardTable two_branch_reward(const std::vector<double>& flat) {
    return RewardTable(two_branch_mdp().shape(), {{flat.at(0), flat.at(1)}, {flat.at(2), flat.at(3)}});
}

ValueFunction two_branch_function(const std::vector<double>& flat) {
    ValueFunction f;
    f.levels = {{flat.at(0), flat.at(1)}, {flat.at(2), flat.at(3)}};
    return f;
}

namespace {

Fixture two_branch_fixture(std::string name, std::vector<LevelTable> level0, std::vector<std::string> labels0,
                           std::vector<LevelTable> level1, std::vector<std::string> labels1,
                           std::vector<double> bounds) {
    LayeredMdp mdp = two_branch_mdp();
    FunctionClass f = FunctionClass::product(mdp.shape(), {std::move(level0), std::move(level1)}, std::move(bounds),
                                             {std::move(labels0), std::move(labels1)});
    std::vector<RewardTable> rewards{two_branch_reward({0, 0, 1, 0}), two_branch_reward({0, 0, 0.2, 0.1})};
    return Fixture{std::move(name), std::move(mdp), std::move(f), std::move(rewards), {"R1", "R2"}};
}

}  // namespace

Fixture rfolive_counterexample() {
    // f_bad,1 = (0.01, 0.1) exceeds the terminal-level range 0, so both
    // levels use range bound 1.
    return two_branch_fixture("table3", {{0, 0}, {1, 0}, {0.2, 0.1}, {0.21, 0.3}}, {"0", "f_R1", "f_R2", "f_bad"},
                              {{0, 0}, {0.01, 0.1}}, {"0", "f_bad"}, {1.0, 1.0});
}

Fixture jointolive_counterexample() {
    return two_branch_fixture("table4", {{0, 0}, {1, 0}, {0.2, 0.1}, {0.2, 0.3}}, {"0", "f_R1", "f_R2", "f_bad"},
                              {{0, 0}}, {"0"}, {1.0, 0.0});
}

// ---- JointOlive ----

JointOliveResult run_jointolive(const LayeredMdp& mdp, const FunctionClass& f, std::span<const RewardTable> rewards,
                                const OliveConfig& config, const OfflineOptions& offline) {
    config.validate();
    if (config.mode != ExecMode::exact) throw UnsupportedRequest("JointOlive runs in exact mode only");
    if (rewards.empty()) throw ConfigError("reward class is empty");
    const int H = mdp.horizon();
    const int x0 = mdp.start();
    const std::size_t nr = rewards.size();

    std::vector<FunctionClass> appended;
    for (const auto& r : rewards) appended.push_back(reward_append(f, r));
    auto fid = [nr](std::size_t p) { return p / nr; };
    auto rid = [nr](std::size_t p) { return p % nr; };
    auto start_value = [&](std::size_t p) { return appended[rid(p)].start_value(fid(p), x0); };

    JointOliveResult out;
    out.constraints.variant = Variant::q;
    out.constraints.mode = ExecMode::exact;
    out.constraints.shape = mdp.shape();
    out.constraints.start = x0;
    out.constraints.eps_elim = config.eps_elim;

    // pairs (f, R) in f-major order
    std::vector<std::size_t> survivors(f.size() * nr);
    for (std::size_t p = 0; p < survivors.size(); ++p) survivors[p] = p;

    auto record = [&](const DeterministicPolicy& pi, int t, int h) {
        ConstraintRecord rec;
        rec.t = t;
        rec.level = h;
        rec.roll_in = pi;
        rec.action = ActionTag::roll_in;
        rec.mode = ExecMode::exact;
        rec.support = compile_exact(mdp, pi, h, ActionSelector::of(pi), nullptr).support;
        return rec;
    };

    for (int t = 0;; ++t) {
        if (t >= config.t_max)
            throw CapExceeded("iteration cap of " + std::to_string(config.t_max) + " reached", out.trace);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t p : survivors) best = std::max(best, start_value(p));
        std::vector<std::size_t> tied;
        for (std::size_t p : survivors)
            if (start_value(p) >= best - kTieTolerance) tied.push_back(p);
        const int pick = config.script.optimism_at(t);
        if (pick >= static_cast<int>(tied.size())) throw ConfigError("optimism script position exceeds the tie set");
        const std::size_t chosen = tied[pick < 0 ? 0 : pick];
        const FunctionClass& cls = appended[rid(chosen)];
        const RewardTable& r = rewards[rid(chosen)];
        const ValueFunction g = cls.member(fid(chosen));
        const DeterministicPolicy pi = greedy_policy(mdp.shape(), g);

        OliveIteration it;
        it.t = t;
        it.chosen = chosen;
        it.label = cls.label(fid(chosen)) + " @ R" + std::to_string(rid(chosen) + 1);
        it.v_opt = start_value(chosen);
        it.survivors_before = survivors.size();
        for (int h = 0; h < H; ++h) it.errors.push_back(exact_q_error(mdp, g, &r, pi, h));
        out.selected.push_back(it.label);

        // the termination roll-outs are retained at every level
        for (int h = 0; h < H; ++h) out.constraints.records.push_back(record(pi, t, h));

        double total = 0.0;
        for (double e : it.errors) total += e;
        if (total <= H * config.eps_actv) {
            it.terminated = true;
            it.survivors_after = survivors.size();
            out.trace.iterations.push_back(std::move(it));
            break;
        }
        int h = config.script.deviation_at(t);
        if (h >= 0) {
            if (h >= H || !(it.errors[h] > config.eps_actv))
                throw ConfigError("scripted deviation level does not exceed the activation threshold");
        } else {
            h = 0;
            while (!(it.errors[h] > config.eps_actv)) ++h;
        }
        it.level = h;
        ConstraintRecord rec = record(pi, t, h);
        std::vector<std::size_t> kept;
        for (std::size_t p : survivors) {
            const CompiledConstraint c = compile_record(mdp.shape(), rec, &rewards[rid(p)]);
            const std::size_t id = fid(p);
            const auto views = candidate_views(appended[rid(p)], std::span<const std::size_t>(&id, 1), h);
            if (std::abs(kernels::constraint_error(c, views[0])) <= config.eps_elim) kept.push_back(p);
        }
        it.survivors_after = kept.size();
        out.trace.iterations.push_back(std::move(it));
        out.constraints.records.push_back(std::move(rec));
        if (kept.empty()) throw AssumptionViolation("joint version space became empty at iteration " + std::to_string(t));
        survivors = std::move(kept);
    }

    for (const auto& r : rewards) out.outcomes.push_back(evaluate_reward(mdp, out.constraints, f, r, offline));
    return out;
}

// ---- tree hardness family ----

std::uint64_t HardnessFamily::feature_class_size() const {
    std::uint64_t n = 1;
    for (const auto& level : feature_class) n *= level.size();
    return n;
}

namespace {

LayerShape tree_shape(int H) {
    LayerShape s;
    for (int h = 0; h <= H - 2; ++h) {
        s.states.push_back(1 << h);
        s.actions.push_back(2);
    }
    s.states.push_back(2);  // x+, x-
    s.actions.push_back(1);
    s.states.push_back(1);  // terminal
    return s;
}

}  // namespace

HardnessInstance HardnessFamily::instance(std::size_t i) const {
    const int H = horizon;
    if (i >= size()) throw InvalidInput("hardness instance index out of range");
    const LayerShape shape = tree_shape(H);
    const int xs = static_cast<int>(i / 2);
    const int as = static_cast<int>(i % 2);

    std::vector<std::vector<std::string>> names(H + 1);
    for (int h = 0; h <= H - 2; ++h)
        for (int j = 0; j < shape.states[h]; ++j) names[h].push_back("x" + std::to_string(h) + "_" + std::to_string(j));
    names[H - 1] = {"x+", "x-"};
    names[H] = {"end"};

    std::vector<std::vector<double>> trans(H);
    for (int h = 0; h < H - 2; ++h) {
        const int next = shape.states[h + 1];
        trans[h].assign(static_cast<std::size_t>(shape.pairs(h)) * next, 0.0);
        for (int pair = 0; pair < shape.pairs(h); ++pair) trans[h][static_cast<std::size_t>(pair) * next + pair] = 1.0;
    }
    {
        const int h = H - 2;
        trans[h].assign(static_cast<std::size_t>(shape.pairs(h)) * 2, 0.0);
        for (int pair = 0; pair < shape.pairs(h); ++pair) {
            double p_plus = 0.0;
            if (options.perturbed)
                p_plus = pair == static_cast<int>(i) ? 0.5 + options.eps : 0.5;
            else
                p_plus = pair == static_cast<int>(i) ? 1.0 : 0.0;
            trans[h][2 * pair + kTreePlusState] = p_plus;
            trans[h][2 * pair + kTreeMinusState] = 1.0 - p_plus;
        }
    }
    trans[H - 1] = {1.0, 1.0};
    LayeredMdp mdp(std::move(names), shape.actions, std::move(trans), "x0_0");

    std::vector<LevelTable> r(H);
    for (int h = 0; h < H; ++h) r[h].assign(shape.pairs(h), 0.0);
    r[H - 1][kTreePlusState] = 1.0;

    // realizable feature: the path pair at each tree level, x+ at level H-1
    const int dim = options.perturbed ? 2 : 1;
    const double s = options.perturbed ? 1.0 / std::sqrt(2.0) : 1.0;
    std::vector<std::vector<double>> phi(H);
    auto set_on = [&](int h, int pair) {
        phi[h][static_cast<std::size_t>(pair) * dim] = s;
        if (dim == 2) phi[h][static_cast<std::size_t>(pair) * dim + 1] = -s;
    };
    for (int h = 0; h <= H - 2; ++h) {
        phi[h].assign(static_cast<std::size_t>(shape.pairs(h)) * dim, 0.0);
        set_on(h, static_cast<int>(i >> (H - 2 - h)));
    }
    phi[H - 1].assign(2 * static_cast<std::size_t>(dim), 0.0);
    set_on(H - 1, kTreePlusState);

    RewardTable reward(shape, std::move(r));
    LinearFeatureMap feature(dim, shape, std::move(phi));
    return HardnessInstance{i, std::move(mdp), std::move(reward), std::move(feature), xs, as};
}

std::vector<HardnessInstance> HardnessFamily::instances() const {
    std::vector<HardnessInstance> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(instance(i));
    return out;
}

HardnessFamily tree_hardness_family(int horizon, const TreeOptions& options) {
    if (horizon < 3) throw InvalidInput("tree hardness family needs H >= 3");
    if (horizon > options.cap)
        throw UnsupportedRequest("H = " + std::to_string(horizon) + " exceeds the tree cap of " +
                                 std::to_string(options.cap));
    if (options.perturbed && !(options.eps > 0.0 && options.eps <= 0.5))
        throw InvalidInput("perturbation must lie in (0, 1/2]");
    HardnessFamily fam;
    fam.horizon = horizon;
    fam.options = options;
    for (int h = 0; h <= horizon - 2; ++h) {
        const std::size_t pairs = std::size_t{2} << h;
        std::vector<LevelTable> level(pairs, LevelTable(pairs, 0.0));
        for (std::size_t k = 0; k < pairs; ++k) level[k][k] = 1.0;
        fam.feature_class.push_back(std::move(level));
    }
    return fam;
}

std::size_t uniform_episodes_to_plus(const HardnessInstance& inst, Rng& rng, std::size_t max_episodes) {
    const auto pi = StochasticPolicy::uniform(inst.mdp.shape());
    const int H = inst.mdp.horizon();
    for (std::size_t e = 1; e <= max_episodes; ++e)
        if (sample_trajectory(inst.mdp, pi, rng).states[H - 1] == kTreePlusState) return e;
    throw CapExceeded("x+ not reached within " + std::to_string(max_episodes) + " episodes", {});
}

// ---- contextual bandit ----

Fixture contextual_bandit_instance(int n) {
    if (n < 2) throw InvalidInput("bandit needs at least 2 contexts");
    std::vector<std::string> contexts;
    for (int i = 0; i < n; ++i) contexts.push_back("c" + std::to_string(i));
    LayeredMdp mdp({{"root"}, contexts, {"end"}}, {1, 2},
                   {std::vector<double>(n, 1.0 / n), std::vector<double>(2 * static_cast<std::size_t>(n), 1.0)},
                   "root");
    const LayerShape& shape = mdp.shape();

    LevelTable star(2 * static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) star[shape.pair_index(1, x, 1)] = 0.5;

    // Members are stored shifted by -R, so f + R is the Q-function.
    std::vector<ValueFunction> members;
    std::vector<std::string> labels;
    auto add = [&](LevelTable l1, std::string label) {
        LevelTable q1 = l1;
        for (std::size_t i = 0; i < q1.size(); ++i) q1[i] += star[i];
        ValueFunction f;
        f.levels = {bellman_backup(mdp, nullptr, q1, 0), std::move(l1)};
        members.push_back(std::move(f));
        labels.push_back(std::move(label));
    };
    for (int i = 0; i < n; ++i) {
        LevelTable fi(star.size(), 0.0);
        fi[shape.pair_index(1, i, 0)] = 1.0;
        add(std::move(fi), "f" + std::to_string(i + 1));
    }
    add(LevelTable(star.size(), 0.0), "f*");

    RewardTable reward(shape, {{0.0}, star});
    FunctionClass f = FunctionClass::joint(shape, std::move(members), {1.0, 1.0}, std::move(labels));
    return Fixture{"bandit" + std::to_string(n), std::move(mdp), std::move(f), {std::move(reward)}, {"R"}};
}

// ---- linear / low-rank ----

TabularLinear tabular_as_linear_mdp(const LayeredMdp& mdp) {
    const LayerShape& shape = mdp.shape();
    const int H = mdp.horizon();
    int d = 1;
    for (int h = 0; h < H; ++h) d = std::max(d, shape.pairs(h));

    std::vector<std::vector<double>> phi(H);
    for (int h = 0; h < H; ++h) {
        phi[h].assign(static_cast<std::size_t>(shape.pairs(h)) * d, 0.0);
        for (int p = 0; p < shape.pairs(h); ++p) phi[h][static_cast<std::size_t>(p) * d + p] = 1.0;
    }
    LinearFeatureMap features(d, shape, std::move(phi));

    LowRankCertificate c;
    c.dim = d;
    c.mu_bound = std::sqrt(static_cast<double>(d));
    c.mu.resize(H);
    for (int h = 0; h < H; ++h) {
        const int next = shape.states[h + 1];
        const int pairs = shape.pairs(h);
        c.mu[h].assign(next, std::vector<double>(d, 0.0));
        for (int p = 0; p < pairs; ++p)
            for (int y = 0; y < next; ++y)
                c.mu[h][y][p] = mdp.transition(h, p / shape.actions[h], p % shape.actions[h], y);

        for (int p = 0; p < pairs; ++p) {
            const auto v = features.at(h, p);
            double norm = 0.0;
            for (double e : v) norm += e * e;
            c.max_phi_norm = std::max(c.max_phi_norm, std::sqrt(norm));
            for (int y = 0; y < next; ++y) {
                double dot = 0.0;
                for (int i = 0; i < d; ++i) dot += v[i] * c.mu[h][y][i];
                const double p_true = mdp.transition(h, p / shape.actions[h], p % shape.actions[h], y);
                c.max_residual = std::max(c.max_residual, std::abs(dot - p_true));
            }
        }

        // ||sum_x' f'(x') mu(x')|| is convex in f', so the max over [-1,1]^X sits
        // on a sign vector. Above 20 states the triangle bound is used instead.
        if (next <= 20) {
            for (std::uint64_t signs = 0; signs < (std::uint64_t{1} << next); ++signs) {
                double sq = 0.0;
                for (int i = 0; i < d; ++i) {
                    double s = 0.0;
                    for (int y = 0; y < next; ++y) s += ((signs >> y) & 1 ? -1.0 : 1.0) * c.mu[h][y][i];
                    sq += s * s;
                }
                c.max_mu_norm = std::max(c.max_mu_norm, std::sqrt(sq));
            }
        } else {
            double sq = 0.0;
            for (int i = 0; i < d; ++i) {
                double s = 0.0;
                for (int y = 0; y < next; ++y) s += std::abs(c.mu[h][y][i]);
                sq += s * s;
            }
            c.max_mu_norm = std::max(c.max_mu_norm, std::sqrt(sq));
        }
    }
    c.pass = c.max_residual <= kMembershipTolerance && c.max_phi_norm <= 1.0 + kProbabilityTolerance &&
             c.max_mu_norm <= c.mu_bound + kProbabilityTolerance;
    return TabularLinear{std::move(features), std::move(c)};
}

// ---- random closed instances ----

namespace {

// Dyadic probabilities keep every backup exact in floating point.
constexpr int kDyadic = 8;

std::vector<double> dyadic_row(Rng& rng, int n) {
    std::vector<int> counts(n, 0);
    for (int k = 0; k < kDyadic; ++k) ++counts[rng.below(n)];
    std::vector<double> row(n);
    for (int i = 0; i < n; ++i) row[i] = static_cast<double>(counts[i]) / kDyadic;
    return row;
}

void add_unique(std::vector<LevelTable>& level, LevelTable t) {
    if (std::find(level.begin(), level.end(), t) == level.end()) level.push_back(std::move(t));
}

}  // namespace

Fixture random_closed_instance(Rng& rng, const ClosedInstanceSizes& sizes) {
    if (sizes.states < 1 || sizes.actions < 1 || sizes.horizon < 1 || sizes.rewards < 1)
        throw InvalidInput("instance sizes must be positive");
    if (sizes.states > 6 || sizes.actions > 3 || sizes.horizon > 4 || sizes.rewards > 4)
        throw UnsupportedRequest("random closed instances are capped at 6 states, 3 actions, H = 4, 4 rewards");
    const int H = sizes.horizon;
    const int S = sizes.states;
    const int K = sizes.actions;

    for (int attempt = 0; attempt < sizes.budget; ++attempt) {
        std::vector<std::vector<std::string>> names(H + 1);
        for (int h = 0; h < H; ++h)
            for (int x = 0; x < S; ++x) names[h].push_back("s" + std::to_string(h) + "_" + std::to_string(x));
        names[H] = {"end"};
        std::vector<std::vector<double>> trans(H);
        for (int h = 0; h < H; ++h) {
            const int next = h + 1 < H ? S : 1;
            for (int p = 0; p < S * K; ++p) {
                auto row = dyadic_row(rng, next);
                trans[h].insert(trans[h].end(), row.begin(), row.end());
            }
        }
        LayeredMdp mdp(std::move(names), std::vector<int>(H, K), std::move(trans), "s0_0");
        const LayerShape& shape = mdp.shape();

        std::vector<RewardTable> rewards;
        std::vector<std::string> reward_names;
        for (int k = 0; k < sizes.rewards; ++k) {
            std::vector<LevelTable> levels(H);
            for (int h = 0; h < H; ++h) {
                levels[h].resize(shape.pairs(h));
                for (double& v : levels[h]) v = static_cast<double>(rng.below(kDyadic + 1)) / kDyadic;
            }
            rewards.emplace_back(shape, std::move(levels));
            reward_names.push_back("R" + std::to_string(k + 1));
        }

        // backward closure; level H-1 holds only the zero table
        std::vector<std::vector<LevelTable>> levels(H);
        levels[H - 1].push_back(LevelTable(shape.pairs(H - 1), 0.0));
        for (int h = H - 2; h >= 0; --h) {
            auto& cur = levels[h];
            cur.push_back(LevelTable(shape.pairs(h), 0.0));
            const auto& nxt = levels[h + 1];
            for (const auto& t : nxt) add_unique(cur, bellman_backup(mdp, nullptr, t, h));
            for (const auto& t : nxt)
                for (const auto& r : rewards) {
                    LevelTable s = t;
                    for (std::size_t i = 0; i < s.size(); ++i) s[i] += r.level(h + 1)[i];
                    add_unique(cur, bellman_backup(mdp, nullptr, s, h));
                }
            for (const auto& a : nxt)
                for (const auto& b : nxt) {
                    LevelTable s = a;
                    for (std::size_t i = 0; i < s.size(); ++i) s[i] -= b[i];
                    add_unique(cur, bellman_backup(mdp, nullptr, s, h));
                }
        }
        std::vector<double> bounds(H);
        for (int h = 0; h < H; ++h) bounds[h] = H - h - 1;
        FunctionClass f = FunctionClass::product(shape, std::move(levels), std::move(bounds));

        if (!check_realizability(mdp, f, rewards).pass) continue;
        if (!check_completeness(mdp, f, rewards).pass) continue;
        return Fixture{"random_closed", std::move(mdp), std::move(f), std::move(rewards), std::move(reward_names)};
    }
    throw GeneratorError("no closed instance within " + std::to_string(sizes.budget) + " attempts");
}

}  // namespace rfolive
