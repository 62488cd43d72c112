#include "rfolive/rfolive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "rfolive/errors.hpp"

namespace rfolive {

std::size_t ConstraintSet::policy_count() const { return z_on ? z_on->size() : 0; }

std::vector<DeterministicPolicy> ConstraintSet::on_policies() const {
    std::vector<DeterministicPolicy> out;
    if (!z_on) return out;
    for (std::size_t id = 0; id < z_on->size(); ++id) {
        std::vector<std::vector<int>> acts;
        for (int h = 0; h < shape.horizon(); ++h) {
            auto g = z_on->level_greedy(h, z_on->level_index(id, h));
            acts.emplace_back(g.begin(), g.end());
        }
        out.emplace_back(shape, std::move(acts));
    }
    return out;
}

std::vector<std::vector<int>> ConstraintSet::level_witnesses(int h) const {
    std::set<std::vector<int>> rows;
    if (z_on)
        for (std::size_t k = 0; k < z_on->level_size(h); ++k) {
            auto g = z_on->level_greedy(h, k);
            rows.emplace(g.begin(), g.end());
        }
    return {rows.begin(), rows.end()};
}

OnlineResult online_phase(const LayeredMdp& mdp, const FunctionClass& f, const OliveConfig& config, Rng& rng) {
    FunctionClass f_on = difference_class(f);
    ConstraintSet cs;
    cs.variant = config.variant;
    cs.mode = config.mode;
    cs.shape = mdp.shape();
    cs.start = mdp.start();
    cs.eps_elim = config.eps_elim;
    if (config.variant == Variant::v) {
        cs.z_on = cover(f_on, config.eps_elim / 64.0).members;
        OliveResult run = run_olive(mdp, *cs.z_on, nullptr, config, rng);
        cs.records = run.constraints;
        return OnlineResult{std::move(cs), std::move(run)};
    }
    OliveResult run = run_olive(mdp, f_on, nullptr, config, rng);
    cs.records = run.constraints;
    return OnlineResult{std::move(cs), std::move(run)};
}

OfflineResult offline_phase(const ConstraintSet& constraints, const FunctionClass& f, const RewardTable& reward,
                            const OfflineOptions& options) {
    if (f.shape() != constraints.shape) throw InvalidInput("function class shape does not match the constraints");
    const double tau = options.tau_off.value_or(constraints.eps_elim / 2.0);
    if (!(tau > 0.0)) throw ConfigError("offline threshold must be positive");
    const FunctionClass f_off = reward_append(f, reward);

    std::vector<std::size_t> survivors(f_off.size());
    for (std::size_t i = 0; i < survivors.size(); ++i) survivors[i] = i;

    auto keep_within = [&](const CompiledConstraint& c, const std::vector<CandidateView>& views) {
        std::vector<double> errs(views.size());
        if (options.parallel)
            kernels::omp::batch_errors(c, views, errs);
        else
            kernels::serial::batch_errors(c, views, errs);
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < survivors.size(); ++i)
            if (std::abs(errs[i]) <= tau) kept.push_back(survivors[i]);
        survivors = std::move(kept);
    };

    for (const auto& rec : constraints.records) {
        const CompiledConstraint c = compile_record(constraints.shape, rec, &reward);
        if (constraints.variant == Variant::q) {
            keep_within(c, candidate_views(f_off, survivors, rec.level));
        } else {
            for (const auto& w : constraints.level_witnesses(rec.level)) {
                auto views = candidate_views(f_off, survivors, rec.level);
                for (auto& v : views) v.witness = w.data();
                keep_within(c, views);
                if (survivors.empty()) break;
            }
        }
        if (survivors.empty()) break;
    }
    if (survivors.empty())
        throw AssumptionViolation("no function in F + R survived the offline constraints");

    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t id : survivors) best = std::max(best, f_off.start_value(id, constraints.start));
    std::vector<std::size_t> tied;
    for (std::size_t id : survivors)
        if (f_off.start_value(id, constraints.start) >= best - kTieTolerance) tied.push_back(id);
    if (options.optimism >= static_cast<int>(tied.size()))
        throw ConfigError("offline optimism position exceeds the number of tied survivors");

    OfflineResult out;
    out.tau_off = tau;
    out.selected = tied[options.optimism < 0 ? 0 : options.optimism];
    out.label = f_off.label(out.selected);
    out.g = f_off.member(out.selected);
    out.policy = greedy_policy(constraints.shape, out.g);
    out.v_ghat_x0 = f_off.start_value(out.selected, constraints.start);
    out.survivors = std::move(survivors);
    return out;
}

int tabular_dimension(const LayerShape& shape) {
    int d = 1;
    for (int h = 0; h < shape.horizon(); ++h) d = std::max(d, shape.pairs(h));
    return d;
}

RewardOutcome evaluate_reward(const LayeredMdp& mdp, const ConstraintSet& constraints, const FunctionClass& f,
                              const RewardTable& reward, const OfflineOptions& options) {
    OfflineResult off = offline_phase(constraints, f, reward, options);
    RewardOutcome o;
    o.policy = off.policy;
    o.selected = off.label;
    o.v_ghat_x0 = off.v_ghat_x0;
    o.survivors = off.survivors.size();
    const auto opt = optimal_q(mdp, reward);
    o.optimal_value = opt.value;
    o.policy_value = policy_value(mdp, off.policy, reward);
    o.suboptimality = o.optimal_value - o.policy_value;

    const FunctionClass f_off = reward_append(f, reward);
    ValueFunction q;
    q.levels = opt.q;
    for (std::size_t id : off.survivors) {
        double dist = 0.0;
        for (int h = 0; h < mdp.horizon(); ++h) dist = std::max(dist, sup_distance(f_off.table(id, h), q.levels[h]));
        if (dist <= kMembershipTolerance) {
            o.optimal_survived = true;
            break;
        }
    }
    return o;
}

namespace {

double log_reward_cover(std::span<const RewardTable> rewards, double eps) {
    std::vector<const RewardTable*> centers;
    for (const auto& r : rewards) {
        bool covered = std::any_of(centers.begin(), centers.end(), [&](const RewardTable* c) {
            double d = 0.0;
            for (int h = 0; h < r.horizon(); ++h) d = std::max(d, sup_distance(c->level(h), r.level(h)));
            return d <= eps;
        });
        if (!covered) centers.push_back(&r);
    }
    return std::log(static_cast<double>(std::max<std::size_t>(centers.size(), 1)));
}

double log_class_cover(const FunctionClass& f, double eps) {
    const Cover c = cover(f, eps);
    if (!c.members.is_product()) return std::log(static_cast<double>(c.members.size()));
    double s = 0.0;
    for (int h = 0; h < c.members.horizon(); ++h) s += std::log(static_cast<double>(c.members.level_size(h)));
    return s;
}

}  // namespace

RewardFreePlan plan_reward_free(const LayeredMdp& mdp, const FunctionClass& f, std::span<const RewardTable> rewards,
                                double eps, double delta, Variant variant, ExecMode mode,
                                const RewardFreeOptions& options) {
    if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0))
        throw ConfigError("eps and delta must lie in (0, 1)");
    if (rewards.empty()) throw ConfigError("reward class is empty");
    RewardFreePlan plan;
    plan.d = options.d.value_or(tabular_dimension(mdp.shape()));
    const int H = mdp.horizon();

    // eps_elim depends only on (eps, H, d), so a first pass fixes it and the
    // cover sizes at eps_elim / 64 follow.
    OliveConfig probe = variant == Variant::q ? schedule_q(eps, delta, H, plan.d, 1.0, 1.0, options.c)
                                              : schedule_v(eps, delta, H, plan.d, 1, 1.0, 1.0, options.c);
    plan.log_nf = log_class_cover(f, probe.eps_elim / 64.0);
    plan.log_nr = log_reward_cover(rewards, probe.eps_elim / 64.0);
    int k_max = 1;
    for (int h = 0; h < H; ++h) k_max = std::max(k_max, mdp.num_actions(h));
    plan.config = variant == Variant::q
                      ? schedule_q(eps, delta, H, plan.d, plan.log_nf, plan.log_nr, options.c)
                      : schedule_v(eps, delta, H, plan.d, k_max, plan.log_nf, plan.log_nr, options.c);
    plan.config.mode = mode;
    plan.config.script = options.script;
    plan.config.parallel = options.parallel;
    if (options.t_max) plan.config.t_max = *options.t_max;
    if (options.n_actv) plan.config.n_actv = std::min(plan.config.n_actv, *options.n_actv);
    if (options.n_elim) plan.config.n_elim = std::min(plan.config.n_elim, *options.n_elim);
    return plan;
}

RewardFreeResult run_reward_free(const LayeredMdp& mdp, const FunctionClass& f, std::span<const RewardTable> rewards,
                                 double eps, double delta, Variant variant, ExecMode mode, Rng& rng,
                                 const RewardFreeOptions& options) {
    const RewardFreePlan plan = plan_reward_free(mdp, f, rewards, eps, delta, variant, mode, options);
    RewardFreeResult res;
    res.config = plan.config;
    res.d = plan.d;
    res.log_nf = plan.log_nf;
    res.log_nr = plan.log_nr;

    Rng online_rng = rng.split(0);
    res.online = online_phase(mdp, f, res.config, online_rng);

    OfflineOptions off;
    off.tau_off = options.tau_off;
    off.parallel = options.parallel;
    for (const auto& r : rewards) res.outcomes.push_back(evaluate_reward(mdp, res.online.constraints, f, r, off));
    return res;
}

}  // namespace rfolive
