#include "rfolive/olive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rfolive/bellman.hpp"

namespace rfolive {

int TieScript::optimism_at(int t) const {
    return t < static_cast<int>(optimism.size()) ? optimism[t] : -1;
}

int TieScript::deviation_at(int t) const {
    return t < static_cast<int>(deviation.size()) ? deviation[t] : -1;
}

void OliveConfig::validate() const {
    if (!(eps_actv > 0.0) || !(eps_elim > 0.0)) throw ConfigError("thresholds must be positive");
    if (mode == ExecMode::sampled && (n_actv < 1 || n_elim < 1)) throw ConfigError("sample counts must be at least 1");
    if (t_max < 1) throw ConfigError("iteration cap must be at least 1");
}

bool ConstraintRecord::operator==(const ConstraintRecord& o) const {
    auto same_support = [](const std::vector<SupportPoint>& a, const std::vector<SupportPoint>& b) {
        return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](const SupportPoint& p, const SupportPoint& q) {
            return p.x == q.x && p.a == q.a && p.x_next == q.x_next && p.weight == q.weight && p.reward == q.reward;
        });
    };
    return t == o.t && level == o.level && roll_in == o.roll_in && action == o.action && mode == o.mode &&
           same_support(support, o.support) && data == o.data;
}

CompiledConstraint compile_record(const LayerShape& shape, const ConstraintRecord& record, const RewardTable* reward) {
    const bool gated = record.action == ActionTag::uniform;
    if (record.mode == ExecMode::sampled) return compile_dataset(shape, record.data, reward, gated);
    CompiledConstraint c;
    c.level = record.level;
    c.actions = shape.actions.at(record.level);
    c.gated = gated;
    c.gate_scale = 1.0;
    c.support = record.support;
    if (reward)
        for (auto& s : c.support) s.reward = (*reward)(record.level, s.x, s.a);
    return c;
}

std::string OliveTrace::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "t,V_opt,h,survivors_before,survivors_after,terminated\n";
    for (const auto& it : iterations)
        out << it.t << ',' << it.v_opt << ',' << it.level << ',' << it.survivors_before << ','
            << it.survivors_after << ',' << (it.terminated ? 1 : 0) << '\n';
    return out.str();
}

std::vector<CandidateView> candidate_views(const FunctionClass& cls, std::span<const std::size_t> ids, int h) {
    std::vector<CandidateView> views;
    views.reserve(ids.size());
    for (std::size_t id : ids) {
        const std::size_t k = cls.level_index(id, h);
        views.push_back({cls.level_table(h, k).data(), cls.values(id, h + 1).data(), cls.level_greedy(h, k).data()});
    }
    return views;
}

std::vector<double> evaluate_candidates(const FunctionClass& cls, std::span<const std::size_t> ids,
                                        const CompiledConstraint& c, bool parallel) {
    auto views = candidate_views(cls, ids, c.level);
    std::vector<double> out(ids.size());
    if (parallel)
        kernels::omp::batch_errors(c, views, out);
    else
        kernels::serial::batch_errors(c, views, out);
    return out;
}

namespace {

std::vector<double> sampled_onpolicy_errors(const LayeredMdp& mdp, const FunctionClass& cls, std::size_t id,
                                            const DeterministicPolicy& pi, const RewardTable* reward,
                                            std::size_t n, Rng& rng) {
    const int H = mdp.horizon();
    std::vector<double> sums(H, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto tr = sample_trajectory(mdp, pi, rng, reward);
        for (int h = 0; h < H; ++h) {
            const double r = reward ? tr.rewards[h] : 0.0;
            sums[h] += cls.table(id, h)[mdp.shape().pair_index(h, tr.states[h], tr.actions[h])] - r -
                       cls.values(id, h + 1)[tr.states[h + 1]];
        }
    }
    for (double& s : sums) s /= static_cast<double>(n);
    return sums;
}

ConstraintRecord collect(const LayeredMdp& mdp, const DeterministicPolicy& pi, int t, int h, const OliveConfig& cfg,
                         const RewardTable* reward, Rng& rng) {
    ConstraintRecord rec;
    rec.t = t;
    rec.level = h;
    rec.roll_in = pi;
    rec.mode = cfg.mode;
    rec.action = cfg.variant == Variant::q ? ActionTag::roll_in : ActionTag::uniform;
    const ActionSelector sel = cfg.variant == Variant::q ? ActionSelector::of(pi) : ActionSelector::uniform();
    if (cfg.mode == ExecMode::exact) {
        auto c = cfg.variant == Variant::q ? compile_exact(mdp, pi, h, sel, nullptr)
                                           : compile_exact_gated(mdp, pi, h, nullptr);
        rec.support = std::move(c.support);
    } else {
        rec.data.reserve(cfg.n_elim);
        for (std::size_t i = 0; i < cfg.n_elim; ++i) rec.data.push_back(sample_switched(mdp, pi, h, sel, rng, reward));
    }
    return rec;
}

}  // namespace

OliveResult run_olive(const LayeredMdp& mdp, const FunctionClass& cls, const RewardTable* reward,
                      const OliveConfig& config, Rng& rng) {
    config.validate();
    if (cls.shape() != mdp.shape()) throw InvalidInput("function class shape does not match the MDP");
    const int H = mdp.horizon();
    const int x0 = mdp.start();

    OliveResult result;
    std::vector<std::size_t> survivors(cls.size());
    std::iota(survivors.begin(), survivors.end(), std::size_t{0});

    for (int t = 0;; ++t) {
        if (t >= config.t_max)
            throw CapExceeded("iteration cap of " + std::to_string(config.t_max) + " reached", result.trace);

        // optimistic choice over the current version space
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t id : survivors) best = std::max(best, cls.start_value(id, x0));
        std::vector<std::size_t> tied;
        for (std::size_t id : survivors)
            if (cls.start_value(id, x0) >= best - kTieTolerance) tied.push_back(id);
        const int pick = config.script.optimism_at(t);
        if (pick >= static_cast<int>(tied.size()))
            throw ConfigError("optimism script position " + std::to_string(pick) + " exceeds " +
                              std::to_string(tied.size()) + " tied candidates at iteration " + std::to_string(t));
        const std::size_t chosen = tied[pick < 0 ? 0 : pick];
        const ValueFunction f = cls.member(chosen);
        const DeterministicPolicy pi = greedy_policy(mdp.shape(), f);

        OliveIteration it;
        it.t = t;
        it.chosen = chosen;
        it.label = cls.label(chosen);
        it.v_opt = cls.start_value(chosen, x0);
        it.survivors_before = survivors.size();

        Rng actv = rng.split(2 * static_cast<std::uint64_t>(t));
        Rng elim = rng.split(2 * static_cast<std::uint64_t>(t) + 1);
        if (config.mode == ExecMode::exact) {
            for (int h = 0; h < H; ++h) it.errors.push_back(exact_q_error(mdp, f, reward, pi, h));
        } else {
            it.errors = sampled_onpolicy_errors(mdp, cls, chosen, pi, reward, config.n_actv, actv);
        }

        const double total = std::accumulate(it.errors.begin(), it.errors.end(), 0.0);
        if (total <= H * config.eps_actv) {
            it.terminated = true;
            it.survivors_after = survivors.size();
            result.trace.iterations.push_back(std::move(it));
            result.terminated = true;
            result.selected = chosen;
            result.policy = pi;
            break;
        }

        int h = config.script.deviation_at(t);
        if (h >= 0) {
            if (h >= H || !(it.errors[h] > config.eps_actv))
                throw ConfigError("scripted deviation level " + std::to_string(h) + " at iteration " +
                                  std::to_string(t) + " does not exceed the activation threshold");
        } else {
            h = 0;
            while (!(it.errors[h] > config.eps_actv)) ++h;
        }
        it.level = h;

        ConstraintRecord rec = collect(mdp, pi, t, h, config, reward, elim);
        const CompiledConstraint c = compile_record(mdp.shape(), rec, reward);
        const auto errs = evaluate_candidates(cls, survivors, c, config.parallel);
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < survivors.size(); ++i)
            if (std::abs(errs[i]) <= config.eps_elim) kept.push_back(survivors[i]);

        it.survivors_after = kept.size();
        result.trace.iterations.push_back(std::move(it));
        result.constraints.push_back(std::move(rec));
        if (kept.empty())
            throw AssumptionViolation("version space became empty at iteration " + std::to_string(t));
        survivors = std::move(kept);
    }
    result.survivors = std::move(survivors);
    return result;
}

namespace {

std::size_t at_least_one(double n) { return static_cast<std::size_t>(std::max(1.0, std::ceil(n))); }

}  // namespace

OliveConfig schedule_q(double eps, double delta, int horizon, int d, double log_nf, double log_nr, double c) {
    if (!(eps > 0.0) || !(delta > 0.0) || horizon < 1 || d < 1 || c <= 0.0)
        throw ConfigError("schedule arguments must be positive");
    const double H = horizon;
    OliveConfig cfg;
    cfg.variant = Variant::q;
    cfg.c = c;
    cfg.iota = c * std::log(H * d / (delta * eps));
    cfg.eps_actv = eps / (2.0 * H * H);
    cfg.eps_elim = eps / (8.0 * H * H * std::sqrt(static_cast<double>(d)));
    cfg.n_actv = at_least_one(std::pow(H, 6) * cfg.iota / (eps * eps));
    cfg.n_elim = at_least_one((std::pow(H, 6) * log_nf + std::pow(H, 4) * log_nr) * d * cfg.iota / (eps * eps));
    cfg.t_max = d * horizon + 1;
    return cfg;
}

OliveConfig schedule_v(double eps, double delta, int horizon, int d, int actions, double log_nf, double log_nr,
                       double c) {
    if (!(eps > 0.0) || !(delta > 0.0) || horizon < 1 || d < 1 || actions < 1 || c <= 0.0)
        throw ConfigError("schedule arguments must be positive");
    const double H = horizon;
    OliveConfig cfg;
    cfg.variant = Variant::v;
    cfg.c = c;
    cfg.iota = c * std::log(H * d * actions / (delta * eps));
    cfg.eps_actv = eps / (8.0 * H * H);
    cfg.eps_elim = eps / (32.0 * H * H * std::sqrt(static_cast<double>(d)));
    cfg.n_actv = at_least_one(std::pow(H, 6) * cfg.iota / (eps * eps));
    cfg.n_elim = at_least_one((std::pow(H, 6) * log_nf + std::pow(H, 4) * log_nr) * d * actions * cfg.iota /
                               (eps * eps));
    cfg.t_max = d * horizon + 1;
    return cfg;
}

}  // namespace rfolive
