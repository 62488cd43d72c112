#include "rfolive/mdp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "rfolive/errors.hpp"

namespace rfolive {

namespace {

std::atomic<std::uint64_t> g_sampler_calls{0};

int draw_index(std::span<const double> probs, Rng& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    int last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = static_cast<int>(i);
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    // u landed in the rounding gap at the top of the row
    return last_positive;
}

int choose_action(const LayeredMdp& mdp, ActionSelector sel, int h, int x, Rng& rng) {
    if (sel.is_uniform()) return static_cast<int>(rng.below(mdp.num_actions(h)));
    return (*sel.policy)(h, x);
}

void check_level(const LayeredMdp& mdp, int h, bool allow_terminal) {
    const int limit = allow_terminal ? mdp.horizon() : mdp.horizon() - 1;
    if (h < 0 || h > limit) throw InvalidInput("level " + std::to_string(h) + " out of range");
}

}  // namespace

LayeredMdp::LayeredMdp(std::vector<std::vector<std::string>> state_names, std::vector<int> actions,
                       std::vector<std::vector<double>> transitions, std::string start_name)
    : names_(std::move(state_names)), transitions_(std::move(transitions)) {
    const std::size_t H = actions.size();
    if (H == 0) throw InvalidInput("horizon must be at least 1");
    if (names_.size() != H + 1)
        throw InvalidInput("expected " + std::to_string(H + 1) + " state levels, got " +
                           std::to_string(names_.size()));
    if (transitions_.size() != H) throw InvalidInput("expected one transition tensor per level");

    shape_.actions = std::move(actions);
    for (const auto& level : names_) {
        if (level.empty()) throw InvalidInput("every level needs at least one state");
        shape_.states.push_back(static_cast<int>(level.size()));
    }

    for (std::size_t h = 0; h < H; ++h) {
        const int K = shape_.actions[h];
        if (K < 1) throw InvalidInput("action count must be positive at level " + std::to_string(h));
        const std::size_t n = shape_.states[h], m = shape_.states[h + 1];
        if (transitions_[h].size() != n * K * m)
            throw InvalidInput("transition tensor at level " + std::to_string(h) + " has wrong size");
        for (std::size_t row = 0; row < n * K; ++row) {
            double sum = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                double p = transitions_[h][row * m + j];
                if (!(p >= 0.0) || !std::isfinite(p))
                    throw InvalidInput("negative or non-finite transition probability at level " +
                                       std::to_string(h));
                sum += p;
            }
            if (std::abs(sum - 1.0) > kProbabilityTolerance)
                throw InvalidInput("transition row at level " + std::to_string(h) + " sums to " +
                                   std::to_string(sum));
        }
    }

    auto s = find_state(0, start_name);
    if (!s) throw InvalidInput("start state '" + start_name + "' is not in level 0");
    start_ = *s;
}

std::optional<int> LayeredMdp::find_state(int h, std::string_view name) const {
    const auto& level = names_.at(h);
    auto it = std::find(level.begin(), level.end(), name);
    if (it == level.end()) return std::nullopt;
    return static_cast<int>(it - level.begin());
}

std::span<const double> LayeredMdp::next_distribution(int h, int x, int a) const {
    const std::size_t m = shape_.states[h + 1];
    const std::size_t row = shape_.pair_index(h, x, a);
    return std::span<const double>(transitions_[h]).subspan(row * m, m);
}

RewardTable::RewardTable(const LayerShape& shape, std::vector<LevelTable> levels)
    : actions_(shape.actions), levels_(std::move(levels)) {
    if (levels_.size() != static_cast<std::size_t>(shape.horizon()))
        throw InvalidInput("reward table needs one level per step");
    for (int h = 0; h < shape.horizon(); ++h) {
        if (levels_[h].size() != static_cast<std::size_t>(shape.pairs(h)))
            throw InvalidInput("reward level " + std::to_string(h) + " has wrong size");
        for (double r : levels_[h])
            if (!(r >= 0.0 && r <= 1.0))
                throw InvalidInput("reward outside [0,1] at level " + std::to_string(h));
    }
}

RewardTable RewardTable::zero(const LayerShape& shape) {
    std::vector<LevelTable> levels;
    for (int h = 0; h < shape.horizon(); ++h) levels.emplace_back(shape.pairs(h), 0.0);
    return RewardTable(shape, std::move(levels));
}

DeterministicPolicy::DeterministicPolicy(const LayerShape& shape, std::vector<std::vector<int>> actions)
    : actions_(std::move(actions)) {
    if (actions_.size() != static_cast<std::size_t>(shape.horizon()))
        throw InvalidInput("policy needs one level per step");
    for (int h = 0; h < shape.horizon(); ++h) {
        if (actions_[h].size() != static_cast<std::size_t>(shape.states[h]))
            throw InvalidInput("policy level " + std::to_string(h) + " has wrong size");
        for (int a : actions_[h])
            if (a < 0 || a >= shape.actions[h])
                throw InvalidInput("policy action out of range at level " + std::to_string(h));
    }
}

DeterministicPolicy DeterministicPolicy::constant(const LayerShape& shape, int action) {
    std::vector<std::vector<int>> acts;
    for (int h = 0; h < shape.horizon(); ++h)
        acts.emplace_back(shape.states[h], std::clamp(action, 0, shape.actions[h] - 1));
    return DeterministicPolicy(shape, std::move(acts));
}

StochasticPolicy StochasticPolicy::uniform(const LayerShape& shape) {
    StochasticPolicy p;
    for (int h = 0; h < shape.horizon(); ++h)
        p.weights.emplace_back(shape.pairs(h), 1.0 / shape.actions[h]);
    return p;
}

StochasticPolicy StochasticPolicy::from(const LayerShape& shape, const DeterministicPolicy& policy) {
    StochasticPolicy p;
    for (int h = 0; h < shape.horizon(); ++h) {
        LevelTable w(shape.pairs(h), 0.0);
        for (int x = 0; x < shape.states[h]; ++x) w[shape.pair_index(h, x, policy(h, x))] = 1.0;
        p.weights.push_back(std::move(w));
    }
    return p;
}

double StateActionDistribution::total() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

std::uint64_t sampler_calls() noexcept { return g_sampler_calls.load(std::memory_order_relaxed); }

Trajectory sample_trajectory(const LayeredMdp& mdp, const DeterministicPolicy& policy, Rng& rng,
                             const RewardTable* reward) {
    g_sampler_calls.fetch_add(1, std::memory_order_relaxed);
    Trajectory tr;
    int x = mdp.start();
    tr.states.push_back(x);
    for (int h = 0; h < mdp.horizon(); ++h) {
        int a = policy(h, x);
        tr.actions.push_back(a);
        if (reward) tr.rewards.push_back((*reward)(h, x, a));
        x = draw_index(mdp.next_distribution(h, x, a), rng);
        tr.states.push_back(x);
    }
    return tr;
}

Trajectory sample_trajectory(const LayeredMdp& mdp, const StochasticPolicy& policy, Rng& rng,
                             const RewardTable* reward) {
    g_sampler_calls.fetch_add(1, std::memory_order_relaxed);
    Trajectory tr;
    int x = mdp.start();
    tr.states.push_back(x);
    for (int h = 0; h < mdp.horizon(); ++h) {
        const int K = mdp.num_actions(h);
        auto row = std::span<const double>(policy.weights[h]).subspan(static_cast<std::size_t>(x) * K, K);
        int a = draw_index(row, rng);
        tr.actions.push_back(a);
        if (reward) tr.rewards.push_back((*reward)(h, x, a));
        x = draw_index(mdp.next_distribution(h, x, a), rng);
        tr.states.push_back(x);
    }
    return tr;
}

TransitionTuple sample_switched(const LayeredMdp& mdp, const DeterministicPolicy& roll_in, int h,
                                ActionSelector at_h, Rng& rng, const RewardTable* reward) {
    check_level(mdp, h, false);
    g_sampler_calls.fetch_add(1, std::memory_order_relaxed);
    int x = mdp.start();
    for (int l = 0; l < h; ++l) x = draw_index(mdp.next_distribution(l, x, roll_in(l, x)), rng);
    TransitionTuple t;
    t.h = h;
    t.x = x;
    t.a = choose_action(mdp, at_h, h, x, rng);
    t.r = reward ? (*reward)(h, x, t.a) : 0.0;
    t.x_next = draw_index(mdp.next_distribution(h, x, t.a), rng);
    return t;
}

namespace {

template <class ActionWeight>
std::vector<double> forward_marginal(const LayeredMdp& mdp, int h, ActionWeight&& weight) {
    std::vector<double> mu(mdp.num_states(0), 0.0);
    mu[mdp.start()] = 1.0;
    for (int l = 0; l < h; ++l) {
        std::vector<double> next(mdp.num_states(l + 1), 0.0);
        for (int x = 0; x < mdp.num_states(l); ++x) {
            if (mu[x] == 0.0) continue;
            for (int a = 0; a < mdp.num_actions(l); ++a) {
                double w = weight(l, x, a);
                if (w == 0.0) continue;
                auto p = mdp.next_distribution(l, x, a);
                for (std::size_t y = 0; y < p.size(); ++y) next[y] += mu[x] * w * p[y];
            }
        }
        mu = std::move(next);
    }
    return mu;
}

auto deterministic_weight(const DeterministicPolicy& policy) {
    return [&policy](int l, int x, int a) { return policy(l, x) == a ? 1.0 : 0.0; };
}

auto stochastic_weight(const LayeredMdp& mdp, const StochasticPolicy& policy) {
    return [&mdp, &policy](int l, int x, int a) {
        return policy.weights[l][mdp.shape().pair_index(l, x, a)];
    };
}

template <class ActionWeight>
StateActionDistribution pair_occupancy(const LayeredMdp& mdp, int h, const std::vector<double>& mu,
                                       ActionWeight&& weight) {
    StateActionDistribution d{h, LevelTable(mdp.num_pairs(h), 0.0)};
    for (int x = 0; x < mdp.num_states(h); ++x)
        for (int a = 0; a < mdp.num_actions(h); ++a)
            d.weights[mdp.shape().pair_index(h, x, a)] = mu[x] * weight(h, x, a);
    return d;
}

template <class ActionWeight>
double value_dp(const LayeredMdp& mdp, const RewardTable& reward, ActionWeight&& weight) {
    std::vector<double> v(mdp.num_states(mdp.horizon()), 0.0);
    for (int h = mdp.horizon() - 1; h >= 0; --h) {
        std::vector<double> cur(mdp.num_states(h), 0.0);
        for (int x = 0; x < mdp.num_states(h); ++x)
            for (int a = 0; a < mdp.num_actions(h); ++a) {
                double w = weight(h, x, a);
                if (w == 0.0) continue;
                auto p = mdp.next_distribution(h, x, a);
                double q = reward(h, x, a);
                for (std::size_t y = 0; y < p.size(); ++y) q += p[y] * v[y];
                cur[x] += w * q;
            }
        v = std::move(cur);
    }
    return v[mdp.start()];
}

}  // namespace

std::vector<double> state_marginal(const LayeredMdp& mdp, const DeterministicPolicy& policy, int h) {
    check_level(mdp, h, true);
    return forward_marginal(mdp, h, deterministic_weight(policy));
}

std::vector<double> state_marginal(const LayeredMdp& mdp, const StochasticPolicy& policy, int h) {
    check_level(mdp, h, true);
    return forward_marginal(mdp, h, stochastic_weight(mdp, policy));
}

StateActionDistribution occupancy(const LayeredMdp& mdp, const DeterministicPolicy& policy, int h) {
    check_level(mdp, h, false);
    auto w = deterministic_weight(policy);
    return pair_occupancy(mdp, h, forward_marginal(mdp, h, w), w);
}

StateActionDistribution occupancy(const LayeredMdp& mdp, const StochasticPolicy& policy, int h) {
    check_level(mdp, h, false);
    auto w = stochastic_weight(mdp, policy);
    return pair_occupancy(mdp, h, forward_marginal(mdp, h, w), w);
}

StateActionDistribution switched_occupancy(const LayeredMdp& mdp, const DeterministicPolicy& roll_in,
                                           int h, ActionSelector at_h) {
    check_level(mdp, h, false);
    auto mu = forward_marginal(mdp, h, deterministic_weight(roll_in));
    if (at_h.is_uniform()) {
        const double k = 1.0 / mdp.num_actions(h);
        return pair_occupancy(mdp, h, mu, [k](int, int, int) { return k; });
    }
    return pair_occupancy(mdp, h, mu, deterministic_weight(*at_h.policy));
}

double policy_value(const LayeredMdp& mdp, const DeterministicPolicy& policy, const RewardTable& reward) {
    return value_dp(mdp, reward, deterministic_weight(policy));
}

double policy_value(const LayeredMdp& mdp, const StochasticPolicy& policy, const RewardTable& reward) {
    return value_dp(mdp, reward, stochastic_weight(mdp, policy));
}

std::vector<double> state_values(const LayerShape& shape, int h, std::span<const double> table) {
    if (h >= shape.horizon()) return std::vector<double>(shape.states.at(h), 0.0);
    const int K = shape.actions[h];
    std::vector<double> v(shape.states[h]);
    for (int x = 0; x < shape.states[h]; ++x) {
        auto row = table.subspan(static_cast<std::size_t>(x) * K, K);
        v[x] = *std::max_element(row.begin(), row.end());
    }
    return v;
}

LevelTable bellman_backup(const LayeredMdp& mdp, const RewardTable* reward, std::span<const double> next,
                          int h) {
    check_level(mdp, h, false);
    std::vector<double> v;
    if (h + 1 < mdp.horizon()) {
        if (next.size() != static_cast<std::size_t>(mdp.num_pairs(h + 1)))
            throw InvalidInput("next-level table has wrong size");
        v = state_values(mdp.shape(), h + 1, next);
    } else {
        v.assign(mdp.num_states(h + 1), 0.0);
    }
    LevelTable out(mdp.num_pairs(h));
    for (int x = 0; x < mdp.num_states(h); ++x)
        for (int a = 0; a < mdp.num_actions(h); ++a) {
            auto p = mdp.next_distribution(h, x, a);
            double q = reward ? (*reward)(h, x, a) : 0.0;
            for (std::size_t y = 0; y < p.size(); ++y) q += p[y] * v[y];
            out[mdp.shape().pair_index(h, x, a)] = q;
        }
    return out;
}

OptimalSolution optimal_q(const LayeredMdp& mdp, const RewardTable& reward) {
    OptimalSolution sol;
    const int H = mdp.horizon();
    sol.q.resize(H);
    LevelTable next;
    for (int h = H - 1; h >= 0; --h) {
        sol.q[h] = bellman_backup(mdp, &reward, next, h);
        next = sol.q[h];
    }
    auto v0 = state_values(mdp.shape(), 0, sol.q[0]);
    sol.value = v0[mdp.start()];
    return sol;
}

}  // namespace rfolive
