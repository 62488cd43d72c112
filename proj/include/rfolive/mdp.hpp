#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfolive/rng.hpp"

namespace rfolive {

/// Tolerance for probability-vector row sums and normalization checks.
inline constexpr double kProbabilityTolerance = 1e-12;

/// Table over the state-action pairs of one level, stored row-major as
/// `values[x * K_h + a]`.
using LevelTable = std::vector<double>;

/// Sizes of a layered MDP: states at levels 0..H (the last level is terminal)
/// and action counts at levels 0..H-1.
struct LayerShape {
    std::vector<int> states;   // size H + 1
    std::vector<int> actions;  // size H

    int horizon() const noexcept { return static_cast<int>(actions.size()); }
    int pairs(int h) const { return states.at(h) * actions.at(h); }
    std::size_t pair_index(int h, int x, int a) const {
        return static_cast<std::size_t>(x) * actions[h] + a;
    }

    bool operator==(const LayerShape&) const = default;
};

/// Finite, layered, episodic MDP with explicit transition tensors.
///
/// Level h holds the states X_h; every transition from level h lands in
/// level h + 1. Level H is terminal and carries no actions. Construction
/// validates every row of the transition tensor and throws `InvalidInput`
/// on failure, so the operations below carry no probability errors.
class LayeredMdp {
public:
    /// `transitions[h]` is laid out as `[x][a][x']`, flattened.
    LayeredMdp(std::vector<std::vector<std::string>> state_names,
               std::vector<int> actions,
               std::vector<std::vector<double>> transitions,
               std::string start_name);

    int horizon() const noexcept { return shape_.horizon(); }
    int num_states(int h) const { return shape_.states.at(h); }
    int num_actions(int h) const { return shape_.actions.at(h); }
    int num_pairs(int h) const { return shape_.pairs(h); }
    int start() const noexcept { return start_; }
    const LayerShape& shape() const noexcept { return shape_; }

    const std::string& state_name(int h, int x) const { return names_.at(h).at(x); }
    const std::vector<std::vector<std::string>>& state_names() const noexcept { return names_; }
    std::optional<int> find_state(int h, std::string_view name) const;

    /// P_h(. | x, a) as a probability vector over X_{h+1}.
    std::span<const double> next_distribution(int h, int x, int a) const;
    double transition(int h, int x, int a, int x_next) const {
        return next_distribution(h, x, a)[x_next];
    }
    const std::vector<double>& transition_tensor(int h) const { return transitions_.at(h); }

    bool operator==(const LayeredMdp&) const = default;

private:
    std::vector<std::vector<std::string>> names_;
    LayerShape shape_;
    std::vector<std::vector<double>> transitions_;
    int start_ = 0;
};

/// Deterministic reward R_h(x, a) in [0, 1] for levels 0..H-1.
class RewardTable {
public:
    RewardTable(const LayerShape& shape, std::vector<LevelTable> levels);
    static RewardTable zero(const LayerShape& shape);

    double operator()(int h, int x, int a) const {
        return levels_[h][static_cast<std::size_t>(x) * actions_[h] + a];
    }
    const LevelTable& level(int h) const { return levels_.at(h); }
    const std::vector<LevelTable>& levels() const noexcept { return levels_; }
    int horizon() const noexcept { return static_cast<int>(levels_.size()); }

    bool operator==(const RewardTable&) const = default;

private:
    std::vector<int> actions_;
    std::vector<LevelTable> levels_;
};

/// Per-level map from state to action index.
class DeterministicPolicy {
public:
    DeterministicPolicy() = default;
    DeterministicPolicy(const LayerShape& shape, std::vector<std::vector<int>> actions);

    /// Same action index at every state, clamped to the level's action count.
    static DeterministicPolicy constant(const LayerShape& shape, int action);

    int operator()(int h, int x) const { return actions_[h][x]; }
    const std::vector<int>& level(int h) const { return actions_.at(h); }
    const std::vector<std::vector<int>>& actions() const noexcept { return actions_; }
    int horizon() const noexcept { return static_cast<int>(actions_.size()); }

    bool operator==(const DeterministicPolicy&) const = default;
    auto operator<=>(const DeterministicPolicy&) const = default;

private:
    std::vector<std::vector<int>> actions_;
};

/// Per-state action weights. Only used for the uniform baseline inside the
/// occupancy and value dynamic programs.
struct StochasticPolicy {
    std::vector<LevelTable> weights;  // weights[h][x * K_h + a]

    static StochasticPolicy uniform(const LayerShape& shape);
    static StochasticPolicy from(const LayerShape& shape, const DeterministicPolicy& policy);
};

struct Trajectory {
    std::vector<int> states;     // x_0 .. x_H
    std::vector<int> actions;    // a_0 .. a_{H-1}
    std::vector<double> rewards; // empty unless a reward table was supplied
};

/// Exact occupancy d_h over the level-h state-action pairs.
struct StateActionDistribution {
    int level = 0;
    LevelTable weights;

    double total() const;
    bool operator==(const StateActionDistribution&) const = default;
};

/// One element of a collected dataset D^t.
struct TransitionTuple {
    int h = 0;
    int x = 0;
    int a = 0;
    double r = 0.0;
    int x_next = 0;

    bool operator==(const TransitionTuple&) const = default;
};

/// Action used at the switching level: a fixed policy or uniform over K_h.
struct ActionSelector {
    const DeterministicPolicy* policy = nullptr;

    static ActionSelector of(const DeterministicPolicy& p) { return ActionSelector{&p}; }
    static ActionSelector uniform() { return ActionSelector{}; }
    bool is_uniform() const noexcept { return policy == nullptr; }
};

/// Number of sampling calls made so far in this process. Used by tests to
/// show that the offline phase never touches the environment.
std::uint64_t sampler_calls() noexcept;

Trajectory sample_trajectory(const LayeredMdp& mdp, const DeterministicPolicy& policy, Rng& rng,
                             const RewardTable* reward = nullptr);
Trajectory sample_trajectory(const LayeredMdp& mdp, const StochasticPolicy& policy, Rng& rng,
                             const RewardTable* reward = nullptr);

/// a_{0:h-1} from `roll_in`, a_h from `at_h`, and one transition at level h.
TransitionTuple sample_switched(const LayeredMdp& mdp, const DeterministicPolicy& roll_in, int h,
                                ActionSelector at_h, Rng& rng, const RewardTable* reward = nullptr);

/// Distribution of x_h when actions follow `policy`; valid for h in [0, H].
std::vector<double> state_marginal(const LayeredMdp& mdp, const DeterministicPolicy& policy, int h);
std::vector<double> state_marginal(const LayeredMdp& mdp, const StochasticPolicy& policy, int h);

StateActionDistribution occupancy(const LayeredMdp& mdp, const DeterministicPolicy& policy, int h);
StateActionDistribution occupancy(const LayeredMdp& mdp, const StochasticPolicy& policy, int h);

/// Roll in with `roll_in` to level h, then act with `at_h` at level h.
StateActionDistribution switched_occupancy(const LayeredMdp& mdp, const DeterministicPolicy& roll_in,
                                           int h, ActionSelector at_h);

double policy_value(const LayeredMdp& mdp, const DeterministicPolicy& policy, const RewardTable& reward);
double policy_value(const LayeredMdp& mdp, const StochasticPolicy& policy, const RewardTable& reward);

struct OptimalSolution {
    std::vector<LevelTable> q;  // Q*_{R,h} for h = 0..H-1
    double value = 0.0;         // v*_R
};

OptimalSolution optimal_q(const LayeredMdp& mdp, const RewardTable& reward);

/// max_a table(x, a) for each state of level h. Level H (terminal) yields zeros.
std::vector<double> state_values(const LayerShape& shape, int h, std::span<const double> table);

/// (T^R_h next)(x,a) = R_h(x,a) + sum_x' P_h(x'|x,a) max_a' next(x',a').
/// `reward == nullptr` selects the zero-reward operator. For h = H-1 the
/// `next` table is ignored (f_H = 0).
LevelTable bellman_backup(const LayeredMdp& mdp, const RewardTable* reward,
                          std::span<const double> next, int h);

}  // namespace rfolive
