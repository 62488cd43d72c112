#pragma once

#include <span>
#include <vector>

#include "rfolive/funclass.hpp"
#include "rfolive/mdp.hpp"

namespace rfolive {

/// Which action is taken at the level under evaluation.
enum class ActionSource {
    roll_in,  // Q-type: keep following the roll-in policy
    greedy,   // V-type: greedy action of the evaluated function
    uniform,  // uniform over K_h
    fixed,    // an explicitly supplied policy
};

/// E^R(f, pi, pi', h): roll in with `roll_in` to level h, act with the
/// selected source, and average f_h - R_h - V_f(x_{h+1}).
struct BellmanErrorQuery {
    const ValueFunction* f = nullptr;
    const RewardTable* reward = nullptr;  // nullptr means zero reward
    const DeterministicPolicy* roll_in = nullptr;
    ActionSource source = ActionSource::roll_in;
    const DeterministicPolicy* fixed = nullptr;
    int h = 0;
    TieBreak tie{};
};

double exact_avg_bellman_error(const LayeredMdp& mdp, const BellmanErrorQuery& q);

/// Q-type shortcut: pi' = pi.
double exact_q_error(const LayeredMdp& mdp, const ValueFunction& f, const RewardTable* reward,
                     const DeterministicPolicy& roll_in, int h);
/// V-type shortcut: pi' = pi_f.
double exact_v_error(const LayeredMdp& mdp, const ValueFunction& f, const RewardTable* reward,
                     const DeterministicPolicy& roll_in, int h, const TieBreak& tie = {});

/// V_f at level h (zeros at the terminal level).
std::vector<double> level_values(const LayerShape& shape, const ValueFunction& f, int h);

/// (1/n) sum [f_h(x_h, a_h) - V_f(x_{h+1})] over trajectories.
double est_onpolicy(const LayerShape& shape, std::span<const Trajectory> trajectories, const ValueFunction& f,
                    int h);

/// (1/n) sum [f_h(x, a) - V_f(x')] over same-level tuples.
double est_q(const LayerShape& shape, std::span<const TransitionTuple> data, const ValueFunction& f);

/// (1/n) sum [g_h(x, a) - R_h(x, a) - V_g(x')]. With `reward == nullptr`
/// the reward stored in each tuple is used.
double est_q_reward(const LayerShape& shape, std::span<const TransitionTuple> data, const ValueFunction& g,
                    const RewardTable* reward);

/// (1/n) sum K 1[a = witness(x)] [g_h - R_h - V_g(x')] for uniform-action data.
double est_v_is(const LayerShape& shape, std::span<const TransitionTuple> data, const ValueFunction& g,
                const RewardTable* reward, const DeterministicPolicy& witness);

/// Zero-reward function whose level-h error equals +/- the reward-dependent
/// error of g = f + R at level h: backups below h, +/-(f_h - T^0_h g_{h+1})
/// at h, zero above.
ValueFunction surrogate_zero_reward(const LayeredMdp& mdp, const ValueFunction& g, const RewardTable& reward,
                                    int h, bool negate = false);

struct LossDecomposition {
    std::vector<double> errors;  // E^R_Q(f, pi_f, h)
    double start_value = 0.0;    // V_f(x_0)
    double policy_value = 0.0;   // v^{pi_f}_R
    double residual = 0.0;       // V_f(x_0) - v^{pi_f}_R - sum errors
};

LossDecomposition policy_loss_decomposition(const LayeredMdp& mdp, const RewardTable& reward,
                                            const ValueFunction& f, const TieBreak& tie = {});

}  // namespace rfolive
