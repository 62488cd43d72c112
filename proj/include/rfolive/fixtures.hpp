#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfolive/funclass.hpp"
#include "rfolive/mdp.hpp"
#include "rfolive/olive.hpp"
#include "rfolive/rfolive.hpp"
#include "rfolive/rng.hpp"

namespace rfolive {

/// An MDP with its value class and reward class.
struct Fixture {
    std::string name;
    LayeredMdp mdp;
    FunctionClass f;
    std::vector<RewardTable> rewards;
    std::vector<std::string> reward_names;
};

/// Two-level MDP x0 -(left)-> xA, x0 -(right)-> xB, then one NULL action.
/// Pair order in flat 4-vectors: (x0,left), (x0,right), (xA,NULL), (xB,NULL).
LayeredMdp two_branch_mdp();

/// Counterexample for reward-free OLIVE: F_0 = {0, f_R1, f_R2, f_bad},
/// F_1 = {0, f_bad}. Realizable but not complete.
Fixture rfolive_counterexample();

/// Counterexample for JointOlive: F_1 = {0} and f_bad = (0.2, 0.3, 0, 0).
Fixture jointolive_counterexample();

/// Builds a RewardTable or a ValueFunction on two_branch_mdp from a flat 4-vector.
RewardTable two_branch_reward(const std::vector<double>& flat);
ValueFunction two_branch_function(const std::vector<double>& flat);

struct JointOliveResult {
    OliveTrace trace;
    std::vector<std::string> selected;  // (f, R) labels picked per iteration
    ConstraintSet constraints;          // retained roll-outs plus elimination constraints
    std::vector<RewardOutcome> outcomes;
};

/// OLIVE over the joint class {(f, R)}: optimism over V_{f+R}(x0), the
/// termination test under the chosen R, elimination of pairs by their own
/// reward. Every on-policy roll-out used for the termination test is kept as
/// a constraint at every level. Offline elimination then runs per reward as in
/// offline_phase. Exact mode only.
JointOliveResult run_jointolive(const LayeredMdp& mdp, const FunctionClass& f, std::span<const RewardTable> rewards,
                                const OliveConfig& config, const OfflineOptions& offline = {});

// ---- tree hardness family ----

struct TreeOptions {
    bool perturbed = false;  // 1/2 +- eps transitions into x+/x- and 2-d features
    double eps = 0.1;
    int cap = 10;
};

struct HardnessInstance {
    std::size_t index = 0;  // pair (x*, a*) = (index / 2, index % 2) at level H-2
    LayeredMdp mdp;
    RewardTable reward;     // R_{H-1}(x+) = 1
    LinearFeatureMap feature;
    int x_star = 0;
    int a_star = 0;
};

inline constexpr int kTreePlusState = 0;   // x+ at level H-1
inline constexpr int kTreeMinusState = 1;  // x-

struct HardnessFamily {
    int horizon = 0;
    TreeOptions options;
    /// One-hot candidate features phi_h^i for h <= H-2: feature_class[h][i][pair].
    std::vector<std::vector<LevelTable>> feature_class;

    std::size_t size() const { return std::size_t{1} << (horizon - 1); }
    /// prod_h |Phi_h|.
    std::uint64_t feature_class_size() const;
    HardnessInstance instance(std::size_t i) const;
    std::vector<HardnessInstance> instances() const;
};

/// Complete binary tree over levels 0..H-2, x+ and x- at level H-1.
HardnessFamily tree_hardness_family(int horizon, const TreeOptions& options = {});

/// Episodes of the uniform policy until x+ is first visited (1-based).
std::size_t uniform_episodes_to_plus(const HardnessInstance& inst, Rng& rng, std::size_t max_episodes = 1u << 24);

// ---- contextual bandit ----

/// Root (one action) -> N uniform contexts with actions a1, a2. The reward
/// pays 0.5 for a2 in every context. Members are stored as Q - R: f* is zero
/// at level 1 and f_i puts 1 on (i, a1); level 0 is the backup of f + R.
Fixture contextual_bandit_instance(int n);

// ---- linear / low-rank ----

struct LowRankCertificate {
    int dim = 0;
    std::vector<std::vector<std::vector<double>>> mu;  // mu[h][x'][i]
    double max_residual = 0.0;                          // max |P - <phi, mu>|
    double max_phi_norm = 0.0;
    double max_mu_norm = 0.0;                           // max over f' in [-1,1] of ||sum f' mu||
    double mu_bound = 0.0;                              // sqrt(d)
    bool pass = false;
};

struct TabularLinear {
    LinearFeatureMap features;
    LowRankCertificate certificate;
};

/// One-hot phi over the level-h pairs, padded to d = max_h |X_h| K_h, with
/// mu_h(x') the transition column.
TabularLinear tabular_as_linear_mdp(const LayeredMdp& mdp);

struct ClosedInstanceSizes {
    int states = 3;
    int actions = 2;
    int horizon = 3;
    int rewards = 3;
    int budget = 200;  // generation attempts
};

/// Random MDP with dyadic transitions and rewards, and the smallest product
/// class closed under the zero-reward backup of F, F + R and F - F. Accepted
/// only when check_realizability and check_completeness both pass.
Fixture random_closed_instance(Rng& rng, const ClosedInstanceSizes& sizes = {});

}  // namespace rfolive
