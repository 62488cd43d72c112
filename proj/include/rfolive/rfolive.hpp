#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfolive/funclass.hpp"
#include "rfolive/mdp.hpp"
#include "rfolive/olive.hpp"

namespace rfolive {

/// Everything the offline phase is allowed to see: the saved constraints
/// and, for the V-type variant, the online cover whose greedy policies form
/// the witness set Pi_on.
struct ConstraintSet {
    Variant variant = Variant::q;
    ExecMode mode = ExecMode::exact;
    LayerShape shape;
    int start = 0;
    double eps_elim = 0.0;
    std::vector<ConstraintRecord> records;
    std::optional<FunctionClass> z_on;

    /// |Pi_on| (one greedy policy per member of Z_on); 0 for Q-type.
    std::size_t policy_count() const;
    /// Pi_on as explicit policies. Only for small covers.
    std::vector<DeterministicPolicy> on_policies() const;
    /// Distinct level-h greedy rows over Pi_on; the only part of each
    /// witness policy the level-h estimator reads.
    std::vector<std::vector<int>> level_witnesses(int h) const;
};

struct OnlineResult {
    ConstraintSet constraints;
    OliveResult run;
};

/// Zero-reward elimination on F - F (Q-type) or on its eps_elim/64 cover (V-type).
OnlineResult online_phase(const LayeredMdp& mdp, const FunctionClass& f, const OliveConfig& config, Rng& rng);

struct OfflineOptions {
    std::optional<double> tau_off;  // default eps_elim / 2
    int optimism = -1;              // position among tied maximizers; -1 = lowest index
    bool parallel = true;
};

struct OfflineResult {
    std::size_t selected = 0;  // id in F + R
    std::string label;
    ValueFunction g;
    DeterministicPolicy policy;
    double v_ghat_x0 = 0.0;
    double tau_off = 0.0;
    std::vector<std::size_t> survivors;
};

/// Builds F + R and keeps members whose error on every stored constraint is
/// at most tau_off in absolute value. Reads nothing but its arguments.
OfflineResult offline_phase(const ConstraintSet& constraints, const FunctionClass& f, const RewardTable& reward,
                            const OfflineOptions& options = {});

struct RewardFreeOptions {
    std::optional<int> d;           // dimension estimate; default max_h |X_h| K_h
    double c = 1.0;
    std::optional<double> tau_off;
    std::optional<int> t_max;
    TieScript script;
    bool parallel = true;
    /// Sampled mode only: caps on n_actv / n_elim (the theory values are huge).
    std::optional<std::size_t> n_actv;
    std::optional<std::size_t> n_elim;
};

struct RewardOutcome {
    DeterministicPolicy policy;
    std::string selected;
    double v_ghat_x0 = 0.0;
    std::size_t survivors = 0;
    double optimal_value = 0.0;
    double policy_value = 0.0;
    double suboptimality = 0.0;
    bool optimal_survived = false;  // Q*_R is among the survivors
};

struct RewardFreeResult {
    OliveConfig config;
    int d = 0;
    double log_nf = 0.0;
    double log_nr = 0.0;
    OnlineResult online;
    std::vector<RewardOutcome> outcomes;
};

struct RewardFreePlan {
    OliveConfig config;
    int d = 0;
    double log_nf = 0.0;
    double log_nr = 0.0;
};

/// Thresholds, sample sizes and iteration cap for a run, with log N_F and
/// log N_R taken from covers at eps_elim / 64.
RewardFreePlan plan_reward_free(const LayeredMdp& mdp, const FunctionClass& f, std::span<const RewardTable> rewards,
                                double eps, double delta, Variant variant, ExecMode mode,
                                const RewardFreeOptions& options = {});

/// Tabular default for the dimension estimate: max_h |X_h| K_h.
int tabular_dimension(const LayerShape& shape);

RewardFreeResult run_reward_free(const LayeredMdp& mdp, const FunctionClass& f, std::span<const RewardTable> rewards,
                                 double eps, double delta, Variant variant, ExecMode mode, Rng& rng,
                                 const RewardFreeOptions& options = {});

/// Offline evaluation of a finished online phase against one reward, with the
/// suboptimality computed from the true MDP.
RewardOutcome evaluate_reward(const LayeredMdp& mdp, const ConstraintSet& constraints, const FunctionClass& f,
                              const RewardTable& reward, const OfflineOptions& options);

}  // namespace rfolive
