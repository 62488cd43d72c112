#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rfolive/errors.hpp"
#include "rfolive/funclass.hpp"
#include "rfolive/kernels.hpp"
#include "rfolive/mdp.hpp"

namespace rfolive {

enum class ExecMode { exact, sampled };
enum class Variant { q, v };

/// Per-iteration overrides for the two free choices of the loop. Entry t
/// applies to iteration t; -1 (or a missing entry) keeps the default.
struct TieScript {
    std::vector<int> optimism;   // position among tied maximizers of V_f(x_0)
    std::vector<int> deviation;  // level to collect at (must exceed eps_actv)

    int optimism_at(int t) const;
    int deviation_at(int t) const;
};

struct OliveConfig {
    double eps_actv = 0.0;
    double eps_elim = 0.0;
    std::size_t n_actv = 1;
    std::size_t n_elim = 1;
    int t_max = 100;
    ExecMode mode = ExecMode::exact;
    Variant variant = Variant::q;
    TieScript script;
    double c = 1.0;
    double iota = 0.0;    // log factor used by the schedule, kept for reporting
    bool parallel = true; // OpenMP kernels instead of the serial reference

    void validate() const;
};

/// Which action the level-h step of a constraint takes.
enum class ActionTag { roll_in, uniform };

/// One elimination record (h^t, pi^t, D^t). Exact mode stores the support of
/// the level-h roll-in distribution times one transition (rewards left at 0);
/// sampled mode stores the dataset.
struct ConstraintRecord {
    int t = 0;
    int level = 0;
    DeterministicPolicy roll_in;
    ActionTag action = ActionTag::roll_in;
    ExecMode mode = ExecMode::exact;
    std::vector<SupportPoint> support;
    std::vector<TransitionTuple> data;

    bool operator==(const ConstraintRecord& o) const;
};

/// Reduces a record to a kernel-ready constraint under `reward` (nullptr: the
/// exact support keeps reward 0, datasets keep their stored rewards).
/// `witness_gated` is implied by the uniform action tag.
CompiledConstraint compile_record(const LayerShape& shape, const ConstraintRecord& record, const RewardTable* reward);

struct OliveIteration {
    int t = 0;
    std::size_t chosen = 0;
    std::string label;
    double v_opt = 0.0;
    std::vector<double> errors;  // per-level on-policy error of the chosen function
    int level = -1;              // deviation level, -1 when terminated
    std::size_t survivors_before = 0;
    std::size_t survivors_after = 0;
    bool terminated = false;
};

struct OliveTrace {
    std::vector<OliveIteration> iterations;

    /// t,V_opt,h,survivors_before,survivors_after,terminated
    std::string to_csv() const;
};

class CapExceeded : public Error {
public:
    CapExceeded(const std::string& what, OliveTrace trace) : Error(what), trace_(std::move(trace)) {}
    const OliveTrace& trace() const noexcept { return trace_; }

private:
    OliveTrace trace_;
};

struct OliveResult {
    bool terminated = false;
    std::size_t selected = 0;  // f^T
    DeterministicPolicy policy;
    std::vector<ConstraintRecord> constraints;
    std::vector<std::size_t> survivors;  // final version space (ids into the class)
    OliveTrace trace;
};

/// The elimination loop over a finite class. `reward == nullptr` runs the
/// zero-reward specialization; for the reward-aware baseline pass F + R as
/// the class together with R.
OliveResult run_olive(const LayeredMdp& mdp, const FunctionClass& cls, const RewardTable* reward,
                      const OliveConfig& config, Rng& rng);

/// Q-type thresholds and sample sizes; iota = c log(H d / (delta eps)).
OliveConfig schedule_q(double eps, double delta, int horizon, int d, double log_nf, double log_nr, double c = 1.0);

/// V-type thresholds and sample sizes; iota = c log(H d K / (delta eps)).
OliveConfig schedule_v(double eps, double delta, int horizon, int d, int actions, double log_nf, double log_nr,
                       double c = 1.0);

/// Candidate views of `ids` at level h. `greedy` rows point into the class.
std::vector<CandidateView> candidate_views(const FunctionClass& cls, std::span<const std::size_t> ids, int h);

/// Errors of `ids` under one compiled constraint.
std::vector<double> evaluate_candidates(const FunctionClass& cls, std::span<const std::size_t> ids,
                                        const CompiledConstraint& c, bool parallel);

}  // namespace rfolive
