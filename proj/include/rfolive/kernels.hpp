#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rfolive/mdp.hpp"

namespace rfolive {

/// One (x, a, x') atom of a level-h constraint with its probability mass and
/// the reward attached to (x, a).
struct SupportPoint {
    int x = 0;
    int a = 0;
    int x_next = 0;
    double weight = 0.0;
    double reward = 0.0;
};

/// A constraint reduced to a weighted support, ready for batch evaluation.
///
/// Ungated constraints evaluate sum w (f_h(x,a) - r - V(x')). Gated ones
/// multiply each atom by `gate_scale * 1[a = witness(x)]`: scale K for
/// uniform-action datasets, scale 1 for exact supports that keep all
/// actions at full state mass.
struct CompiledConstraint {
    int level = 0;
    int actions = 1;  // K_h
    bool gated = false;
    double gate_scale = 1.0;
    std::vector<SupportPoint> support;
};

/// Raw views of one candidate: its level-h table, V at level h+1, and (for
/// gated constraints) its greedy action per level-h state.
struct CandidateView {
    const double* table = nullptr;
    const double* next_values = nullptr;
    const int* witness = nullptr;
};

/// Exact support of a Q-type constraint: roll in with `roll_in`, act with `at_h`.
CompiledConstraint compile_exact(const LayeredMdp& mdp, const DeterministicPolicy& roll_in, int h,
                                 ActionSelector at_h, const RewardTable* reward);

/// Exact support of a V-type constraint: every action at full roll-in mass, gated.
CompiledConstraint compile_exact_gated(const LayeredMdp& mdp, const DeterministicPolicy& roll_in, int h,
                                       const RewardTable* reward);

/// Empirical support of a dataset (all tuples at one level). With `reward`
/// the reward is looked up, otherwise the stored tuple reward is used.
/// `gated` selects the importance-weighted estimator with scale K_h.
CompiledConstraint compile_dataset(const LayerShape& shape, std::span<const TransitionTuple> data,
                                   const RewardTable* reward, bool gated);

namespace kernels {

namespace serial {
/// out[i] = error of candidate i under the constraint. Reference implementation.
void batch_errors(const CompiledConstraint& c, std::span<const CandidateView> candidates, std::span<double> out);
}  // namespace serial

namespace omp {
/// Same result as serial::batch_errors, candidates split across threads.
void batch_errors(const CompiledConstraint& c, std::span<const CandidateView> candidates, std::span<double> out);
}  // namespace omp

/// Error of one candidate; shared by both implementations.
double constraint_error(const CompiledConstraint& c, const CandidateView& v);

}  // namespace kernels

}  // namespace rfolive
