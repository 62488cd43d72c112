#include "rfolive/kernels.hpp"

#include <map>
#include <tuple>

#include "rfolive/errors.hpp"

namespace rfolive {

CompiledConstraint compile_exact(const LayeredMdp& mdp, const DeterministicPolicy& roll_in, int h,
                                 ActionSelector at_h, const RewardTable* reward) {
    CompiledConstraint c;
    c.level = h;
    c.actions = mdp.num_actions(h);
    const auto d = switched_occupancy(mdp, roll_in, h, at_h);
    for (int x = 0; x < mdp.num_states(h); ++x)
        for (int a = 0; a < mdp.num_actions(h); ++a) {
            const double w = d.weights[mdp.shape().pair_index(h, x, a)];
            if (w == 0.0) continue;
            auto p = mdp.next_distribution(h, x, a);
            const double r = reward ? (*reward)(h, x, a) : 0.0;
            for (std::size_t y = 0; y < p.size(); ++y)
                if (p[y] > 0.0) c.support.push_back({x, a, static_cast<int>(y), w * p[y], r});
        }
    return c;
}

CompiledConstraint compile_exact_gated(const LayeredMdp& mdp, const DeterministicPolicy& roll_in, int h,
                                       const RewardTable* reward) {
    CompiledConstraint c;
    c.level = h;
    c.actions = mdp.num_actions(h);
    c.gated = true;
    c.gate_scale = 1.0;
    const auto mu = state_marginal(mdp, roll_in, h);
    for (int x = 0; x < mdp.num_states(h); ++x) {
        if (mu[x] == 0.0) continue;
        for (int a = 0; a < mdp.num_actions(h); ++a) {
            auto p = mdp.next_distribution(h, x, a);
            const double r = reward ? (*reward)(h, x, a) : 0.0;
            for (std::size_t y = 0; y < p.size(); ++y)
                if (p[y] > 0.0) c.support.push_back({x, a, static_cast<int>(y), mu[x] * p[y], r});
        }
    }
    return c;
}

CompiledConstraint compile_dataset(const LayerShape& shape, std::span<const TransitionTuple> data,
                                   const RewardTable* reward, bool gated) {
    if (data.empty()) throw InvalidInput("empty dataset");
    CompiledConstraint c;
    c.level = data.front().h;
    c.actions = shape.actions.at(c.level);
    c.gated = gated;
    c.gate_scale = gated ? static_cast<double>(c.actions) : 1.0;
    // Tuples with the same (x, a, x', r) collapse into one atom; std::map keeps
    // the atom order independent of arrival order.
    std::map<std::tuple<int, int, int, double>, std::size_t> counts;
    for (const auto& t : data) {
        if (t.h != c.level) throw InvalidInput("dataset mixes levels");
        const double r = reward ? (*reward)(t.h, t.x, t.a) : t.r;
        ++counts[{t.x, t.a, t.x_next, r}];
    }
    const double n = static_cast<double>(data.size());
    for (const auto& [key, count] : counts) {
        const auto& [x, a, y, r] = key;
        c.support.push_back({x, a, y, static_cast<double>(count) / n, r});
    }
    return c;
}

namespace kernels {

double constraint_error(const CompiledConstraint& c, const CandidateView& v) {
    const int K = c.actions;
    double total = 0.0;
    if (c.gated) {
        for (const auto& s : c.support) {
            if (v.witness[s.x] != s.a) continue;
            total += s.weight * c.gate_scale * (v.table[s.x * K + s.a] - s.reward - v.next_values[s.x_next]);
        }
    } else {
        for (const auto& s : c.support)
            total += s.weight * (v.table[s.x * K + s.a] - s.reward - v.next_values[s.x_next]);
    }
    return total;
}

namespace serial {

void batch_errors(const CompiledConstraint& c, std::span<const CandidateView> candidates, std::span<double> out) {
    for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = constraint_error(c, candidates[i]);
}

}  // namespace serial

namespace omp {

void batch_errors(const CompiledConstraint& c, std::span<const CandidateView> candidates, std::span<double> out) {
    const long n = static_cast<long>(candidates.size());
#pragma omp parallel for schedule(static) if (n > 256)
    for (long i = 0; i < n; ++i) out[i] = constraint_error(c, candidates[i]);
}

}  // namespace omp

}  // namespace kernels

}  // namespace rfolive
