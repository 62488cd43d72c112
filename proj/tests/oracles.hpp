#pragma once
// Brute-force references and random generators for tests. Everything here
// walks explicit trajectories or sequences instead of running the library's
// dynamic programs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "rfolive/dimensions.hpp"
#include "rfolive/funclass.hpp"
#include "rfolive/mdp.hpp"
#include "rfolive/rng.hpp"

namespace oracle {

using namespace rfolive;

// Action distribution at (h, x): pairs (a, prob).
using ActionDist = std::function<std::vector<std::pair<int, double>>(int h, int x)>;

inline ActionDist follow(const DeterministicPolicy& pi) {
    return [&pi](int h, int x) { return std::vector<std::pair<int, double>>{{pi(h, x), 1.0}}; };
}

inline ActionDist uniform(const LayerShape& shape) {
    return [&shape](int h, int) {
        std::vector<std::pair<int, double>> out;
        for (int a = 0; a < shape.actions[h]; ++a) out.emplace_back(a, 1.0 / shape.actions[h]);
        return out;
    };
}

/// Roll in with `roll_in` below level h, act with `at_h` at h (and beyond, if
/// depth allows). Calls visit(states, actions, prob) for every path of
/// length `depth` actions with positive probability.
inline void enumerate_paths(const LayeredMdp& mdp, const ActionDist& roll_in, int h, const ActionDist& at_h,
                            int depth,
                            const std::function<void(const std::vector<int>&, const std::vector<int>&, double)>& visit) {
    std::vector<int> xs{mdp.start()};
    std::vector<int> as;
    std::function<void(double)> rec = [&](double p) {
        const int t = static_cast<int>(as.size());
        if (t == depth) {
            visit(xs, as, p);
            return;
        }
        const auto acts = t < h ? roll_in(t, xs.back()) : at_h(t, xs.back());
        for (auto [a, pa] : acts) {
            if (pa == 0.0) continue;
            as.push_back(a);
            const auto next = mdp.next_distribution(t, xs.back(), a);
            for (int y = 0; y < static_cast<int>(next.size()); ++y) {
                if (next[y] == 0.0) continue;
                xs.push_back(y);
                rec(p * pa * next[y]);
                xs.pop_back();
            }
            as.pop_back();
        }
    };
    rec(1.0);
}

inline std::vector<double> occupancy(const LayeredMdp& mdp, const ActionDist& roll_in, int h, const ActionDist& at_h) {
    std::vector<double> w(mdp.num_pairs(h), 0.0);
    enumerate_paths(mdp, roll_in, h, at_h, h + 1, [&](const auto& xs, const auto& as, double p) {
        w[mdp.shape().pair_index(h, xs[h], as[h])] += p;
    });
    return w;
}

inline std::vector<double> state_marginal(const LayeredMdp& mdp, const ActionDist& pi, int h) {
    std::vector<double> w(mdp.num_states(h), 0.0);
    enumerate_paths(mdp, pi, mdp.horizon(), pi, h, [&](const auto& xs, const auto&, double p) { w[xs[h]] += p; });
    return w;
}

inline double policy_value(const LayeredMdp& mdp, const ActionDist& pi, const RewardTable& r) {
    double v = 0.0;
    const int H = mdp.horizon();
    enumerate_paths(mdp, pi, H, pi, H, [&](const auto& xs, const auto& as, double p) {
        double ret = 0.0;
        for (int t = 0; t < H; ++t) ret += r(t, xs[t], as[t]);
        v += p * ret;
    });
    return v;
}

inline double max_row(const ValueFunction& f, const LayerShape& shape, int h, int x) {
    if (h >= shape.horizon()) return 0.0;
    double m = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < shape.actions[h]; ++a) m = std::max(m, f.levels[h][shape.pair_index(h, x, a)]);
    return m;
}

/// E[f_h(x_h, a_h) - R_h(x_h, a_h) - max_a f_{h+1}(x_{h+1}, a)] by path enumeration.
inline double avg_bellman_error(const LayeredMdp& mdp, const ValueFunction& f, const RewardTable* r,
                                const ActionDist& roll_in, int h, const ActionDist& at_h) {
    const auto& shape = mdp.shape();
    double e = 0.0;
    enumerate_paths(mdp, roll_in, h, at_h, h + 1, [&](const auto& xs, const auto& as, double p) {
        const double rw = r ? (*r)(h, xs[h], as[h]) : 0.0;
        e += p * (f.levels[h][shape.pair_index(h, xs[h], as[h])] - rw - max_row(f, shape, h + 1, xs[h + 1]));
    });
    return e;
}

/// Greedy action source of f with lowest-index ties.
inline ActionDist greedy_of(const ValueFunction& f, const LayerShape& shape) {
    return [&f, &shape](int h, int x) {
        int best = 0;
        for (int a = 1; a < shape.actions[h]; ++a)
            if (f.levels[h][shape.pair_index(h, x, a)] > f.levels[h][shape.pair_index(h, x, best)] + kTieTolerance)
                best = a;
        return std::vector<std::pair<int, double>>{{best, 1.0}};
    };
}

/// v*_R by expectimax over the trajectory tree (no tables shared between branches).
inline double optimal_value(const LayeredMdp& mdp, const RewardTable& r) {
    std::function<double(int, int)> rec = [&](int h, int x) -> double {
        if (h == mdp.horizon()) return 0.0;
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.num_actions(h); ++a) {
            double q = r(h, x, a);
            const auto next = mdp.next_distribution(h, x, a);
            for (int y = 0; y < static_cast<int>(next.size()); ++y)
                if (next[y] > 0.0) q += next[y] * rec(h + 1, y);
            best = std::max(best, q);
        }
        return best;
    };
    return rec(0, mdp.start());
}

// ---- generators ----

struct MdpSizes {
    int max_states = 6;
    int max_actions = 3;
    int max_horizon = 4;
};

inline std::vector<double> random_simplex(Rng& rng, int n, bool sparse) {
    std::vector<double> w(n);
    double s = 0.0;
    for (double& v : w) {
        v = sparse && rng.uniform() < 0.3 ? 0.0 : rng.uniform() + 0.01;
        s += v;
    }
    if (s == 0.0) {
        w[rng.below(n)] = 1.0;
        return w;
    }
    for (double& v : w) v /= s;
    return w;
}

inline LayeredMdp random_mdp(Rng& rng, const MdpSizes& sz = {}) {
    const int H = 1 + static_cast<int>(rng.below(sz.max_horizon));
    std::vector<std::vector<std::string>> names(H + 1);
    std::vector<int> actions(H);
    for (int h = 0; h <= H; ++h) {
        const int n = h == 0 ? 1 + static_cast<int>(rng.below(2)) : 1 + static_cast<int>(rng.below(sz.max_states));
        for (int x = 0; x < n; ++x) names[h].push_back("s" + std::to_string(h) + "_" + std::to_string(x));
        if (h < H) actions[h] = 1 + static_cast<int>(rng.below(sz.max_actions));
    }
    std::vector<std::vector<double>> trans(H);
    for (int h = 0; h < H; ++h)
        for (std::size_t x = 0; x < names[h].size(); ++x)
            for (int a = 0; a < actions[h]; ++a) {
                auto row = random_simplex(rng, static_cast<int>(names[h + 1].size()), true);
                trans[h].insert(trans[h].end(), row.begin(), row.end());
            }
    return LayeredMdp(std::move(names), std::move(actions), std::move(trans), "s0_0");
}

inline RewardTable random_reward(Rng& rng, const LayerShape& shape) {
    std::vector<LevelTable> levels(shape.horizon());
    for (int h = 0; h < shape.horizon(); ++h) {
        levels[h].resize(shape.pairs(h));
        for (double& v : levels[h]) v = rng.uniform();
    }
    return RewardTable(shape, std::move(levels));
}

/// Values in [-scale, scale]; with `ties` some entries are copied to force argmax ties.
inline ValueFunction random_function(Rng& rng, const LayerShape& shape, double scale = 1.0, bool ties = false) {
    ValueFunction f;
    for (int h = 0; h < shape.horizon(); ++h) {
        LevelTable t(shape.pairs(h));
        for (double& v : t) v = scale * (2.0 * rng.uniform() - 1.0);
        if (ties && t.size() > 1 && rng.uniform() < 0.5) t[1] = t[0];
        f.levels.push_back(std::move(t));
    }
    return f;
}

inline DeterministicPolicy random_policy(Rng& rng, const LayerShape& shape) {
    std::vector<std::vector<int>> acts(shape.horizon());
    for (int h = 0; h < shape.horizon(); ++h)
        for (int x = 0; x < shape.states[h]; ++x) acts[h].push_back(static_cast<int>(rng.below(shape.actions[h])));
    return DeterministicPolicy(shape, std::move(acts));
}

/// Dataset whose empirical distribution equals the exact law of
/// (x_h, a_h, x_{h+1}) under roll-in `pi` and uniform (or roll-in) action at h.
/// Each atom is replicated p * M times for the smallest M in a fixed
/// candidate list that makes every count integral; empty if none does.
inline std::vector<TransitionTuple> exhaustive_dataset(const LayeredMdp& mdp, const DeterministicPolicy& pi, int h,
                                                       bool uniform_action, const RewardTable* r = nullptr) {
    struct Atom {
        int x, a, y;
        double p;
    };
    std::vector<Atom> atoms;
    const auto at_h = uniform_action ? uniform(mdp.shape()) : follow(pi);
    enumerate_paths(mdp, follow(pi), h, at_h, h + 1, [&](const auto& xs, const auto& as, double p) {
        atoms.push_back({xs[h], as[h], xs[h + 1], p});
    });
    for (long c : {1L, 3L, 5L, 7L, 15L, 21L, 35L, 105L})
        for (long m = c; m <= (1L << 14) * c; m *= 2) {
            bool ok = true;
            for (const auto& at : atoms) {
                const double k = at.p * static_cast<double>(m);
                if (std::abs(k - std::round(k)) > 1e-9) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            std::vector<TransitionTuple> data;
            for (const auto& at : atoms) {
                const long k = std::lround(at.p * static_cast<double>(m));
                for (long i = 0; i < k; ++i) data.push_back({h, at.x, at.a, r ? (*r)(h, at.x, at.a) : 0.0, at.y});
            }
            return data;
        }
    return {};
}

// ---- DE dimension by sequence enumeration ----

inline bool independent_at(const std::vector<double>& nu, const std::vector<std::vector<double>>& preds,
                           const ScalarFunctionSet& f, double eps_prime) {
    for (const auto& g : f.functions) {
        double sq = 0.0;
        for (const auto& mu : preds) {
            double e = 0.0;
            for (std::size_t i = 0; i < mu.size(); ++i) e += mu[i] * g[i];
            sq += e * e;
        }
        double e = 0.0;
        for (std::size_t i = 0; i < nu.size(); ++i) e += nu[i] * g[i];
        if (std::sqrt(sq) <= eps_prime && std::abs(e) > eps_prime) return true;
    }
    return false;
}

/// Longest sequence of distinct family members that is eps'-independent for
/// some eps' >= eps. Candidate eps' values: eps and every predecessor norm
/// along the sequence (the only places where independence can switch on).
inline int de_dimension(const ScalarFunctionSet& f, const DistributionFamily& fam, double eps) {
    const int n = static_cast<int>(fam.weights.size());
    int best = 0;
    std::vector<int> seq;
    std::vector<bool> used(n, false);
    auto valid = [&]() {
        std::vector<double> cands{eps};
        std::vector<std::vector<double>> preds;
        for (int c : seq) {
            for (const auto& g : f.functions) {
                double sq = 0.0;
                for (const auto& mu : preds) {
                    double e = 0.0;
                    for (std::size_t i = 0; i < mu.size(); ++i) e += mu[i] * g[i];
                    sq += e * e;
                }
                if (std::sqrt(sq) >= eps) cands.push_back(std::sqrt(sq));
            }
            preds.push_back(fam.weights[c]);
        }
        for (double ep : cands) {
            std::vector<std::vector<double>> pr;
            bool ok = true;
            for (int c : seq) {
                if (!independent_at(fam.weights[c], pr, f, ep)) {
                    ok = false;
                    break;
                }
                pr.push_back(fam.weights[c]);
            }
            if (ok) return true;
        }
        return false;
    };
    std::function<void()> rec = [&]() {
        for (int c = 0; c < n; ++c) {
            if (used[c]) continue;
            seq.push_back(c);
            used[c] = true;
            if (valid()) {
                best = std::max(best, static_cast<int>(seq.size()));
                rec();
            }
            used[c] = false;
            seq.pop_back();
        }
    };
    rec();
    return best;
}

}  // namespace oracle
