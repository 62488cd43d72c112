#include "rfolive/dimensions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include <Eigen/Dense>

#include "rfolive/bellman.hpp"
#include "rfolive/errors.hpp"

namespace rfolive {

double expectation(std::span<const double> nu, std::span<const double> f) {
    double s = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) s += nu[i] * f[i];
    return s;
}

namespace {

double pred_norm(std::span<const std::vector<double>> preds, std::span<const double> f) {
    double sq = 0.0;
    for (const auto& mu : preds) {
        double e = expectation(mu, f);
        sq += e * e;
    }
    return std::sqrt(sq);
}

// Sorted, disjoint half-open intervals [lo, hi).
using IntervalSet = std::vector<std::pair<double, double>>;

IntervalSet normalize(IntervalSet s) {
    std::sort(s.begin(), s.end());
    IntervalSet out;
    for (const auto& [lo, hi] : s) {
        if (!(lo < hi)) continue;
        if (!out.empty() && lo <= out.back().second)
            out.back().second = std::max(out.back().second, hi);
        else
            out.emplace_back(lo, hi);
    }
    return out;
}

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
    IntervalSet out;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double lo = std::max(a[i].first, b[j].first);
        double hi = std::min(a[i].second, b[j].second);
        if (lo < hi) out.emplace_back(lo, hi);
        if (a[i].second < b[j].second)
            ++i;
        else
            ++j;
    }
    return out;
}

// eps' values at which `nu` is eps'-independent of `preds`, restricted to eps' >= eps.
IntervalSet feasible(std::span<const double> nu, std::span<const std::vector<double>> preds,
                     const ScalarFunctionSet& f, double eps) {
    IntervalSet s;
    for (const auto& g : f.functions) {
        const double lo = std::max(eps, pred_norm(preds, g));
        const double hi = std::abs(expectation(nu, g));
        if (lo < hi) s.emplace_back(lo, hi);
    }
    return normalize(std::move(s));
}

struct DeSearch {
    const ScalarFunctionSet& f;
    const DistributionFamily& family;
    double eps;
    std::map<std::pair<unsigned, std::size_t>, IntervalSet> memo;
    std::vector<std::size_t> best;

    const IntervalSet& options(unsigned mask, std::size_t c) {
        auto key = std::make_pair(mask, c);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        std::vector<std::vector<double>> preds;
        for (std::size_t i = 0; i < family.weights.size(); ++i)
            if (mask & (1u << i)) preds.push_back(family.weights[i]);
        return memo.emplace(key, feasible(family.weights[c], preds, f, eps)).first->second;
    }

    void dfs(std::vector<std::size_t>& seq, unsigned mask, const IntervalSet& s) {
        if (seq.size() > best.size()) best = seq;
        if (best.size() == family.weights.size()) return;
        for (std::size_t c = 0; c < family.weights.size(); ++c) {
            if (mask & (1u << c)) continue;
            IntervalSet next = intersect(s, options(mask, c));
            if (next.empty()) continue;
            seq.push_back(c);
            dfs(seq, mask | (1u << c), next);
            seq.pop_back();
            if (best.size() == family.weights.size()) return;
        }
    }
};

// Feasible set along a fixed sequence, with predecessors in sequence order
// (the same arithmetic eps_independent uses when the certificate is replayed).
IntervalSet along(const std::vector<std::size_t>& seq, const ScalarFunctionSet& f, const DistributionFamily& family,
                  double eps) {
    IntervalSet s{{eps, std::numeric_limits<double>::infinity()}};
    std::vector<std::vector<double>> preds;
    for (std::size_t c : seq) {
        s = intersect(s, feasible(family.weights[c], preds, f, eps));
        preds.push_back(family.weights[c]);
    }
    return s;
}

}  // namespace

IndependenceResult eps_independent(std::span<const double> nu, std::span<const std::vector<double>> preds,
                                   const ScalarFunctionSet& f, double eps_prime) {
    for (std::size_t k = 0; k < f.functions.size(); ++k) {
        const auto& g = f.functions[k];
        if (pred_norm(preds, g) <= eps_prime && std::abs(expectation(nu, g)) > eps_prime) return {true, k};
    }
    return {false, std::nullopt};
}

DimensionResult de_dimension(const ScalarFunctionSet& f, const DistributionFamily& family, double eps, DeMode mode,
                             std::size_t cap) {
    if (!(eps > 0.0)) throw InvalidInput("eps must be positive");
    const std::size_t n = family.weights.size();
    if (mode == DeMode::exhaustive && n > cap)
        throw UnsupportedRequest("exhaustive search over " + std::to_string(n) + " distributions exceeds the cap of " +
                                 std::to_string(cap));
    if (n > 31) throw UnsupportedRequest("distribution family too large");

    DeSearch search{f, family, eps, {}, {}};
    const IntervalSet all{{eps, std::numeric_limits<double>::infinity()}};
    if (mode == DeMode::exhaustive) {
        std::vector<std::size_t> seq;
        search.dfs(seq, 0u, all);
    } else {
        IntervalSet s = all;
        unsigned mask = 0;
        for (bool grew = true; grew;) {
            grew = false;
            for (std::size_t c = 0; c < n; ++c) {
                if (mask & (1u << c)) continue;
                IntervalSet next = intersect(s, search.options(mask, c));
                if (next.empty()) continue;
                search.best.push_back(c);
                mask |= 1u << c;
                s = std::move(next);
                grew = true;
                break;
            }
        }
    }

    DimensionResult r;
    r.mode = mode;
    r.certificate = search.best;
    r.dimension = static_cast<int>(search.best.size());
    r.eps_prime = eps;
    if (!r.certificate.empty()) {
        IntervalSet s = along(r.certificate, f, family, eps);
        if (s.empty()) throw Error("certificate does not replay; rounding broke the interval search");
        r.eps_prime = s.front().first;
    }
    return r;
}

ScalarFunctionSet bellman_residual_class(const LayeredMdp& mdp, std::span<const ValueFunction> functions,
                                         const RewardTable* reward, int h, Variant type) {
    ScalarFunctionSet out;
    const auto& shape = mdp.shape();
    const int K = mdp.num_actions(h);
    for (std::size_t j = 0; j < functions.size(); ++j) {
        const auto& f = functions[j];
        LevelTable next = h + 1 < mdp.horizon() ? f.levels.at(h + 1) : LevelTable{};
        LevelTable backed = bellman_backup(mdp, reward, next, h);
        LevelTable res(backed.size());
        for (std::size_t i = 0; i < res.size(); ++i) res[i] = f.levels[h][i] - backed[i];
        if (type == Variant::q) {
            out.functions.push_back(std::move(res));
        } else {
            std::vector<double> v(mdp.num_states(h));
            for (int x = 0; x < mdp.num_states(h); ++x) {
                auto row = std::span<const double>(f.levels[h]).subspan(static_cast<std::size_t>(x) * K, K);
                v[x] = res[shape.pair_index(h, x, greedy_action(row, h, x))];
            }
            out.functions.push_back(std::move(v));
        }
        out.labels.push_back("f" + std::to_string(j));
    }
    return out;
}

DistributionFamily rollin_distributions(const LayeredMdp& mdp, std::span<const ValueFunction> functions, int h,
                                        Variant type) {
    DistributionFamily fam;
    for (std::size_t j = 0; j < functions.size(); ++j) {
        const auto pi = greedy_policy(mdp.shape(), functions[j]);
        std::vector<double> w =
            type == Variant::q ? occupancy(mdp, pi, h).weights : state_marginal(mdp, pi, h);
        if (std::find(fam.weights.begin(), fam.weights.end(), w) != fam.weights.end()) continue;
        fam.weights.push_back(std::move(w));
        fam.labels.push_back("d^pi_f" + std::to_string(j));
    }
    return fam;
}

DimensionResult be_dimension(const LayeredMdp& mdp, std::span<const ValueFunction> functions,
                             const RewardTable* reward, double eps, Variant type, DeMode mode, std::size_t cap,
                             std::optional<std::vector<DistributionFamily>> families) {
    DimensionResult best;
    best.mode = mode;
    best.eps_prime = eps;
    for (int h = 0; h < mdp.horizon(); ++h) {
        const auto residuals = bellman_residual_class(mdp, functions, reward, h, type);
        const auto family = families ? families->at(h) : rollin_distributions(mdp, functions, h, type);
        auto r = de_dimension(residuals, family, eps, mode, cap);
        r.level = h;
        if (r.dimension > best.dimension) best = std::move(r);
    }
    return best;
}

std::vector<std::vector<double>> error_matrix(const LayeredMdp& mdp, std::span<const ValueFunction> functions,
                                              std::span<const DeterministicPolicy> policies,
                                              const RewardTable* reward, int h, Variant type) {
    std::vector<std::vector<double>> m(policies.size(), std::vector<double>(functions.size()));
    for (std::size_t i = 0; i < policies.size(); ++i)
        for (std::size_t j = 0; j < functions.size(); ++j)
            m[i][j] = type == Variant::q ? exact_q_error(mdp, functions[j], reward, policies[i], h)
                                         : exact_v_error(mdp, functions[j], reward, policies[i], h);
    return m;
}

RankFactorization bellman_rank_check(const std::vector<std::vector<double>>& matrix, int target,
                                     std::optional<double> zeta) {
    RankFactorization out;
    const Eigen::Index rows = static_cast<Eigen::Index>(matrix.size());
    const Eigen::Index cols = rows ? static_cast<Eigen::Index>(matrix[0].size()) : 0;
    if (rows == 0 || cols == 0) {
        out.accepted = true;
        return out;
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = matrix[i][j];

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        out.singular_values.push_back(s(k));
        if (s(k) > kRankTolerance) ++out.rank;
    }
    if (out.rank > target) return out;

    const int r = out.rank;
    const Eigen::MatrixXd nu = svd.matrixU().leftCols(r) * s.head(r).asDiagonal();
    const Eigen::MatrixXd theta = svd.matrixV().leftCols(r);
    for (Eigen::Index i = 0; i < rows; ++i) {
        std::vector<double> v(r);
        for (int k = 0; k < r; ++k) v[k] = nu(i, k);
        out.nu.push_back(std::move(v));
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
        std::vector<double> t(r);
        for (int k = 0; k < r; ++k) t[k] = theta(j, k);
        out.zeta = std::max(out.zeta, theta.row(j).norm());
        out.theta.push_back(std::move(t));
    }
    const Eigen::MatrixXd recon = nu * theta.transpose();
    out.max_residual = r ? (recon - m).cwiseAbs().maxCoeff() : m.cwiseAbs().maxCoeff();
    out.accepted = out.max_residual <= kRankTolerance && (!zeta || out.zeta <= *zeta);
    return out;
}

}  // namespace rfolive
