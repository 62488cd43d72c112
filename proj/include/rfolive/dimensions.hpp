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

/// Real-valued functions on one finite domain (level-h pairs or level-h states).
struct ScalarFunctionSet {
    std::vector<std::vector<double>> functions;
    std::vector<std::string> labels;
};

/// Distributions over the same domain as a ScalarFunctionSet.
struct DistributionFamily {
    std::vector<std::vector<double>> weights;
    std::vector<std::string> labels;
};

/// E_nu[f].
double expectation(std::span<const double> nu, std::span<const double> f);

struct IndependenceResult {
    bool independent = false;
    std::optional<std::size_t> witness;
};

/// True iff some f' has sqrt(sum_i E_{mu_i}[f']^2) <= eps' and |E_nu[f']| > eps'.
IndependenceResult eps_independent(std::span<const double> nu, std::span<const std::vector<double>> preds,
                                   const ScalarFunctionSet& f, double eps_prime);

enum class DeMode { exhaustive, greedy };

struct DimensionResult {
    int dimension = 0;
    std::vector<std::size_t> certificate;  // indices into the family, in order
    double eps_prime = 0.0;                // a value of eps' >= eps at which the certificate holds
    DeMode mode = DeMode::exhaustive;
    int level = 0;                         // for BE dimensions: the maximizing level
};

inline constexpr std::size_t kDefaultDeCap = 8;

/// Longest sequence of family members each eps'-independent of its
/// predecessors for one common eps' >= eps. Feasible eps' values are tracked
/// exactly as unions of half-open intervals, so the returned eps' is the
/// smallest valid one.
DimensionResult de_dimension(const ScalarFunctionSet& f, const DistributionFamily& family, double eps,
                             DeMode mode = DeMode::exhaustive, std::size_t cap = kDefaultDeCap);

/// (I - T^R_h) F at level h: Q-type on pairs, V-type on states at the
/// greedy action of f_h. `reward == nullptr` is the zero reward.
ScalarFunctionSet bellman_residual_class(const LayeredMdp& mdp, std::span<const ValueFunction> functions,
                                         const RewardTable* reward, int h, Variant type);

/// Distinct exact roll-in distributions d_h^{pi_f} over the functions'
/// greedy policies: pair occupancies (Q) or state marginals (V).
DistributionFamily rollin_distributions(const LayeredMdp& mdp, std::span<const ValueFunction> functions, int h,
                                        Variant type);

/// max_h of the DE dimension of the level-h residual class against
/// families[h]. With no families the roll-in family of the class is used.
DimensionResult be_dimension(const LayeredMdp& mdp, std::span<const ValueFunction> functions,
                             const RewardTable* reward, double eps, Variant type, DeMode mode = DeMode::exhaustive,
                             std::size_t cap = kDefaultDeCap,
                             std::optional<std::vector<DistributionFamily>> families = std::nullopt);

/// Average Bellman errors E(f_j, pi_i, h): rows are roll-in policies,
/// columns functions. Q-type acts with pi_i at h, V-type with pi_{f_j}.
std::vector<std::vector<double>> error_matrix(const LayeredMdp& mdp, std::span<const ValueFunction> functions,
                                              std::span<const DeterministicPolicy> policies,
                                              const RewardTable* reward, int h, Variant type);

struct RankFactorization {
    int rank = 0;
    std::vector<double> singular_values;
    bool accepted = false;                  // rank <= target and zeta holds
    std::vector<std::vector<double>> nu;    // per row (policy)
    std::vector<std::vector<double>> theta; // per column (function)
    double zeta = 0.0;                      // max ||theta(f)||
    double max_residual = 0.0;              // max |<nu, theta> - entry|
};

inline constexpr double kRankTolerance = 1e-9;

/// Numerical rank by SVD (singular values <= 1e-9 dropped) and, when the rank
/// is at most `target`, the factorization nu = U S, theta = V.
RankFactorization bellman_rank_check(const std::vector<std::vector<double>>& matrix, int target,
                                     std::optional<double> zeta = std::nullopt);

}  // namespace rfolive
