#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfolive/mdp.hpp"

namespace rfolive {

/// Two action values within this distance count as tied for the argmax.
inline constexpr double kTieTolerance = 1e-12;

/// Default sup-norm tolerance for class membership tests.
inline constexpr double kMembershipTolerance = 1e-9;

/// A function f = (f_0, ..., f_{H-1}); f_H is implicitly zero.
/// `theta` is filled for members of a linear class (one weight vector per level).
struct ValueFunction {
    std::vector<LevelTable> levels;
    std::vector<std::vector<double>> theta;

    static ValueFunction zero(const LayerShape& shape);

    double start_value(const LayerShape& shape, int start) const;
    ValueFunction operator-() const;
    friend ValueFunction operator+(const ValueFunction& a, const ValueFunction& b);
    friend ValueFunction operator-(const ValueFunction& a, const ValueFunction& b);
    bool operator==(const ValueFunction&) const = default;
};

/// max over levels of the sup-norm distance.
double sup_distance(const ValueFunction& a, const ValueFunction& b);
double sup_distance(std::span<const double> a, std::span<const double> b);
double sup_norm(std::span<const double> a);

enum class TieRule { first, last, scripted };

/// Whether a product class must contain the zero table at every level.
enum class ZeroMember { enforce, as_given };

/// Argmax tie-breaking. A scripted rule receives the tied action indices
/// (ascending) and returns one of them.
struct TieBreak {
    TieRule rule = TieRule::first;
    std::function<int(int h, int x, std::span<const int> tied)> script;

    int choose(int h, int x, std::span<const int> tied) const;
};

/// argmax_a row[a] under the tie rule.
int greedy_action(std::span<const double> row, int h, int x, const TieBreak& tie = {});

DeterministicPolicy greedy_policy(const LayerShape& shape, const ValueFunction& f, const TieBreak& tie = {});

/// Finite value-function class.
///
/// A product class stores one list per level and enumerates members in
/// mixed radix with level 0 most significant; the zero table is forced into
/// every level (prepended when missing). A joint class is an explicit list
/// of whole functions and keeps no product structure.
class FunctionClass {
public:
    static FunctionClass product(LayerShape shape, std::vector<std::vector<LevelTable>> levels,
                                 std::vector<double> bounds,
                                 std::vector<std::vector<std::string>> labels = {},
                                 ZeroMember zero = ZeroMember::enforce);
    static FunctionClass joint(LayerShape shape, std::vector<ValueFunction> members, std::vector<double> bounds,
                               std::vector<std::string> labels = {});

    bool is_product() const noexcept { return product_; }
    bool zero_added() const noexcept { return zero_added_; }
    const LayerShape& shape() const noexcept { return shape_; }
    int horizon() const noexcept { return shape_.horizon(); }
    const std::vector<double>& bounds() const noexcept { return bounds_; }

    std::size_t size() const noexcept { return size_; }

    /// Number of distinct stored level-h tables (members of F_h for a product class).
    std::size_t level_size(int h) const { return tables_.at(h).size(); }
    const LevelTable& level_table(int h, std::size_t k) const { return tables_.at(h).at(k); }
    const std::string& level_label(int h, std::size_t k) const { return level_labels_.at(h).at(k); }
    /// V of stored table k at level h; index by state.
    std::span<const double> level_values(int h, std::size_t k) const { return values_.at(h).at(k); }
    /// Greedy action of stored table k at level h with lowest-index ties.
    std::span<const int> level_greedy(int h, std::size_t k) const { return greedy_.at(h).at(k); }

    /// Which stored level-h table member `id` uses.
    std::size_t level_index(std::size_t id, int h) const;
    std::size_t id_of(std::span<const std::size_t> level_indices) const;

    std::span<const double> table(std::size_t id, int h) const { return level_table(h, level_index(id, h)); }
    /// V_f at level h. Level H returns zeros.
    std::span<const double> values(std::size_t id, int h) const;
    double start_value(std::size_t id, int start) const { return values(id, 0)[start]; }

    ValueFunction member(std::size_t id) const;
    std::vector<ValueFunction> enumerate() const;
    std::string label(std::size_t id) const;

    /// First member within `tol` of `f` in max-over-levels sup-norm.
    std::optional<std::size_t> find(const ValueFunction& f, double tol = kMembershipTolerance) const;
    /// First stored level-h table within `tol`.
    std::optional<std::size_t> find_level(int h, std::span<const double> table,
                                          double tol = kMembershipTolerance) const;

private:
    FunctionClass() = default;
    void index_level(int h);

    bool product_ = true;
    bool zero_added_ = false;
    LayerShape shape_;
    std::vector<double> bounds_;
    std::size_t size_ = 0;
    std::vector<std::vector<LevelTable>> tables_;
    std::vector<std::vector<std::string>> level_labels_;
    std::vector<std::vector<std::vector<double>>> values_;
    std::vector<std::vector<std::vector<int>>> greedy_;
    std::vector<std::size_t> strides_;
    std::vector<std::size_t> joint_index_;  // member * H + h
    std::vector<std::string> joint_labels_;
    std::vector<double> terminal_zeros_;
};

/// F - F with exact-duplicate removal at `dedup_tol` = 0. The zero table is
/// listed first at every level; range bounds double.
FunctionClass difference_class(const FunctionClass& f, double dedup_tol = 0.0);

/// F + R, one member per member of F.
FunctionClass reward_append(const FunctionClass& f, const RewardTable& reward);

struct CoverCertificate {
    double eps = 0.0;
    // Product classes: per level, for each stored table the index of its
    // nearest cover table and the distance. Joint classes: one row over members.
    std::vector<std::vector<std::size_t>> nearest;
    std::vector<std::vector<double>> distance;

    bool holds() const;
};

struct Cover {
    FunctionClass members;
    CoverCertificate certificate;
};

/// Greedy eps-cover in max-over-levels sup-norm. Product classes are covered
/// level by level, which covers the product at the same eps.
Cover cover(const FunctionClass& f, double eps);

/// phi_h(x, a) in R^d for every level-h pair; stored `phi[h][pair * d + i]`.
struct LinearFeatureMap {
    int dim = 0;
    LayerShape shape;
    std::vector<std::vector<double>> phi;

    LinearFeatureMap() = default;
    LinearFeatureMap(int dim, LayerShape shape, std::vector<std::vector<double>> phi);

    std::span<const double> at(int h, int pair) const {
        return std::span<const double>(phi[h]).subspan(static_cast<std::size_t>(pair) * dim, dim);
    }
    /// <phi_h(., .), theta> over all level-h pairs.
    LevelTable evaluate(int h, std::span<const double> theta) const;

    bool operator==(const LinearFeatureMap&) const = default;
};

/// Linear class {<phi_h, theta_h> : ||theta_h|| <= B_h sqrt(d), values in [-V_h, V_h]}.
struct LinearClassSpec {
    LinearFeatureMap features;
    std::vector<double> norm_bounds;   // B_h
    std::vector<double> value_bounds;  // V_h
};

struct LinearCover {
    FunctionClass members;
    double pitch = 0.0;
    std::vector<std::vector<std::vector<double>>> thetas;  // per level, one per stored table
};

/// Product grid of pitch eps/sqrt(d) per coordinate inside each theta-ball,
/// dropping points whose values leave the range bound.
/// eps == 0 asks for the infinite class itself and throws `UnsupportedRequest`.
LinearCover linear_cover(const LinearClassSpec& spec, double eps);

/// Checks the cover against a verification set of parameters: for each level
/// and each theta in `probes[h]` that is a class member, records the nearest
/// cover table and the sup-norm distance.
CoverCertificate verify_linear_cover(const LinearClassSpec& spec, const LinearCover& cover,
                                     const std::vector<std::vector<std::vector<double>>>& probes);

/// Size bound (2 H^2 sqrt(d) / eps)^d for linear covers.
double linear_cover_size_bound(int horizon, int dim, double eps);

// ---- assumption checkers ----

struct RealizabilityEntry {
    std::size_t reward = 0;
    int level = 0;
    double distance = 0.0;  // best sup-norm distance of Q*_{R,h} to F_h + R_h
};

struct RealizabilityReport {
    bool pass = true;
    double tol = kMembershipTolerance;
    std::vector<RealizabilityEntry> entries;
};

RealizabilityReport check_realizability(const LayeredMdp& mdp, const FunctionClass& f,
                                        std::span<const RewardTable> rewards,
                                        double tol = kMembershipTolerance);

enum class ClosureKind { backup, reward_backup, difference_backup };

struct CompletenessViolation {
    ClosureKind kind = ClosureKind::backup;
    int level = 0;       // h of the backup T^0_h
    std::string source;  // which level-(h+1) function was backed up
    double distance = 0.0;
};

struct CompletenessReport {
    bool pass = true;
    double tol = kMembershipTolerance;
    std::size_t checked = 0;
    std::vector<CompletenessViolation> violations;
};

/// Product classes only.
CompletenessReport check_completeness(const LayeredMdp& mdp, const FunctionClass& f,
                                      std::span<const RewardTable> rewards,
                                      double tol = kMembershipTolerance);

struct LinearCompletenessEntry {
    int level = 0;
    std::size_t probe = 0;
    double residual = 0.0;
    double theta_norm = 0.0;
};

struct LinearCompletenessReport {
    bool pass = true;
    double max_residual = 0.0;
    double max_norm = 0.0;
    double norm_limit = 0.0;
    std::vector<LinearCompletenessEntry> entries;
};

/// Probe weights for one level: the signed unit directions plus `random_draws`
/// random directions, each scaled into both the norm bound B sqrt(d) and the
/// value range [-B, B].
std::vector<std::vector<double>> completeness_probes(const LinearFeatureMap& phi, int h, double bound,
                                                     int random_draws, Rng& rng);

/// For each h < H-1 and every probe theta_{h+1}, fits theta_h to
/// T^0_h <phi_{h+1}, theta_{h+1}> by minimum-norm least squares.
LinearCompletenessReport check_linear_completeness(const LayeredMdp& mdp, const LinearFeatureMap& phi,
                                                   const std::vector<std::vector<std::vector<double>>>& probes,
                                                   double bound = 1.0, double tol = kMembershipTolerance);

}  // namespace rfolive
