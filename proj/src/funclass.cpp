#include "rfolive/funclass.hpp"

#include <algorithm>
#include <cmath>


#include "rfolive/errors.hpp"

namespace rfolive {

namespace {

bool all_zero(const LevelTable& t) {
    return std::all_of(t.begin(), t.end(), [](double v) { return v == 0.0; });
}

LevelTable add(std::span<const double> a, std::span<const double> b, double sign = 1.0) {
    LevelTable out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + sign * b[i];
    return out;
}

std::size_t checked_mul(std::size_t a, std::size_t b) {
    constexpr std::size_t limit = std::size_t{1} << 48;
    if (a != 0 && b > limit / a) throw UnsupportedRequest("function class too large to enumerate");
    return a * b;
}

}  // namespace

// ---- ValueFunction ----

ValueFunction ValueFunction::zero(const LayerShape& shape) {
    ValueFunction f;
    for (int h = 0; h < shape.horizon(); ++h) f.levels.emplace_back(shape.pairs(h), 0.0);
    return f;
}

double ValueFunction::start_value(const LayerShape& shape, int start) const {
    return state_values(shape, 0, levels.at(0))[start];
}

ValueFunction ValueFunction::operator-() const {
    ValueFunction out = *this;
    for (auto& t : out.levels)
        for (double& v : t) v = -v;
    for (auto& th : out.theta)
        for (double& v : th) v = -v;
    return out;
}

ValueFunction operator+(const ValueFunction& a, const ValueFunction& b) {
    ValueFunction out;
    for (std::size_t h = 0; h < a.levels.size(); ++h) out.levels.push_back(add(a.levels[h], b.levels.at(h)));
    return out;
}

ValueFunction operator-(const ValueFunction& a, const ValueFunction& b) {
    ValueFunction out;
    for (std::size_t h = 0; h < a.levels.size(); ++h)
        out.levels.push_back(add(a.levels[h], b.levels.at(h), -1.0));
    return out;
}

double sup_norm(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double sup_distance(const ValueFunction& a, const ValueFunction& b) {
    double m = 0.0;
    for (std::size_t h = 0; h < a.levels.size(); ++h) m = std::max(m, sup_distance(a.levels[h], b.levels.at(h)));
    return m;
}

// ---- greedy ----

int TieBreak::choose(int h, int x, std::span<const int> tied) const {
    switch (rule) {
    case TieRule::first:
        return tied.front();
    case TieRule::last:
        return tied.back();
    case TieRule::scripted: {
        if (!script) return tied.front();
        int a = script(h, x, tied);
        if (std::find(tied.begin(), tied.end(), a) == tied.end())
            throw InvalidInput("tie script returned an action that is not tied");
        return a;
    }
    }
    return tied.front();
}

int greedy_action(std::span<const double> row, int h, int x, const TieBreak& tie) {
    const double best = *std::max_element(row.begin(), row.end());
    std::vector<int> tied;
    for (std::size_t a = 0; a < row.size(); ++a)
        if (row[a] >= best - kTieTolerance) tied.push_back(static_cast<int>(a));
    if (tied.size() == 1) return tied.front();
    return tie.choose(h, x, tied);
}

DeterministicPolicy greedy_policy(const LayerShape& shape, const ValueFunction& f, const TieBreak& tie) {
    std::vector<std::vector<int>> acts(shape.horizon());
    for (int h = 0; h < shape.horizon(); ++h) {
        const int K = shape.actions[h];
        for (int x = 0; x < shape.states[h]; ++x) {
            auto row = std::span<const double>(f.levels.at(h)).subspan(static_cast<std::size_t>(x) * K, K);
            acts[h].push_back(greedy_action(row, h, x, tie));
        }
    }
    return DeterministicPolicy(shape, std::move(acts));
}

// ---- FunctionClass ----

void FunctionClass::index_level(int h) {
    values_[h].clear();
    greedy_[h].clear();
    const int K = shape_.actions[h];
    for (const auto& t : tables_[h]) {
        if (t.size() != static_cast<std::size_t>(shape_.pairs(h)))
            throw InvalidInput("function table at level " + std::to_string(h) + " has wrong size");
        values_[h].push_back(state_values(shape_, h, t));
        std::vector<int> g(shape_.states[h]);
        for (int x = 0; x < shape_.states[h]; ++x)
            g[x] = greedy_action(std::span<const double>(t).subspan(static_cast<std::size_t>(x) * K, K), h, x);
        greedy_[h].push_back(std::move(g));
    }
}

FunctionClass FunctionClass::product(LayerShape shape, std::vector<std::vector<LevelTable>> levels,
                                     std::vector<double> bounds, std::vector<std::vector<std::string>> labels,
                                     ZeroMember zero) {
    const int H = shape.horizon();
    if (levels.size() != static_cast<std::size_t>(H)) throw InvalidInput("function class needs one list per level");
    if (bounds.size() != static_cast<std::size_t>(H)) throw InvalidInput("function class needs one bound per level");
    if (labels.empty()) labels.resize(H);
    FunctionClass c;
    c.shape_ = std::move(shape);
    c.bounds_ = std::move(bounds);
    c.tables_.resize(H);
    c.level_labels_.resize(H);
    c.values_.resize(H);
    c.greedy_.resize(H);
    c.terminal_zeros_.assign(c.shape_.states[H], 0.0);
    for (int h = 0; h < H; ++h) {
        auto& tabs = levels[h];
        auto& labs = labels[h];
        if (labs.empty())
            for (std::size_t k = 0; k < tabs.size(); ++k)
                labs.push_back(all_zero(tabs[k]) ? "0" : "f" + std::to_string(k) + "," + std::to_string(h));
        if (labs.size() != tabs.size()) throw InvalidInput("label count does not match member count");
        if (tabs.empty()) throw InvalidInput("level " + std::to_string(h) + " has no members");
        for (const auto& t : tabs)
            for (double v : t)
                if (std::abs(v) > c.bounds_[h] + kMembershipTolerance)
                    throw InvalidInput("member value outside the range bound at level " + std::to_string(h));
        if (zero == ZeroMember::enforce && std::none_of(tabs.begin(), tabs.end(), all_zero)) {
            tabs.insert(tabs.begin(), LevelTable(c.shape_.pairs(h), 0.0));
            labs.insert(labs.begin(), "0");
            c.zero_added_ = true;
        }
        c.tables_[h] = std::move(tabs);
        c.level_labels_[h] = std::move(labs);
        c.index_level(h);
    }
    c.strides_.assign(H, 1);
    c.size_ = 1;
    for (int h = H - 1; h >= 0; --h) {
        c.strides_[h] = c.size_;
        c.size_ = checked_mul(c.size_, c.tables_[h].size());
    }
    return c;
}

FunctionClass FunctionClass::joint(LayerShape shape, std::vector<ValueFunction> members, std::vector<double> bounds,
                                   std::vector<std::string> labels) {
    const int H = shape.horizon();
    if (bounds.size() != static_cast<std::size_t>(H)) throw InvalidInput("function class needs one bound per level");
    if (members.empty()) throw InvalidInput("joint class needs at least one member");
    if (labels.empty())
        for (std::size_t i = 0; i < members.size(); ++i) labels.push_back("f" + std::to_string(i));
    if (labels.size() != members.size()) throw InvalidInput("label count does not match member count");
    FunctionClass c;
    c.product_ = false;
    c.shape_ = std::move(shape);
    c.bounds_ = std::move(bounds);
    c.size_ = members.size();
    c.tables_.resize(H);
    c.level_labels_.resize(H);
    c.values_.resize(H);
    c.greedy_.resize(H);
    c.terminal_zeros_.assign(c.shape_.states[H], 0.0);
    c.joint_labels_ = std::move(labels);
    c.joint_index_.resize(c.size_ * H);
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (members[i].levels.size() != static_cast<std::size_t>(H))
            throw InvalidInput("member has the wrong number of levels");
        for (int h = 0; h < H; ++h) {
            c.joint_index_[i * H + h] = c.tables_[h].size();
            c.tables_[h].push_back(std::move(members[i].levels[h]));
            c.level_labels_[h].push_back(c.joint_labels_[i]);
        }
    }
    for (int h = 0; h < H; ++h) c.index_level(h);
    return c;
}

std::size_t FunctionClass::level_index(std::size_t id, int h) const {
    if (product_) return (id / strides_[h]) % tables_[h].size();
    return joint_index_[id * horizon() + h];
}

std::size_t FunctionClass::id_of(std::span<const std::size_t> level_indices) const {
    if (!product_) throw UnsupportedRequest("id_of needs a product class");
    std::size_t id = 0;
    for (int h = 0; h < horizon(); ++h) id += level_indices[h] * strides_[h];
    return id;
}

std::span<const double> FunctionClass::values(std::size_t id, int h) const {
    if (h >= horizon()) return terminal_zeros_;
    return level_values(h, level_index(id, h));
}

ValueFunction FunctionClass::member(std::size_t id) const {
    if (id >= size_) throw InvalidInput("member id out of range");
    ValueFunction f;
    for (int h = 0; h < horizon(); ++h) f.levels.push_back(level_table(h, level_index(id, h)));
    return f;
}

std::vector<ValueFunction> FunctionClass::enumerate() const {
    std::vector<ValueFunction> out;
    out.reserve(size_);
    for (std::size_t id = 0; id < size_; ++id) out.push_back(member(id));
    return out;
}

std::string FunctionClass::label(std::size_t id) const {
    if (!product_) return joint_labels_.at(id);
    std::string s;
    for (int h = 0; h < horizon(); ++h) {
        if (h) s += " | ";
        s += level_labels_[h][level_index(id, h)];
    }
    return s;
}

std::optional<std::size_t> FunctionClass::find_level(int h, std::span<const double> table, double tol) const {
    for (std::size_t k = 0; k < tables_.at(h).size(); ++k)
        if (sup_distance(tables_[h][k], table) <= tol) return k;
    return std::nullopt;
}

std::optional<std::size_t> FunctionClass::find(const ValueFunction& f, double tol) const {
    if (product_) {
        std::vector<std::size_t> idx;
        for (int h = 0; h < horizon(); ++h) {
            auto k = find_level(h, f.levels.at(h), tol);
            if (!k) return std::nullopt;
            idx.push_back(*k);
        }
        return id_of(idx);
    }
    for (std::size_t id = 0; id < size_; ++id) {
        double d = 0.0;
        for (int h = 0; h < horizon() && d <= tol; ++h) d = std::max(d, sup_distance(table(id, h), f.levels[h]));
        if (d <= tol) return id;
    }
    return std::nullopt;
}

// ---- class algebra ----

FunctionClass difference_class(const FunctionClass& f, double dedup_tol) {
    const int H = f.horizon();
    std::vector<double> bounds;
    for (double b : f.bounds()) bounds.push_back(2.0 * b);
    auto is_new = [dedup_tol](const std::vector<LevelTable>& kept, const LevelTable& t) {
        return std::none_of(kept.begin(), kept.end(),
                            [&](const LevelTable& k) { return sup_distance(k, t) <= dedup_tol; });
    };

    if (f.is_product()) {
        std::vector<std::vector<LevelTable>> levels(H);
        std::vector<std::vector<std::string>> labels(H);
        for (int h = 0; h < H; ++h) {
            const std::size_t n = f.level_size(h);
            levels[h].emplace_back(f.shape().pairs(h), 0.0);
            labels[h].push_back("0");
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    LevelTable t = add(f.level_table(h, i), f.level_table(h, j), -1.0);
                    if (!is_new(levels[h], t)) continue;
                    levels[h].push_back(std::move(t));
                    labels[h].push_back(f.level_label(h, i) + "-" + f.level_label(h, j));
                }
        }
        return FunctionClass::product(f.shape(), std::move(levels), std::move(bounds), std::move(labels));
    }

    std::vector<ValueFunction> members{ValueFunction::zero(f.shape())};
    std::vector<std::string> labels{"0"};
    for (std::size_t i = 0; i < f.size(); ++i)
        for (std::size_t j = 0; j < f.size(); ++j) {
            ValueFunction d = f.member(i) - f.member(j);
            bool fresh = std::none_of(members.begin(), members.end(),
                                      [&](const ValueFunction& m) { return sup_distance(m, d) <= dedup_tol; });
            if (!fresh) continue;
            members.push_back(std::move(d));
            labels.push_back(f.label(i) + "-" + f.label(j));
        }
    return FunctionClass::joint(f.shape(), std::move(members), std::move(bounds), std::move(labels));
}

FunctionClass reward_append(const FunctionClass& f, const RewardTable& reward) {
    const int H = f.horizon();
    std::vector<double> bounds;
    for (double b : f.bounds()) bounds.push_back(b + 1.0);
    if (f.is_product()) {
        std::vector<std::vector<LevelTable>> levels(H);
        std::vector<std::vector<std::string>> labels(H);
        for (int h = 0; h < H; ++h)
            for (std::size_t k = 0; k < f.level_size(h); ++k) {
                levels[h].push_back(add(f.level_table(h, k), reward.level(h)));
                labels[h].push_back(f.level_label(h, k) + "+R");
            }
        // F + R need not contain zero and must keep |F| members.
        return FunctionClass::product(f.shape(), std::move(levels), std::move(bounds), std::move(labels),
                                      ZeroMember::as_given);
    }
    std::vector<ValueFunction> members;
    std::vector<std::string> names;
    for (std::size_t id = 0; id < f.size(); ++id) {
        ValueFunction g;
        for (int h = 0; h < H; ++h) g.levels.push_back(add(f.table(id, h), reward.level(h)));
        members.push_back(std::move(g));
        names.push_back(f.label(id) + "+R");
    }
    return FunctionClass::joint(f.shape(), std::move(members), std::move(bounds), std::move(names));
}

}  // namespace rfolive
