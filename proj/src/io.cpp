#include "rfolive/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "rfolive/errors.hpp"

namespace rfolive::io {

namespace {

template <class F>
auto guarded(const char* what, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed ") + what + " JSON: " + e.what());
    }
}

// Level table [x][a] as nested arrays.
json table_json(const LayerShape& shape, int h, std::span<const double> t) {
    json rows = json::array();
    const int K = shape.actions.at(h);
    for (int x = 0; x < shape.states.at(h); ++x) {
        json row = json::array();
        for (int a = 0; a < K; ++a) row.push_back(t[static_cast<std::size_t>(x) * K + a]);
        rows.push_back(std::move(row));
    }
    return rows;
}

LevelTable table_from(const LayerShape& shape, int h, const json& j) {
    const int S = shape.states.at(h);
    const int K = shape.actions.at(h);
    if (!j.is_array() || static_cast<int>(j.size()) != S)
        throw InvalidInput("level " + std::to_string(h) + " table must list " + std::to_string(S) + " states");
    LevelTable t;
    t.reserve(static_cast<std::size_t>(S) * K);
    for (const auto& row : j) {
        if (!row.is_array() || static_cast<int>(row.size()) != K)
            throw InvalidInput("level " + std::to_string(h) + " table rows must list " + std::to_string(K) + " actions");
        for (const auto& v : row) t.push_back(v.get<double>());
    }
    return t;
}

LayerShape shape_from(const json& j) {
    LayerShape s;
    s.states = j.at("states").get<std::vector<int>>();
    s.actions = j.at("actions").get<std::vector<int>>();
    if (s.states.size() != s.actions.size() + 1) throw InvalidInput("shape needs H + 1 state counts and H action counts");
    return s;
}

json shape_json(const LayerShape& s) { return {{"states", s.states}, {"actions", s.actions}}; }

}  // namespace

const char* to_string(Variant v) { return v == Variant::q ? "q" : "v"; }
const char* to_string(ExecMode m) { return m == ExecMode::exact ? "exact" : "sampled"; }

Variant variant_from_string(const std::string& s) {
    if (s == "q" || s == "Q") return Variant::q;
    if (s == "v" || s == "V") return Variant::v;
    throw ConfigError("unknown variant '" + s + "' (expected q or v)");
}

ExecMode mode_from_string(const std::string& s) {
    if (s == "exact") return ExecMode::exact;
    if (s == "sampled") return ExecMode::sampled;
    throw ConfigError("unknown mode '" + s + "' (expected exact or sampled)");
}

// ---- MDP, rewards, policies ----

json to_json(const LayeredMdp& mdp) {
    const auto& shape = mdp.shape();
    json trans = json::array();
    for (int h = 0; h < mdp.horizon(); ++h) {
        json lvl = json::array();
        for (int x = 0; x < mdp.num_states(h); ++x) {
            json row = json::array();
            for (int a = 0; a < mdp.num_actions(h); ++a) {
                auto p = mdp.next_distribution(h, x, a);
                row.push_back(std::vector<double>(p.begin(), p.end()));
            }
            lvl.push_back(std::move(row));
        }
        trans.push_back(std::move(lvl));
    }
    return {{"horizon", mdp.horizon()},
            {"states", mdp.state_names()},
            {"actions", shape.actions},
            {"transitions", std::move(trans)},
            {"start", mdp.state_name(0, mdp.start())}};
}

LayeredMdp mdp_from_json(const json& j) {
    return guarded("MDP", [&] {
        const int H = j.at("horizon").get<int>();
        auto names = j.at("states").get<std::vector<std::vector<std::string>>>();
        if (static_cast<int>(names.size()) != H + 1) throw InvalidInput("MDP needs H + 1 state levels");
        std::vector<int> actions;
        if (j.at("actions").is_number_integer())
            actions.assign(H, j.at("actions").get<int>());
        else
            actions = j.at("actions").get<std::vector<int>>();
        if (static_cast<int>(actions.size()) != H) throw InvalidInput("MDP needs H action counts");
        const auto& tj = j.at("transitions");
        if (!tj.is_array() || static_cast<int>(tj.size()) != H) throw InvalidInput("MDP needs H transition levels");
        std::vector<std::vector<double>> trans(H);
        for (int h = 0; h < H; ++h) {
            const auto& lvl = tj[h];
            if (lvl.size() != names[h].size()) throw InvalidInput("transition level " + std::to_string(h) + " has the wrong state count");
            for (const auto& row : lvl) {
                if (static_cast<int>(row.size()) != actions[h])
                    throw InvalidInput("transition level " + std::to_string(h) + " has the wrong action count");
                for (const auto& p : row) {
                    auto v = p.get<std::vector<double>>();
                    if (v.size() != names[h + 1].size())
                        throw InvalidInput("transition vector at level " + std::to_string(h) + " has the wrong length");
                    trans[h].insert(trans[h].end(), v.begin(), v.end());
                }
            }
        }
        return LayeredMdp(std::move(names), std::move(actions), std::move(trans), j.at("start").get<std::string>());
    });
}

json to_json(const LayerShape& shape, const RewardTable& r) {
    json out = json::array();
    for (int h = 0; h < r.horizon(); ++h) out.push_back(table_json(shape, h, r.level(h)));
    return out;
}

RewardTable reward_from_json(const LayerShape& shape, const json& j) {
    return guarded("reward", [&] {
        if (!j.is_array() || static_cast<int>(j.size()) != shape.horizon())
            throw InvalidInput("reward needs one table per level");
        std::vector<LevelTable> levels;
        for (int h = 0; h < shape.horizon(); ++h) {
            if (j[h].is_array() && !j[h].empty() && j[h][0].is_array())
                levels.push_back(table_from(shape, h, j[h]));
            else
                levels.push_back(j[h].get<LevelTable>());
        }
        return RewardTable(shape, std::move(levels));
    });
}

json to_json(const DeterministicPolicy& p) { return p.actions(); }

DeterministicPolicy policy_from_json(const LayerShape& shape, const json& j) {
    return guarded("policy", [&] { return DeterministicPolicy(shape, j.get<std::vector<std::vector<int>>>()); });
}

// ---- classes ----

json to_json(const FunctionClass& f) {
    const auto& shape = f.shape();
    json j = {{"type", "finite"}, {"product", f.is_product()}, {"bounds", f.bounds()}};
    if (f.is_product()) {
        json levels = json::array();
        for (int h = 0; h < f.horizon(); ++h) {
            json lvl = json::array();
            for (std::size_t k = 0; k < f.level_size(h); ++k)
                lvl.push_back({{"label", f.level_label(h, k)}, {"table", table_json(shape, h, f.level_table(h, k))}});
            levels.push_back(std::move(lvl));
        }
        j["levels"] = std::move(levels);
    } else {
        json members = json::array();
        for (std::size_t id = 0; id < f.size(); ++id) {
            json tables = json::array();
            for (int h = 0; h < f.horizon(); ++h) tables.push_back(table_json(shape, h, f.table(id, h)));
            members.push_back({{"label", f.label(id)}, {"tables", std::move(tables)}});
        }
        j["members"] = std::move(members);
    }
    return j;
}

json to_json(const LinearFeatureMap& phi) { return {{"dim", phi.dim}, {"phi", phi.phi}}; }

LinearFeatureMap features_from_json(const LayerShape& shape, const json& j) {
    return guarded("feature map", [&] {
        return LinearFeatureMap(j.at("dim").get<int>(), shape, j.at("phi").get<std::vector<std::vector<double>>>());
    });
}

FunctionClass class_from_json(const LayerShape& shape, const json& j) {
    return guarded("function class", [&] {
        const std::string type = j.at("type").get<std::string>();
        if (type == "linear") {
            LinearClassSpec spec;
            spec.features = features_from_json(shape, j.at("features"));
            spec.norm_bounds = j.at("bound_per_level").get<std::vector<double>>();
            spec.value_bounds = j.contains("value_bounds") ? j.at("value_bounds").get<std::vector<double>>()
                                                           : spec.norm_bounds;
            const double pitch = j.at("grid_pitch").get<double>();
            return linear_cover(spec, pitch * std::sqrt(static_cast<double>(spec.features.dim))).members;
        }
        if (type != "finite") throw InvalidInput("unknown class type '" + type + "'");
        auto bounds = j.at("bounds").get<std::vector<double>>();
        if (j.value("product", true)) {
            const auto& lj = j.at("levels");
            if (static_cast<int>(lj.size()) != shape.horizon()) throw InvalidInput("class needs one list per level");
            std::vector<std::vector<LevelTable>> levels(shape.horizon());
            std::vector<std::vector<std::string>> labels(shape.horizon());
            for (int h = 0; h < shape.horizon(); ++h)
                for (const auto& e : lj[h]) {
                    levels[h].push_back(table_from(shape, h, e.at("table")));
                    labels[h].push_back(e.at("label").get<std::string>());
                }
            return FunctionClass::product(shape, std::move(levels), std::move(bounds), std::move(labels),
                                          ZeroMember::as_given);
        }
        std::vector<ValueFunction> members;
        std::vector<std::string> labels;
        for (const auto& m : j.at("members")) {
            const auto& tj = m.at("tables");
            if (static_cast<int>(tj.size()) != shape.horizon()) throw InvalidInput("member needs one table per level");
            ValueFunction f;
            for (int h = 0; h < shape.horizon(); ++h) f.levels.push_back(table_from(shape, h, tj[h]));
            members.push_back(std::move(f));
            labels.push_back(m.at("label").get<std::string>());
        }
        return FunctionClass::joint(shape, std::move(members), std::move(bounds), std::move(labels));
    });
}

// ---- datasets and constraints ----

json to_json(const std::vector<TransitionTuple>& data) {
    json out = json::array();
    for (const auto& t : data) out.push_back({{"h", t.h}, {"x", t.x}, {"a", t.a}, {"r", t.r}, {"x_next", t.x_next}});
    return out;
}

std::vector<TransitionTuple> dataset_from_json(const json& j) {
    return guarded("dataset", [&] {
        std::vector<TransitionTuple> out;
        for (const auto& e : j)
            out.push_back({e.at("h").get<int>(), e.at("x").get<int>(), e.at("a").get<int>(), e.at("r").get<double>(),
                           e.at("x_next").get<int>()});
        return out;
    });
}

json to_json(const ConstraintRecord& rec) {
    json support = json::array();
    for (const auto& s : rec.support)
        support.push_back({{"x", s.x}, {"a", s.a}, {"x_next", s.x_next}, {"weight", s.weight}});
    return {{"t", rec.t},
            {"h", rec.level},
            {"policy", to_json(rec.roll_in)},
            {"mode", to_string(rec.mode)},
            {"action", rec.action == ActionTag::roll_in ? "roll_in" : "uniform"},
            {"support", std::move(support)},
            {"data", to_json(rec.data)}};
}

ConstraintRecord record_from_json(const LayerShape& shape, const json& j) {
    return guarded("constraint", [&] {
        ConstraintRecord rec;
        rec.t = j.at("t").get<int>();
        rec.level = j.at("h").get<int>();
        if (rec.level < 0 || rec.level >= shape.horizon()) throw InvalidInput("constraint level out of range");
        rec.roll_in = policy_from_json(shape, j.at("policy"));
        rec.mode = mode_from_string(j.at("mode").get<std::string>());
        const auto action = j.at("action").get<std::string>();
        if (action != "roll_in" && action != "uniform") throw InvalidInput("unknown constraint action '" + action + "'");
        rec.action = action == "roll_in" ? ActionTag::roll_in : ActionTag::uniform;
        for (const auto& s : j.at("support"))
            rec.support.push_back(
                {s.at("x").get<int>(), s.at("a").get<int>(), s.at("x_next").get<int>(), s.at("weight").get<double>(), 0.0});
        rec.data = dataset_from_json(j.at("data"));
        return rec;
    });
}

json to_json(const ConstraintSet& cs) {
    json records = json::array();
    for (const auto& r : cs.records) records.push_back(to_json(r));
    json j = {{"variant", to_string(cs.variant)},
              {"mode", to_string(cs.mode)},
              {"shape", shape_json(cs.shape)},
              {"start", cs.start},
              {"eps_elim", cs.eps_elim},
              {"records", std::move(records)}};
    j["z_on"] = cs.z_on ? to_json(*cs.z_on) : json(nullptr);
    return j;
}

ConstraintSet constraint_set_from_json(const json& j) {
    return guarded("constraint set", [&] {
        ConstraintSet cs;
        cs.variant = variant_from_string(j.at("variant").get<std::string>());
        cs.mode = mode_from_string(j.at("mode").get<std::string>());
        cs.shape = shape_from(j.at("shape"));
        cs.start = j.at("start").get<int>();
        cs.eps_elim = j.at("eps_elim").get<double>();
        for (const auto& r : j.at("records")) cs.records.push_back(record_from_json(cs.shape, r));
        if (j.contains("z_on") && !j.at("z_on").is_null()) cs.z_on = class_from_json(cs.shape, j.at("z_on"));
        if (cs.variant == Variant::v && !cs.z_on) throw InvalidInput("V-type constraint set needs its online cover");
        return cs;
    });
}

// ---- reports ----

json to_json(const DimensionResult& d, double eps) {
    return {{"dimension", d.dimension},
            {"epsilon", eps},
            {"eps_prime", d.eps_prime},
            {"certificate", d.certificate},
            {"mode", d.mode == DeMode::exhaustive ? "exhaustive" : "greedy"},
            {"level", d.level}};
}

json to_json(const RankFactorization& r) {
    return {{"rank", r.rank},
            {"singular_values", r.singular_values},
            {"accepted", r.accepted},
            {"zeta", r.zeta},
            {"max_residual", r.max_residual}};
}

json to_json(const RealizabilityReport& r) {
    json entries = json::array();
    for (const auto& e : r.entries) entries.push_back({{"reward", e.reward}, {"level", e.level}, {"distance", e.distance}});
    return {{"pass", r.pass}, {"tol", r.tol}, {"entries", std::move(entries)}};
}

json to_json(const CompletenessReport& r) {
    static const char* kinds[] = {"backup", "reward_backup", "difference_backup"};
    json v = json::array();
    for (const auto& e : r.violations)
        v.push_back({{"kind", kinds[static_cast<int>(e.kind)]},
                     {"level", e.level},
                     {"source", e.source},
                     {"distance", e.distance}});
    return {{"pass", r.pass}, {"tol", r.tol}, {"checked", r.checked}, {"violations", std::move(v)}};
}

json to_json(const LinearCompletenessReport& r) {
    return {{"pass", r.pass},
            {"max_residual", r.max_residual},
            {"max_norm", r.max_norm},
            {"norm_limit", r.norm_limit},
            {"probes", r.entries.size()}};
}

// ---- files ----

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw Error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json read_json(const std::filesystem::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw InvalidInput("cannot parse " + path.string() + ": " + e.what());
    }
}

}  // namespace rfolive::io
