#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfolive/dimensions.hpp"
#include "rfolive/funclass.hpp"
#include "rfolive/mdp.hpp"
#include "rfolive/olive.hpp"
#include "rfolive/rfolive.hpp"

namespace rfolive::io {

using json = nlohmann::json;

// Every reader throws InvalidInput on a malformed document.

json to_json(const LayeredMdp& mdp);
LayeredMdp mdp_from_json(const json& j);

json to_json(const LayerShape& shape, const RewardTable& r);  // R[h][x][a]
RewardTable reward_from_json(const LayerShape& shape, const json& j);

json to_json(const DeterministicPolicy& p);  // [[action per state] per level]
DeterministicPolicy policy_from_json(const LayerShape& shape, const json& j);

/// {"type":"finite","product":bool,"bounds":[..],"levels":[[{"label","table"}]]}
/// or, for joint classes, "members":[{"label","tables":[..]}].
json to_json(const FunctionClass& f);
/// Also accepts {"type":"linear","features":{"dim","phi"},"bound_per_level",
/// "value_bounds","grid_pitch"}, materialized through linear_cover.
FunctionClass class_from_json(const LayerShape& shape, const json& j);

json to_json(const LinearFeatureMap& phi);
LinearFeatureMap features_from_json(const LayerShape& shape, const json& j);

json to_json(const std::vector<TransitionTuple>& data);  // [{h, x, a, r, x_next}]
std::vector<TransitionTuple> dataset_from_json(const json& j);

json to_json(const ConstraintRecord& rec);
ConstraintRecord record_from_json(const LayerShape& shape, const json& j);

json to_json(const ConstraintSet& cs);
ConstraintSet constraint_set_from_json(const json& j);

json to_json(const DimensionResult& d, double eps);
json to_json(const RankFactorization& r);
json to_json(const RealizabilityReport& r);
json to_json(const CompletenessReport& r);
json to_json(const LinearCompletenessReport& r);

const char* to_string(Variant v);
const char* to_string(ExecMode m);
Variant variant_from_string(const std::string& s);
ExecMode mode_from_string(const std::string& s);

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);

}  // namespace rfolive::io
