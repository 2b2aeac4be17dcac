#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "labelsel/curriculum.hpp"
#include "labelsel/policy.hpp"
#include "labelsel/select.hpp"
#include "labelsel/sslsim.hpp"

namespace labelsel {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "labelsel";
const char* version_string() noexcept;

Json to_json(const SelectionResult& s);
SelectionResult selection_from_json(const Json& j);

Json to_json(const OrderedSelection& o);
OrderedSelection ordering_from_json(const Json& j);

Json to_json(const BlobSpec& b);
BlobSpec blob_spec_from_json(const Json& j);

Json to_json(const SimConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
SimConfig sim_config_from_json(const Json& j);

Json to_json(const PolicySpec& p);
PolicySpec policy_spec_from_json(const Json& j);

Json to_json(const ClusterParams& p);
ClusterParams cluster_params_from_json(const Json& j);

Json to_json(const ModelParams& p);
Json to_json(const TrialReport& r);

/// Tool name and version plus the resolved settings that produced a file.
Json make_meta(const std::string& command, const Json& flags);

Json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const Json& j, const std::filesystem::path& path);

/// Rejects keys outside `allowed` with a ConfigError naming `where`.
void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

}  // namespace labelsel
