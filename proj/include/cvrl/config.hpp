#pragma once

#include <string>

#include <json.hpp>

#include "cvrl/harness.hpp"

namespace cvrl {

// JSON config schemas (all carry "schema_version": 1). Absent fields keep
// their defaults; unknown fields are rejected to catch typos.
PretrainConfig pretrain_config_from_json(const nlohmann::json& j);
EvalConfig eval_config_from_json(const nlohmann::json& j);

nlohmann::json pretrain_config_to_json(const PretrainConfig& c);
nlohmann::json eval_config_to_json(const EvalConfig& c);

nlohmann::json parse_config_text(const std::string& text);

}  // namespace cvrl
