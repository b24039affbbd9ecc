#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "estrnn/config.hpp"
#include "estrnn/synth_config.hpp"
#include "estrnn/train_config.hpp"

namespace estrnn {

using Json = nlohmann::json;

// Strict JSON binding for the config structs: every key must name a known
// field of the right type, otherwise a ConfigError lists the valid keys.
// `section` prefixes error messages ("model", "train", "synthesis").

Json config_to_json(const ModelConfig& cfg);
Json config_to_json(const TrainConfig& cfg);
Json config_to_json(const SynthesisConfig& cfg);

void config_apply_json(ModelConfig& cfg, const Json& j, const std::string& section);
void config_apply_json(TrainConfig& cfg, const Json& j, const std::string& section);
void config_apply_json(SynthesisConfig& cfg, const Json& j, const std::string& section);

// Applies one "field=value" override where value is textual.
void config_apply_override(ModelConfig& cfg, const std::string& key, const std::string& value,
                           const std::string& section);
void config_apply_override(TrainConfig& cfg, const std::string& key, const std::string& value,
                           const std::string& section);
void config_apply_override(SynthesisConfig& cfg, const std::string& key, const std::string& value,
                           const std::string& section);

std::vector<std::string> config_keys(const ModelConfig&);
std::vector<std::string> config_keys(const TrainConfig&);
std::vector<std::string> config_keys(const SynthesisConfig&);

std::string model_config_to_string(const ModelConfig& cfg);
ModelConfig model_config_from_string(const std::string& text);

}  // namespace estrnn
