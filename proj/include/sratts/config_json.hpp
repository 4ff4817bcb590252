#pragma once

// JSON conversions for the configuration records shared by checkpoints, the
// experiment file and the CLI.

#include "json.hpp"
#include "sratts/corpus.hpp"
#include "sratts/model.hpp"

namespace sratts {

void to_json(nlohmann::json& j, const AudioFrameSpec& s);
void from_json(const nlohmann::json& j, AudioFrameSpec& s);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const SyntheticLawParams& p);
void from_json(const nlohmann::json& j, SyntheticLawParams& p);

}  // namespace sratts
