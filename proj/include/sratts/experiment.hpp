#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sratts/config_json.hpp"
#include "sratts/corpus.hpp"
#include "sratts/model.hpp"
#include "sratts/training.hpp"

namespace sratts {

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// One file drives one experiment. Omitted fields keep their defaults.
struct ExperimentConfig {
  AudioFrameSpec frame_spec;
  std::string model_preset = "toy";  // "toy" or "full"; dims below override
  std::optional<ModelConfig> model;
  TrainConfig train;
  std::string selection = "rs";
  double selection_hours = 1.0;
  bool per_speaker = true;
  std::string factors = "default";  // default | from-stats | comma list
  SyntheticLawParams synthetic;
  std::string data_dir;
  std::string output_dir;
  std::uint64_t seed = 0;

  bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// SRATTS_SEED when set and parseable, otherwise `fallback`.
std::uint64_t seed_from_environment(std::uint64_t fallback);

}  // namespace sratts
