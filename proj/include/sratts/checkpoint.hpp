#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sratts/corpus.hpp"
#include "sratts/model.hpp"

namespace sratts {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// On disk: magic "SRCK", u32 format version, u64 header length, a JSON
// header (config, variant, speakers, frame spec, array index), then every
// array as little-endian float32 in header order.
struct Checkpoint {
  ModelConfig config;
  ParameterSet parameters;
  std::vector<std::string> speakers;
  AudioFrameSpec frame_spec;

  FastSpeechModel model() const { return FastSpeechModel(config, parameters); }
};

void save_checkpoint(const std::filesystem::path& path,
                     const FastSpeechModel& model,
                     const std::vector<std::string>& speakers,
                     const AudioFrameSpec& frame_spec);

// Validates every expected parameter name and shape against the config in
// the header.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sratts
