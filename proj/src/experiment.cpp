#include "sratts/experiment.hpp"

#include <cstdlib>
#include <fstream>

#include "sratts/error.hpp"

namespace sratts {

using nlohmann::json;

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace

void to_json(json& j, const AudioFrameSpec& s) {
  j = {{"sample_rate", s.sample_rate}, {"hop_length", s.hop_length},
       {"n_mels", s.n_mels}};
}

void from_json(const json& j, AudioFrameSpec& s) {
  get_if(j, "sample_rate", s.sample_rate);
  get_if(j, "hop_length", s.hop_length);
  get_if(j, "n_mels", s.n_mels);
}

void to_json(json& j, const ModelConfig& c) {
  j = {{"n_encoder_layers", c.n_encoder_layers},
       {"n_decoder_layers", c.n_decoder_layers},
       {"n_heads", c.n_heads},
       {"d_model", c.d_model},
       {"d_ff", c.d_ff},
       {"d_attn", c.d_attn},
       {"d_duration", c.d_duration},
       {"n_mels", c.n_mels},
       {"vocab_size", c.vocab_size},
       {"n_speakers", c.n_speakers},
       {"variant", to_string(c.variant)},
       {"max_frames", c.max_frames},
       {"ffn_kernel", c.ffn_kernel},
       {"duration_kernel", c.duration_kernel}};
}

void from_json(const json& j, ModelConfig& c) {
  get_if(j, "n_encoder_layers", c.n_encoder_layers);
  get_if(j, "n_decoder_layers", c.n_decoder_layers);
  get_if(j, "n_heads", c.n_heads);
  get_if(j, "d_model", c.d_model);
  get_if(j, "d_ff", c.d_ff);
  get_if(j, "d_attn", c.d_attn);
  get_if(j, "d_duration", c.d_duration);
  get_if(j, "n_mels", c.n_mels);
  get_if(j, "vocab_size", c.vocab_size);
  get_if(j, "n_speakers", c.n_speakers);
  if (auto it = j.find("variant"); it != j.end()) {
    c.variant = parse_variant(it->get<std::string>());
  }
  get_if(j, "max_frames", c.max_frames);
  get_if(j, "ffn_kernel", c.ffn_kernel);
  get_if(j, "duration_kernel", c.duration_kernel);
}

void to_json(json& j, const SyntheticLawParams& p) {
  j = {{"vocab_size", p.vocab_size},
       {"n_utterances", p.n_utterances},
       {"min_tokens", p.min_tokens},
       {"max_tokens", p.max_tokens},
       {"n_speakers", p.n_speakers},
       {"base_min", p.base_min},
       {"base_max", p.base_max},
       {"exponent_min", p.exponent_min},
       {"exponent_max", p.exponent_max},
       {"relative_sr_min", p.relative_sr_min},
       {"relative_sr_max", p.relative_sr_max},
       {"mel_noise", p.mel_noise},
       {"frame_spec", p.frame_spec},
       {"seed", p.seed}};
}

void from_json(const json& j, SyntheticLawParams& p) {
  get_if(j, "vocab_size", p.vocab_size);
  get_if(j, "n_utterances", p.n_utterances);
  get_if(j, "min_tokens", p.min_tokens);
  get_if(j, "max_tokens", p.max_tokens);
  get_if(j, "n_speakers", p.n_speakers);
  get_if(j, "base_min", p.base_min);
  get_if(j, "base_max", p.base_max);
  get_if(j, "exponent_min", p.exponent_min);
  get_if(j, "exponent_max", p.exponent_max);
  get_if(j, "relative_sr_min", p.relative_sr_min);
  get_if(j, "relative_sr_max", p.relative_sr_max);
  get_if(j, "mel_noise", p.mel_noise);
  get_if(j, "frame_spec", p.frame_spec);
  get_if(j, "seed", p.seed);
}

void to_json(json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"epsilon", c.epsilon},
       {"seed", c.seed},
       {"checkpoint_every", c.checkpoint_every},
       {"grad_clip", c.grad_clip}};
}

void from_json(const json& j, TrainConfig& c) {
  get_if(j, "epochs", c.epochs);
  get_if(j, "batch_size", c.batch_size);
  get_if(j, "learning_rate", c.learning_rate);
  get_if(j, "beta1", c.beta1);
  get_if(j, "beta2", c.beta2);
  get_if(j, "epsilon", c.epsilon);
  get_if(j, "seed", c.seed);
  get_if(j, "checkpoint_every", c.checkpoint_every);
  get_if(j, "grad_clip", c.grad_clip);
}

void to_json(json& j, const ExperimentConfig& c) {
  j = {{"frame_spec", c.frame_spec},
       {"model_preset", c.model_preset},
       {"model", c.model ? json(*c.model) : json(nullptr)},
       {"train", c.train},
       {"selection", c.selection},
       {"selection_hours", c.selection_hours},
       {"per_speaker", c.per_speaker},
       {"factors", c.factors},
       {"synthetic", c.synthetic},
       {"data_dir", c.data_dir},
       {"output_dir", c.output_dir},
       {"seed", c.seed}};
}

void from_json(const json& j, ExperimentConfig& c) {
  get_if(j, "frame_spec", c.frame_spec);
  get_if(j, "model_preset", c.model_preset);
  if (auto it = j.find("model"); it != j.end() && !it->is_null()) {
    c.model = it->get<ModelConfig>();
  }
  get_if(j, "train", c.train);
  get_if(j, "selection", c.selection);
  get_if(j, "selection_hours", c.selection_hours);
  get_if(j, "per_speaker", c.per_speaker);
  get_if(j, "factors", c.factors);
  get_if(j, "synthetic", c.synthetic);
  get_if(j, "data_dir", c.data_dir);
  get_if(j, "output_dir", c.output_dir);
  get_if(j, "seed", c.seed);
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingFile, "cannot open config " + path.string());
  try {
    return json::parse(in).get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

std::uint64_t seed_from_environment(std::uint64_t fallback) {
  const char* env = std::getenv("SRATTS_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') return fallback;
  return v;
}

}  // namespace sratts
