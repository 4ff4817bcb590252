#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sratts/checkpoint.hpp"
#include "sratts/corpus.hpp"
#include "sratts/model.hpp"

namespace sratts {

struct TrainConfig {
  int epochs = 500;
  int batch_size = 24;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // epochs; 0 disables intermediate checkpoints
  double grad_clip = 1.0;    // global L2 norm; <= 0 disables

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct FreezeConfig {
  bool freeze_encoder = false;
  bool freeze_decoder = false;

  // "ft1" freezes encoder and decoder, "ft2" the decoder, "ft3" nothing.
  static FreezeConfig preset(const std::string& name);
  bool operator==(const FreezeConfig&) const = default;
};

// True where the parameter is trainable. The duration predictor (and its SR
// conditioner) is always trainable.
std::vector<bool> apply_freeze(const ParameterSet& params,
                               const FreezeConfig& freeze);

class AdamOptimizer {
 public:
  AdamOptimizer(const ParameterSet& params, const TrainConfig& config);

  // Skips entries whose mask is false; their moments are left untouched.
  void step(ParameterSet& params, const ParameterSet& grads,
            const std::vector<bool>& trainable);

  long steps() const { return step_; }

 private:
  TrainConfig config_;
  ParameterSet first_;
  ParameterSet second_;
  long step_ = 0;
};

// Scales masked-in gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_global_norm(ParameterSet& grads, const std::vector<bool>& trainable,
                        double max_norm);

// Speaker strings map to their index in `speakers`.
TrainingExample make_example(const UtteranceRecord& record,
                             const std::vector<std::string>& speakers);
int speaker_index(const std::vector<std::string>& speakers,
                  const std::string& speaker_id);

// Losses of a batch padded along the token and frame axes. Entries at or
// beyond valid_* are padding and never read. Each item contributes its
// per-element mean over valid entries; items are then averaged.
double masked_mel_loss(const std::vector<Mat>& predicted,
                       const std::vector<Mat>& target,
                       const std::vector<Eigen::Index>& valid_frames);
double masked_duration_loss(const std::vector<Eigen::VectorXd>& predicted_log,
                            const std::vector<std::vector<int>>& target_frames,
                            const std::vector<Eigen::Index>& valid_tokens);

struct TrainOptions {
  FreezeConfig freeze;
  std::vector<std::string> speakers;  // empty: derived from the corpus
  AudioFrameSpec frame_spec;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoint files
  std::function<void(int epoch, const LossBreakdown&)> on_epoch;
};

struct TrainResult {
  std::vector<LossBreakdown> history;  // one entry per epoch
  std::vector<std::filesystem::path> checkpoints;
};

// Deterministic given config.seed: a fixed shuffle per epoch and in-order
// gradient accumulation. Throws Error{kDivergence} on a non-finite loss.
TrainResult train(FastSpeechModel& model, const Corpus& corpus,
                  const TrainConfig& config, const TrainOptions& options = {});

void write_loss_history_csv(const std::filesystem::path& path,
                            const std::vector<LossBreakdown>& history);

struct FinetuneSetup {
  FastSpeechModel model;
  std::vector<std::string> initialized;  // arrays not copied from the checkpoint
};

// Builds an SRA model from a baseline checkpoint: every array whose name and
// shape match is copied, the SR conditioner is freshly initialized.
// `target` must equal the checkpoint config apart from the variant.
FinetuneSetup prepare_finetune(const Checkpoint& pretrained,
                               const ModelConfig& target, std::uint64_t seed);
FinetuneSetup prepare_finetune(const Checkpoint& pretrained,
                               DurationPredictorVariant variant,
                               std::uint64_t seed);

struct FinetuneResult {
  FastSpeechModel model;
  TrainResult training;
};

FinetuneResult finetune(const Checkpoint& pretrained,
                        DurationPredictorVariant variant, const Corpus& corpus,
                        const FreezeConfig& freeze, const TrainConfig& config,
                        TrainOptions options = {});

}  // namespace sratts
