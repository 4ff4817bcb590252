#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sratts/corpus.hpp"
#include "sratts/nn.hpp"

namespace sratts {

enum class DurationPredictorVariant { kBaseline, kSraE, kSraB };

std::string to_string(DurationPredictorVariant variant);
// Accepts "baseline", "sra-e", "sra-b" (also "sra_e", "sra_b").
DurationPredictorVariant parse_variant(const std::string& text);

inline bool is_sra(DurationPredictorVariant v) {
  return v != DurationPredictorVariant::kBaseline;
}

struct ModelConfig {
  int n_encoder_layers = 6;
  int n_decoder_layers = 6;
  int n_heads = 1;
  int d_model = 384;
  int d_ff = 1536;
  int d_attn = 64;       // per-head attention width
  int d_duration = 256;  // duration-predictor feature width
  int n_mels = 80;
  int vocab_size = 75;
  int n_speakers = 1;
  DurationPredictorVariant variant = DurationPredictorVariant::kBaseline;
  int max_frames = 2048;
  int ffn_kernel = 3;
  int duration_kernel = 3;

  // 6+6 layers, single head, 384/1536/64/256; vocabulary and mel count are
  // assumptions (75 phonemes, 80 mels).
  static ModelConfig full(DurationPredictorVariant variant);
  // Small model used for desk-scale experiments.
  static ModelConfig toy(DurationPredictorVariant variant, int vocab_size,
                         int n_mels, int n_speakers);

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Exact trainable-scalar count, computed from the configuration alone.
std::size_t count_parameters(const ModelConfig& config);
// Scalars owned by the SR conditioner (zero for the baseline variant).
std::size_t count_conditioner_parameters(const ModelConfig& config);

enum class DurationStage { kPre, kPost };

struct DurationPrediction {
  Eigen::VectorXd log_durations;  // raw predictor output, target log(d + 1)
  std::vector<double> durations;  // exp(output) - 1, floored at kMinDuration
};

// Scalar fed to the SR projection (seconds per token, unscaled).
inline double sr_feature(double sr) { return sr; }

// Floor applied when decoding log-durations so predictions stay positive.
inline constexpr double kMinDuration = 1e-3;

struct LossBreakdown {
  double mel_loss = 0.0;
  double duration_loss = 0.0;
  double total = 0.0;
};

// Mean squared error over all elements.
double mel_loss(const Mat& predicted, const Mat& target);
// Mean squared error between predicted log-durations and log(target + 1).
double duration_loss(const Eigen::VectorXd& predicted_log,
                     const std::vector<int>& target_frames);

// One teacher-forced training item.
struct TrainingExample {
  std::vector<TokenId> tokens;
  int speaker = 0;
  std::vector<int> durations;
  Mat mel;  // sum(durations) x n_mels
  double speaking_rate = 0.0;
};

struct TrainOutput {
  Mat mel;
  DurationPrediction durations;
};

// Row i of `features` repeated durations[i] times.
Mat length_regulate(const Mat& features, const std::vector<int>& durations);

// FastSpeech-style encoder / duration predictor / decoder with the duration
// predictor optionally conditioned on a speaking rate through a single-key
// cross-attention block (the SR conditioner).
//
// Parameters are immutable during inference, so any number of threads may
// call the const methods concurrently.
class FastSpeechModel {
 public:
  FastSpeechModel(const ModelConfig& config, std::uint64_t seed);
  // Adopts an existing parameter set; names and shapes must match `config`.
  FastSpeechModel(const ModelConfig& config, ParameterSet parameters);

  const ModelConfig& config() const { return config_; }
  const ParameterSet& parameters() const { return params_; }
  ParameterSet& parameters() { return params_; }

  // Names of the arrays that exist only because of SR conditioning.
  std::vector<std::string> conditioner_parameter_names() const;

  Mat encode(const std::vector<TokenId>& tokens, int speaker) const;
  Mat duration_features(const Mat& encoder_out, DurationStage stage,
                        std::optional<double> sr = std::nullopt) const;
  RowVec sr_embed(double sr) const;
  // Attention context before the output projection: T x d_attn.
  Mat sr_attention_context(const Mat& duration_feats,
                           const RowVec& sr_feats) const;
  // duration_feats + output_projection(context).
  Mat sr_attention(const Mat& duration_feats, const RowVec& sr_feats) const;
  DurationPrediction predict_durations(const Mat& encoder_out,
                                       std::optional<double> sr) const;
  Mat decode(const Mat& frames) const;

  TrainOutput forward_train(const TrainingExample& example) const;

  // Total loss of one example; accumulates d(loss)/d(params) into `grads`
  // when non-null (grads must come from parameters().zeros_like()).
  LossBreakdown loss_and_gradient(const TrainingExample& example,
                                  ParameterSet* grads) const;

 private:
  struct Conditioner {
    nn::Linear projection;  // 1 -> d_duration
    nn::Attention attention;
  };
  struct DurationPredictorLayers {
    nn::Linear input;
    nn::Conv1d conv1;
    nn::LayerNorm norm1;
    nn::Conv1d conv2;
    nn::LayerNorm norm2;
    nn::Linear output;
    std::optional<Conditioner> conditioner;
  };
  struct ConditionerCache {
    Mat sr_input;
    Mat sr_feats;
    nn::Attention::Cache attention;
  };
  struct DurationCache {
    Mat encoder_out;
    Mat pre;
    ConditionerCache conditioner;
    Mat conv1_cols;
    Mat relu1;
    nn::LayerNorm::Cache norm1;
    Mat conv2_cols;
    Mat relu2;
    nn::LayerNorm::Cache norm2;
    Mat dense_input;
  };
  struct Tape;

  void build();
  void initialize(std::uint64_t seed);
  void check_tokens(const std::vector<TokenId>& tokens, int speaker) const;
  void check_sr(std::optional<double> sr) const;

  Mat encode_impl(const std::vector<TokenId>& tokens, int speaker,
                  std::vector<nn::FftBlock::Cache>* caches) const;
  Mat condition(const Mat& feats, double sr, ConditionerCache* cache) const;
  Mat condition_backward(ParameterSet& g, const ConditionerCache& cache,
                         const Mat& dy) const;
  Mat duration_stack(const Mat& encoder_out, std::optional<double> sr,
                     DurationStage stop, DurationCache* cache) const;
  Eigen::VectorXd duration_output(const Mat& encoder_out,
                                  std::optional<double> sr,
                                  DurationCache* cache) const;
  Mat duration_backward(ParameterSet& g, const DurationCache& cache,
                        const Eigen::VectorXd& dlog) const;
  Mat decode_impl(const Mat& frames,
                  std::vector<nn::FftBlock::Cache>* caches) const;

  ModelConfig config_;
  ParameterSet params_;
  std::size_t token_embedding_ = 0;
  std::size_t speaker_embedding_ = 0;
  std::vector<nn::FftBlock> encoder_;
  DurationPredictorLayers duration_;
  std::vector<nn::FftBlock> decoder_;
  nn::Linear mel_head_;
  Mat positions_;
};

DurationPrediction decode_log_durations(const Eigen::VectorXd& log_durations);

}  // namespace sratts
