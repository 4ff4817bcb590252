#include "sratts/model.hpp"

#include <algorithm>
#include <cmath>

#include "sratts/error.hpp"
#include "sratts/random.hpp"

namespace sratts {

std::string to_string(DurationPredictorVariant variant) {
  switch (variant) {
    case DurationPredictorVariant::kBaseline: return "baseline";
    case DurationPredictorVariant::kSraE: return "sra-e";
    case DurationPredictorVariant::kSraB: return "sra-b";
  }
  return "unknown";
}

DurationPredictorVariant parse_variant(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) {
    return c == '_' ? '-' : static_cast<char>(std::tolower(c));
  });
  if (t == "baseline") return DurationPredictorVariant::kBaseline;
  if (t == "sra-e") return DurationPredictorVariant::kSraE;
  if (t == "sra-b") return DurationPredictorVariant::kSraB;
  throw Error(ErrorKind::kConfiguration,
              "unknown variant '" + text + "' (expected baseline, sra-e, sra-b)");
}

ModelConfig ModelConfig::full(DurationPredictorVariant variant) {
  ModelConfig c;
  c.variant = variant;
  return c;
}

ModelConfig ModelConfig::toy(DurationPredictorVariant variant, int vocab_size,
                             int n_mels, int n_speakers) {
  ModelConfig c;
  c.n_encoder_layers = 2;
  c.n_decoder_layers = 1;
  c.n_heads = 1;
  c.d_model = 32;
  c.d_ff = 64;
  c.d_attn = 16;
  c.d_duration = 32;
  c.n_mels = n_mels;
  c.vocab_size = vocab_size;
  c.n_speakers = n_speakers;
  c.variant = variant;
  c.max_frames = 1024;
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) {
      throw Error(ErrorKind::kConfiguration,
                  std::string("model config: ") + name + " must be positive");
    }
  };
  if (n_encoder_layers < 0 || n_decoder_layers < 0) {
    throw Error(ErrorKind::kConfiguration, "model config: negative layer count");
  }
  positive(n_heads, "n_heads");
  positive(d_model, "d_model");
  positive(d_ff, "d_ff");
  positive(d_attn, "d_attn");
  positive(d_duration, "d_duration");
  positive(n_mels, "n_mels");
  positive(vocab_size, "vocab_size");
  positive(n_speakers, "n_speakers");
  positive(max_frames, "max_frames");
  if (ffn_kernel % 2 == 0 || ffn_kernel < 1 || duration_kernel % 2 == 0 ||
      duration_kernel < 1) {
    throw Error(ErrorKind::kConfiguration, "model config: kernels must be odd");
  }
}

namespace {

std::size_t attention_count(std::size_t q_dim, std::size_t kv_dim,
                            std::size_t out_dim, std::size_t heads,
                            std::size_t head_dim) {
  const std::size_t inner = heads * head_dim;
  return (q_dim * inner + inner) + 2 * (kv_dim * inner + inner) +
         (inner * out_dim + out_dim);
}

}  // namespace

std::size_t count_conditioner_parameters(const ModelConfig& c) {
  if (!is_sra(c.variant)) return 0;
  const std::size_t dd = c.d_duration;
  return (dd + dd) + attention_count(dd, dd, dd, 1, c.d_attn);
}

std::size_t count_parameters(const ModelConfig& c) {
  c.validate();
  const std::size_t d = c.d_model;
  const std::size_t ff = c.d_ff;
  const std::size_t k = c.ffn_kernel;
  const std::size_t dd = c.d_duration;
  const std::size_t kd = c.duration_kernel;
  const std::size_t block = attention_count(d, d, d, c.n_heads, c.d_attn) +
                            2 * (2 * d) + (k * d * ff + ff) + (k * ff * d + d);
  const std::size_t embeddings =
      static_cast<std::size_t>(c.vocab_size) * d + c.n_speakers * d;
  const std::size_t duration = (d * dd + dd) + 2 * (kd * dd * dd + dd) +
                               2 * (2 * dd) + (dd + 1);
  const std::size_t mel_head = d * c.n_mels + c.n_mels;
  return embeddings + block * (c.n_encoder_layers + c.n_decoder_layers) +
         duration + count_conditioner_parameters(c) + mel_head;
}

double mel_loss(const Mat& predicted, const Mat& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "mel loss: shape mismatch");
  }
  if (predicted.size() == 0) return 0.0;
  return (predicted - target).squaredNorm() / static_cast<double>(predicted.size());
}

double duration_loss(const Eigen::VectorXd& predicted_log,
                     const std::vector<int>& target_frames) {
  if (static_cast<std::size_t>(predicted_log.size()) != target_frames.size()) {
    throw Error(ErrorKind::kShapeMismatch, "duration loss: length mismatch");
  }
  if (target_frames.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < target_frames.size(); ++i) {
    const double diff = predicted_log(i) - std::log(target_frames[i] + 1.0);
    sum += diff * diff;
  }
  return sum / static_cast<double>(target_frames.size());
}

Mat length_regulate(const Mat& features, const std::vector<int>& durations) {
  if (static_cast<std::size_t>(features.rows()) != durations.size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "length regulator: durations do not match token count");
  }
  long total = 0;
  for (int d : durations) {
    if (d < 0) {
      throw Error(ErrorKind::kInvalidUtterance,
                  "length regulator: negative duration");
    }
    total += d;
  }
  if (total < 1) {
    throw Error(ErrorKind::kInvalidUtterance,
                "length regulator: durations sum to zero");
  }
  Mat out(total, features.cols());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    for (int r = 0; r < durations[i]; ++r) out.row(row++) = features.row(i);
  }
  return out;
}

DurationPrediction decode_log_durations(const Eigen::VectorXd& log_durations) {
  DurationPrediction out;
  out.log_durations = log_durations;
  out.durations.reserve(log_durations.size());
  for (Eigen::Index i = 0; i < log_durations.size(); ++i) {
    out.durations.push_back(
        std::max(std::exp(log_durations(i)) - 1.0, kMinDuration));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct FastSpeechModel::Tape {
  std::vector<nn::FftBlock::Cache> encoder;
  Mat encoder_out;
  DurationCache duration;
  std::vector<nn::FftBlock::Cache> decoder;
  Mat decoder_out;
};

FastSpeechModel::FastSpeechModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  build();
  initialize(seed);
}

FastSpeechModel::FastSpeechModel(const ModelConfig& config,
                                 ParameterSet parameters)
    : config_(config) {
  config_.validate();
  build();
  if (parameters.size() != params_.size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "parameter set has " + std::to_string(parameters.size()) +
                    " arrays, model expects " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& expected = params_.at(i);
    const std::size_t j = parameters.find(expected.name);
    if (j == ParameterSet::npos) {
      throw Error(ErrorKind::kShapeMismatch,
                  "missing parameter " + expected.name);
    }
    const Mat& v = parameters[j];
    if (v.rows() != expected.value.rows() || v.cols() != expected.value.cols()) {
      throw Error(ErrorKind::kShapeMismatch,
                  "parameter " + expected.name + " has shape " +
                      std::to_string(v.rows()) + "x" + std::to_string(v.cols()) +
                      ", expected " + std::to_string(expected.value.rows()) +
                      "x" + std::to_string(expected.value.cols()));
    }
    params_[i] = v;
  }
}

void FastSpeechModel::build() {
  const auto& c = config_;
  auto& p = params_;
  const auto enc = ParamGroup::kEncoder;
  const auto dec = ParamGroup::kDecoder;
  const auto dur = ParamGroup::kDurationPredictor;

  token_embedding_ = p.add("encoder.token_embedding", enc, c.vocab_size, c.d_model);
  speaker_embedding_ =
      p.add("encoder.speaker_embedding", enc, c.n_speakers, c.d_model);
  for (int i = 0; i < c.n_encoder_layers; ++i) {
    encoder_.push_back(nn::FftBlock::make(
        p, "encoder.layers." + std::to_string(i), enc, c.d_model, c.d_ff,
        c.n_heads, c.d_attn, c.ffn_kernel));
  }

  auto& dp = duration_;
  dp.input = nn::Linear::make(p, "duration.input", dur, c.d_model, c.d_duration);
  dp.conv1 = nn::Conv1d::make(p, "duration.conv1", dur, c.d_duration,
                              c.d_duration, c.duration_kernel);
  dp.norm1 = nn::LayerNorm::make(p, "duration.norm1", dur, c.d_duration);
  dp.conv2 = nn::Conv1d::make(p, "duration.conv2", dur, c.d_duration,
                              c.d_duration, c.duration_kernel);
  dp.norm2 = nn::LayerNorm::make(p, "duration.norm2", dur, c.d_duration);
  dp.output = nn::Linear::make(p, "duration.output", dur, c.d_duration, 1);
  if (is_sra(c.variant)) {
    Conditioner cond;
    cond.projection =
        nn::Linear::make(p, "duration.sr.projection", dur, 1, c.d_duration);
    cond.attention =
        nn::Attention::make(p, "duration.sr.attention", dur, c.d_duration,
                            c.d_duration, c.d_duration, 1, c.d_attn);
    dp.conditioner = cond;
  }

  for (int i = 0; i < c.n_decoder_layers; ++i) {
    decoder_.push_back(nn::FftBlock::make(
        p, "decoder.layers." + std::to_string(i), dec, c.d_model, c.d_ff,
        c.n_heads, c.d_attn, c.ffn_kernel));
  }
  mel_head_ = nn::Linear::make(p, "decoder.mel_head", dec, c.d_model, c.n_mels);
  positions_ = nn::sinusoidal_positions(c.max_frames, c.d_model);
}

void FastSpeechModel::initialize(std::uint64_t seed) {
  Rng rng(seed);
  auto& p = params_;
  auto linear = [&](const nn::Linear& l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    nn::init_uniform(p[l.weight], bound, rng);
    nn::init_uniform(p[l.bias], bound, rng);
  };
  auto conv = [&](const nn::Conv1d& cv) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cv.kernel * cv.in));
    nn::init_uniform(p[cv.weight], bound, rng);
    nn::init_uniform(p[cv.bias], bound, rng);
  };
  auto attention = [&](const nn::Attention& a) {
    linear(a.query);
    linear(a.key);
    linear(a.value);
    linear(a.output);
  };
  auto block = [&](const nn::FftBlock& b) {
    attention(b.attention);
    conv(b.ff_in);
    conv(b.ff_out);
  };

  Mat& emb = p[token_embedding_];
  for (Eigen::Index i = 0; i < emb.size(); ++i) emb.data()[i] = rng.normal();
  Mat& spk = p[speaker_embedding_];
  for (Eigen::Index i = 0; i < spk.size(); ++i) spk.data()[i] = 0.1 * rng.normal();
  for (const auto& b : encoder_) block(b);
  linear(duration_.input);
  conv(duration_.conv1);
  conv(duration_.conv2);
  linear(duration_.output);
  if (duration_.conditioner) {
    const auto& cond = *duration_.conditioner;
    linear(cond.projection);
    linear(cond.attention.query);
    linear(cond.attention.key);
    linear(cond.attention.value);
    // A zero output map makes conditioning inert at init. The value map
    // stays random: zeroing both would leave each without gradient.
    p[cond.attention.output.weight].setZero();
    p[cond.attention.output.bias].setZero();
  }
  for (const auto& b : decoder_) block(b);
  linear(mel_head_);
}

std::vector<std::string> FastSpeechModel::conditioner_parameter_names() const {
  std::vector<std::string> names;
  for (const auto& prm : params_) {
    if (prm.name.rfind("duration.sr.", 0) == 0) names.push_back(prm.name);
  }
  return names;
}

void FastSpeechModel::check_tokens(const std::vector<TokenId>& tokens,
                                   int speaker) const {
  if (tokens.empty()) {
    throw Error(ErrorKind::kInvalidUtterance, "empty token sequence");
  }
  if (static_cast<int>(tokens.size()) > config_.max_frames) {
    throw Error(ErrorKind::kPositionalHorizon,
                "token sequence longer than the positional horizon");
  }
  for (TokenId t : tokens) {
    if (t < 0 || t >= config_.vocab_size) {
      throw Error(ErrorKind::kOutOfRange,
                  "token id " + std::to_string(t) + " outside vocabulary of " +
                      std::to_string(config_.vocab_size));
    }
  }
  if (speaker < 0 || speaker >= config_.n_speakers) {
    throw Error(ErrorKind::kOutOfRange,
                "speaker id " + std::to_string(speaker) + " outside " +
                    std::to_string(config_.n_speakers) + " speakers");
  }
}

void FastSpeechModel::check_sr(std::optional<double> sr) const {
  if (is_sra(config_.variant)) {
    if (!sr) {
      throw Error(ErrorKind::kConfiguration,
                  to_string(config_.variant) + " duration predictor needs a speaking rate");
    }
    if (!(*sr > 0.0)) {
      throw Error(ErrorKind::kConfiguration, "speaking rate must be positive");
    }
  } else if (sr) {
    throw Error(ErrorKind::kConfiguration,
                "baseline duration predictor takes no speaking rate");
  }
}

// ---------------------------------------------------------------------------

Mat FastSpeechModel::encode_impl(const std::vector<TokenId>& tokens,
                                 int speaker,
                                 std::vector<nn::FftBlock::Cache>* caches) const {
  check_tokens(tokens, speaker);
  const Eigen::Index t_len = static_cast<Eigen::Index>(tokens.size());
  Mat x(t_len, config_.d_model);
  for (Eigen::Index i = 0; i < t_len; ++i) {
    x.row(i) = params_[token_embedding_].row(tokens[i]) + positions_.row(i);
  }
  if (caches != nullptr) caches->resize(encoder_.size());
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    x = encoder_[l].forward(params_, x, caches ? &(*caches)[l] : nullptr);
  }
  x.rowwise() += params_[speaker_embedding_].row(speaker);
  return x;
}

Mat FastSpeechModel::encode(const std::vector<TokenId>& tokens,
                            int speaker) const {
  return encode_impl(tokens, speaker, nullptr);
}

RowVec FastSpeechModel::sr_embed(double sr) const {
  if (!duration_.conditioner) {
    throw Error(ErrorKind::kConfiguration, "baseline model has no SR conditioner");
  }
  if (!(sr > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "speaking rate must be positive");
  }
  Mat in(1, 1);
  in(0, 0) = sr_feature(sr);
  return duration_.conditioner->projection.forward(params_, in).row(0);
}

Mat FastSpeechModel::sr_attention_context(const Mat& duration_feats,
                                          const RowVec& sr_feats) const {
  if (!duration_.conditioner) {
    throw Error(ErrorKind::kConfiguration, "baseline model has no SR conditioner");
  }
  if (duration_feats.cols() != config_.d_duration ||
      sr_feats.size() != config_.d_duration) {
    throw Error(ErrorKind::kShapeMismatch, "SR attention: feature width mismatch");
  }
  return duration_.conditioner->attention.context(params_, duration_feats,
                                                  Mat(sr_feats), nullptr);
}

Mat FastSpeechModel::sr_attention(const Mat& duration_feats,
                                  const RowVec& sr_feats) const {
  const Mat ctx = sr_attention_context(duration_feats, sr_feats);
  return duration_feats +
         duration_.conditioner->attention.output.forward(params_, ctx);
}

Mat FastSpeechModel::condition(const Mat& feats, double sr,
                               ConditionerCache* cache) const {
  const Conditioner& cond = *duration_.conditioner;
  Mat sr_in(1, 1);
  sr_in(0, 0) = sr_feature(sr);
  Mat sr_feats = cond.projection.forward(params_, sr_in);
  Mat out = feats + cond.attention.forward(params_, feats, sr_feats,
                                           cache ? &cache->attention : nullptr);
  if (cache != nullptr) {
    cache->sr_input = std::move(sr_in);
    cache->sr_feats = std::move(sr_feats);
  }
  return out;
}

Mat FastSpeechModel::condition_backward(ParameterSet& g,
                                        const ConditionerCache& cache,
                                        const Mat& dy) const {
  const Conditioner& cond = *duration_.conditioner;
  auto [dq, dkv] = cond.attention.backward(params_, g, cache.attention, dy);
  cond.projection.backward(params_, g, cache.sr_input, dkv);
  return dy + dq;
}

Mat FastSpeechModel::duration_stack(const Mat& encoder_out,
                                    std::optional<double> sr,
                                    DurationStage stop,
                                    DurationCache* cache) const {
  const auto& dp = duration_;
  if (encoder_out.cols() != config_.d_model) {
    throw Error(ErrorKind::kShapeMismatch,
                "duration predictor expects " + std::to_string(config_.d_model) +
                    " input features");
  }
  Mat pre = dp.input.forward(params_, encoder_out);
  if (stop == DurationStage::kPre) return pre;
  Mat x = pre;
  ConditionerCache* cc = cache ? &cache->conditioner : nullptr;
  if (config_.variant == DurationPredictorVariant::kSraB) {
    x = condition(x, *sr, cc);
  }
  Mat r1 = nn::relu(dp.conv1.forward(params_, x, cache ? &cache->conv1_cols : nullptr));
  Mat n1 = dp.norm1.forward(params_, r1, cache ? &cache->norm1 : nullptr);
  Mat r2 = nn::relu(dp.conv2.forward(params_, n1, cache ? &cache->conv2_cols : nullptr));
  Mat n2 = dp.norm2.forward(params_, r2, cache ? &cache->norm2 : nullptr);
  if (cache != nullptr) {
    cache->encoder_out = encoder_out;
    cache->pre = std::move(pre);
    cache->relu1 = std::move(r1);
    cache->relu2 = std::move(r2);
  }
  return n2;
}

Mat FastSpeechModel::duration_features(const Mat& encoder_out,
                                       DurationStage stage,
                                       std::optional<double> sr) const {
  if (stage == DurationStage::kPost &&
      config_.variant == DurationPredictorVariant::kSraB) {
    check_sr(sr);
  }
  return duration_stack(encoder_out, sr, stage, nullptr);
}

Eigen::VectorXd FastSpeechModel::duration_output(const Mat& encoder_out,
                                                 std::optional<double> sr,
                                                 DurationCache* cache) const {
  check_sr(sr);
  Mat post = duration_stack(encoder_out, sr, DurationStage::kPost, cache);
  if (config_.variant == DurationPredictorVariant::kSraE) {
    post = condition(post, *sr, cache ? &cache->conditioner : nullptr);
  }
  Mat out = duration_.output.forward(params_, post);
  if (cache != nullptr) cache->dense_input = std::move(post);
  return out.col(0);
}

DurationPrediction FastSpeechModel::predict_durations(
    const Mat& encoder_out, std::optional<double> sr) const {
  return decode_log_durations(duration_output(encoder_out, sr, nullptr));
}

Mat FastSpeechModel::duration_backward(ParameterSet& g,
                                       const DurationCache& c,
                                       const Eigen::VectorXd& dlog) const {
  const auto& dp = duration_;
  Mat dpost = dp.output.backward(params_, g, c.dense_input, Mat(dlog));
  if (config_.variant == DurationPredictorVariant::kSraE) {
    dpost = condition_backward(g, c.conditioner, dpost);
  }
  Mat d = dp.norm2.backward(params_, g, c.norm2, dpost);
  d = nn::relu_backward(c.relu2, d);
  d = dp.conv2.backward(params_, g, c.conv2_cols, d);
  d = dp.norm1.backward(params_, g, c.norm1, d);
  d = nn::relu_backward(c.relu1, d);
  d = dp.conv1.backward(params_, g, c.conv1_cols, d);
  if (config_.variant == DurationPredictorVariant::kSraB) {
    d = condition_backward(g, c.conditioner, d);
  }
  return dp.input.backward(params_, g, c.encoder_out, d);
}

Mat FastSpeechModel::decode_impl(const Mat& frames,
                                 std::vector<nn::FftBlock::Cache>* caches) const {
  if (frames.rows() < 1) {
    throw Error(ErrorKind::kInvalidUtterance, "decoder needs at least one frame");
  }
  if (frames.rows() > config_.max_frames) {
    throw Error(ErrorKind::kPositionalHorizon,
                std::to_string(frames.rows()) + " frames exceed the positional horizon of " +
                    std::to_string(config_.max_frames));
  }
  if (frames.cols() != config_.d_model) {
    throw Error(ErrorKind::kShapeMismatch, "decoder input width mismatch");
  }
  Mat x = frames + positions_.topRows(frames.rows());
  if (caches != nullptr) caches->resize(decoder_.size());
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    x = decoder_[l].forward(params_, x, caches ? &(*caches)[l] : nullptr);
  }
  return x;
}

Mat FastSpeechModel::decode(const Mat& frames) const {
  return mel_head_.forward(params_, decode_impl(frames, nullptr));
}

TrainOutput FastSpeechModel::forward_train(const TrainingExample& ex) const {
  const Mat enc = encode(ex.tokens, ex.speaker);
  std::optional<double> sr;
  if (is_sra(config_.variant)) sr = ex.speaking_rate;
  TrainOutput out;
  out.durations = predict_durations(enc, sr);
  out.mel = decode(length_regulate(enc, ex.durations));
  return out;
}

LossBreakdown FastSpeechModel::loss_and_gradient(const TrainingExample& ex,
                                                 ParameterSet* grads) const {
  Tape tape;
  const bool want_grad = grads != nullptr;
  tape.encoder_out = encode_impl(ex.tokens, ex.speaker, want_grad ? &tape.encoder : nullptr);
  std::optional<double> sr;
  if (is_sra(config_.variant)) sr = ex.speaking_rate;
  const Eigen::VectorXd log_dur =
      duration_output(tape.encoder_out, sr, want_grad ? &tape.duration : nullptr);
  const Mat frames = length_regulate(tape.encoder_out, ex.durations);
  tape.decoder_out = decode_impl(frames, want_grad ? &tape.decoder : nullptr);
  const Mat mel = mel_head_.forward(params_, tape.decoder_out);
  if (mel.rows() != ex.mel.rows() || mel.cols() != ex.mel.cols()) {
    throw Error(ErrorKind::kShapeMismatch,
                "target mel has " + std::to_string(ex.mel.rows()) + "x" +
                    std::to_string(ex.mel.cols()) + ", prediction " +
                    std::to_string(mel.rows()) + "x" + std::to_string(mel.cols()));
  }

  LossBreakdown loss;
  loss.mel_loss = mel_loss(mel, ex.mel);
  loss.duration_loss = duration_loss(log_dur, ex.durations);
  loss.total = loss.mel_loss + loss.duration_loss;
  if (!want_grad) return loss;

  ParameterSet& g = *grads;
  const Mat dmel = (mel - ex.mel) * (2.0 / static_cast<double>(mel.size()));
  Eigen::VectorXd dlog(log_dur.size());
  for (Eigen::Index i = 0; i < log_dur.size(); ++i) {
    dlog(i) = 2.0 * (log_dur(i) - std::log(ex.durations[i] + 1.0)) /
              static_cast<double>(log_dur.size());
  }

  Mat d = mel_head_.backward(params_, g, tape.decoder_out, dmel);
  for (std::size_t l = decoder_.size(); l-- > 0;) {
    d = decoder_[l].backward(params_, g, tape.decoder[l], d);
  }
  // Length regulator backward: each token collects the rows it produced.
  Mat denc = Mat::Zero(tape.encoder_out.rows(), tape.encoder_out.cols());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < ex.durations.size(); ++i) {
    for (int r = 0; r < ex.durations[i]; ++r) denc.row(i) += d.row(row++);
  }
  denc += duration_backward(g, tape.duration, dlog);
  g[speaker_embedding_].row(ex.speaker) += denc.colwise().sum();
  for (std::size_t l = encoder_.size(); l-- > 0;) {
    denc = encoder_[l].backward(params_, g, tape.encoder[l], denc);
  }
  for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
    g[token_embedding_].row(ex.tokens[i]) += denc.row(i);
  }
  return loss;
}

}  // namespace sratts
