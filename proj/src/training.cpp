#include "sratts/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "sratts/error.hpp"
#include "sratts/random.hpp"

namespace sratts {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (epochs < 0) throw Error(ErrorKind::kConfiguration, "epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorKind::kConfiguration, "batch_size must be >= 1");
  if (learning_rate < 0.0) {
    throw Error(ErrorKind::kConfiguration, "learning_rate must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(epsilon > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "invalid Adam hyperparameters");
  }
  if (checkpoint_every < 0) {
    throw Error(ErrorKind::kConfiguration, "checkpoint_every must be >= 0");
  }
}

FreezeConfig FreezeConfig::preset(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (n == "ft1") return {true, true};
  if (n == "ft2") return {false, true};
  if (n == "ft3") return {false, false};
  throw Error(ErrorKind::kConfiguration,
              "unknown freeze preset '" + name + "' (expected ft1, ft2, ft3)");
}

std::vector<bool> apply_freeze(const ParameterSet& params,
                               const FreezeConfig& freeze) {
  std::vector<bool> mask;
  mask.reserve(params.size());
  for (const auto& p : params) {
    switch (p.group) {
      case ParamGroup::kEncoder: mask.push_back(!freeze.freeze_encoder); break;
      case ParamGroup::kDecoder: mask.push_back(!freeze.freeze_decoder); break;
      case ParamGroup::kDurationPredictor: mask.push_back(true); break;
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(const ParameterSet& params,
                             const TrainConfig& config)
    : config_(config), first_(params.zeros_like()), second_(params.zeros_like()) {}

void AdamOptimizer::step(ParameterSet& params, const ParameterSet& grads,
                         const std::vector<bool>& trainable) {
  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!trainable[i]) continue;
    const Mat& g = grads[i];
    Mat& m = first_[i];
    Mat& v = second_[i];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    const auto update = (m.array() / correction1) /
                        ((v.array() / correction2).sqrt() + config_.epsilon);
    params[i].array() -= config_.learning_rate * update;
  }
}

double clip_global_norm(ParameterSet& grads, const std::vector<bool>& trainable,
                        double max_norm) {
  double sq = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (trainable[i]) sq += grads[i].squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (trainable[i]) grads[i] *= scale;
    }
  }
  return norm;
}

// ---------------------------------------------------------------------------

int speaker_index(const std::vector<std::string>& speakers,
                  const std::string& speaker_id) {
  auto it = std::find(speakers.begin(), speakers.end(), speaker_id);
  if (it == speakers.end()) {
    throw Error(ErrorKind::kOutOfRange, "unknown speaker '" + speaker_id + "'");
  }
  return static_cast<int>(it - speakers.begin());
}

TrainingExample make_example(const UtteranceRecord& record,
                             const std::vector<std::string>& speakers) {
  validate_record(record, 0);
  TrainingExample ex;
  ex.tokens = record.tokens;
  ex.speaker = speaker_index(speakers, record.speaker_id);
  ex.durations = record.durations;
  ex.mel = record.mel.cast<double>();
  ex.speaking_rate = record.speaking_rate;
  return ex;
}

double masked_mel_loss(const std::vector<Mat>& predicted,
                       const std::vector<Mat>& target,
                       const std::vector<Eigen::Index>& valid_frames) {
  if (predicted.size() != target.size() || predicted.size() != valid_frames.size() ||
      predicted.empty()) {
    throw Error(ErrorKind::kShapeMismatch, "masked mel loss: batch size mismatch");
  }
  double sum = 0.0;
  for (std::size_t b = 0; b < predicted.size(); ++b) {
    const Eigen::Index n = valid_frames[b];
    sum += mel_loss(predicted[b].topRows(n), target[b].topRows(n));
  }
  return sum / static_cast<double>(predicted.size());
}

double masked_duration_loss(const std::vector<Eigen::VectorXd>& predicted_log,
                            const std::vector<std::vector<int>>& target_frames,
                            const std::vector<Eigen::Index>& valid_tokens) {
  if (predicted_log.size() != target_frames.size() ||
      predicted_log.size() != valid_tokens.size() || predicted_log.empty()) {
    throw Error(ErrorKind::kShapeMismatch,
                "masked duration loss: batch size mismatch");
  }
  double sum = 0.0;
  for (std::size_t b = 0; b < predicted_log.size(); ++b) {
    const Eigen::Index n = valid_tokens[b];
    std::vector<int> target(target_frames[b].begin(), target_frames[b].begin() + n);
    sum += duration_loss(predicted_log[b].head(n), target);
  }
  return sum / static_cast<double>(predicted_log.size());
}

// ---------------------------------------------------------------------------

TrainResult train(FastSpeechModel& model, const Corpus& corpus,
                  const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (corpus.empty()) {
    throw Error(ErrorKind::kEmptyCorpus, "cannot train on an empty corpus");
  }
  const std::vector<std::string> speakers =
      options.speakers.empty() ? speaker_ids(corpus) : options.speakers;
  if (static_cast<int>(speakers.size()) > model.config().n_speakers) {
    throw Error(ErrorKind::kConfiguration,
                "corpus has " + std::to_string(speakers.size()) +
                    " speakers, model supports " +
                    std::to_string(model.config().n_speakers));
  }

  std::vector<TrainingExample> examples;
  examples.reserve(corpus.size());
  for (const auto& r : corpus) examples.push_back(make_example(r, speakers));

  const std::vector<bool> trainable =
      apply_freeze(model.parameters(), options.freeze);
  AdamOptimizer optimizer(model.parameters(), config);
  ParameterSet grads = model.parameters().zeros_like();
  Rng rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    LossBreakdown epoch_loss;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      grads.set_zero();
      for (std::size_t k = start; k < stop; ++k) {
        const LossBreakdown l = model.loss_and_gradient(examples[order[k]], &grads);
        if (!std::isfinite(l.total)) {
          throw Error(ErrorKind::kDivergence,
                      "non-finite loss at epoch " + std::to_string(epoch));
        }
        epoch_loss.mel_loss += l.mel_loss;
        epoch_loss.duration_loss += l.duration_loss;
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < grads.size(); ++i) grads[i] *= inv;
      const double norm = clip_global_norm(grads, trainable, config.grad_clip);
      if (!std::isfinite(norm)) {
        throw Error(ErrorKind::kDivergence,
                    "non-finite gradient at epoch " + std::to_string(epoch));
      }
      optimizer.step(model.parameters(), grads, trainable);
    }
    const double n = static_cast<double>(examples.size());
    epoch_loss.mel_loss /= n;
    epoch_loss.duration_loss /= n;
    epoch_loss.total = epoch_loss.mel_loss + epoch_loss.duration_loss;
    result.history.push_back(epoch_loss);
    if (options.on_epoch) options.on_epoch(epoch, epoch_loss);

    if (!options.checkpoint_dir.empty() &&
        ((config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) ||
         epoch == config.epochs)) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", epoch);
      const fs::path path = options.checkpoint_dir / name;
      save_checkpoint(path, model, speakers, options.frame_spec);
      result.checkpoints.push_back(path);
    }
  }
  return result;
}

void write_loss_history_csv(const fs::path& path,
                            const std::vector<LossBreakdown>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "epoch,mel_loss,duration_loss,total\n";
  char line[128];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g\n", i + 1,
                  history[i].mel_loss, history[i].duration_loss, history[i].total);
    out << line;
  }
}

// ---------------------------------------------------------------------------

FinetuneSetup prepare_finetune(const Checkpoint& pretrained,
                               const ModelConfig& target, std::uint64_t seed) {
  if (pretrained.config.variant != DurationPredictorVariant::kBaseline) {
    throw Error(ErrorKind::kConfiguration,
                "fine-tuning starts from a baseline checkpoint, got " +
                    to_string(pretrained.config.variant));
  }
  if (!is_sra(target.variant)) {
    throw Error(ErrorKind::kConfiguration, "fine-tuning target must be an SRA variant");
  }
  ModelConfig same_dims = target;
  same_dims.variant = pretrained.config.variant;
  if (!(same_dims == pretrained.config)) {
    throw Error(ErrorKind::kShapeMismatch,
                "target configuration does not match the checkpoint dimensions");
  }
  FinetuneSetup setup{FastSpeechModel(target, seed), {}};
  ParameterSet& dst = setup.model.parameters();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const std::size_t j = pretrained.parameters.find(dst.at(i).name);
    if (j != ParameterSet::npos &&
        pretrained.parameters[j].rows() == dst[i].rows() &&
        pretrained.parameters[j].cols() == dst[i].cols()) {
      dst[i] = pretrained.parameters[j];
    } else {
      setup.initialized.push_back(dst.at(i).name);
    }
  }
  return setup;
}

FinetuneSetup prepare_finetune(const Checkpoint& pretrained,
                               DurationPredictorVariant variant,
                               std::uint64_t seed) {
  ModelConfig target = pretrained.config;
  target.variant = variant;
  return prepare_finetune(pretrained, target, seed);
}

FinetuneResult finetune(const Checkpoint& pretrained,
                        DurationPredictorVariant variant, const Corpus& corpus,
                        const FreezeConfig& freeze, const TrainConfig& config,
                        TrainOptions options) {
  FinetuneSetup setup = prepare_finetune(pretrained, variant, config.seed);
  options.freeze = freeze;
  if (options.speakers.empty()) options.speakers = pretrained.speakers;
  TrainResult tr = train(setup.model, corpus, config, options);
  return {std::move(setup.model), std::move(tr)};
}

}  // namespace sratts
