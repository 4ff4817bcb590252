// sratts: command-line pipeline for speaking-rate controllable synthesis.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sratts/checkpoint.hpp"
#include "sratts/config_json.hpp"
#include "sratts/corpus.hpp"
#include "sratts/error.hpp"
#include "sratts/evaluation.hpp"
#include "sratts/experiment.hpp"
#include "sratts/inference.hpp"
#include "sratts/report.hpp"
#include "sratts/tokenizer.hpp"
#include "sratts/training.hpp"
#include "sratts/vocoder.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sratts;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr const char* kCorpusMeta = "corpus.json";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string out;
  bool force = false;
  std::optional<std::uint64_t> seed;
};

struct Loaded {
  ExperimentConfig config;
  std::uint64_t seed = 0;
};

Loaded resolve_common(const Common& c) {
  Loaded l;
  json raw = json::object();
  if (!c.config_path.empty()) {
    if (!fs::exists(c.config_path)) throw UsageError("config file not found: " + c.config_path);
    l.config = load_experiment_config(c.config_path);
    std::ifstream in(c.config_path);
    raw = json::parse(in);
  }
  if (c.seed) {
    l.seed = *c.seed;
  } else if (raw.contains("seed")) {
    l.seed = l.config.seed;
  } else {
    l.seed = seed_from_environment(0);
  }
  l.config.seed = l.seed;
  return l;
}

void check_out(const Common& c) {
  if (c.out.empty()) throw UsageError("--out is required");
  const fs::path out(c.out);
  if (fs::exists(out) && !c.force) {
    if (!fs::is_directory(out) || !fs::is_empty(out)) {
      throw UsageError("output " + c.out + " already exists (use --force to overwrite)");
    }
  }
}

void make_out(const Common& c) { fs::create_directories(c.out); }

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::exists(path)) throw UsageError(what + " not found: " + path);
}

void print_config(const std::string& command, const json& resolved) {
  std::cout << "sratts " << command << " resolved config:\n" << resolved.dump(2) << "\n";
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

fs::path manifest_path(const std::string& corpus) {
  const fs::path p(corpus);
  return fs::is_directory(p) ? p / "manifest.jsonl" : p;
}

// Corpus metadata written next to the manifest by gen-synthetic/select-data.
json read_corpus_meta(const fs::path& manifest) {
  const fs::path meta = manifest.parent_path() / kCorpusMeta;
  if (!fs::exists(meta)) return json::object();
  std::ifstream in(meta);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, meta.string() + ": " + e.what());
  }
}

AudioFrameSpec corpus_frame_spec(const json& meta, const AudioFrameSpec& fallback) {
  if (meta.contains("frame_spec")) return meta.at("frame_spec").get<AudioFrameSpec>();
  return fallback;
}

int corpus_vocab(const json& meta, const Corpus& corpus) {
  if (meta.contains("vocab_size")) return meta.at("vocab_size").get<int>();
  TokenId top = 0;
  for (const auto& r : corpus) {
    for (TokenId t : r.tokens) top = std::max(top, t);
  }
  return static_cast<int>(top) + 1;
}

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--config", c.config_path, "Experiment config (JSON)");
  if (with_out) {
    cmd->add_option("--out", c.out, "Output directory")->required();
    cmd->add_flag("--force", c.force, "Overwrite an existing --out");
  }
  cmd->add_option("--seed", c.seed, "Random seed (falls back to SRATTS_SEED)");
}

// ---------------------------------------------------------------------------

struct GenArgs {
  Common common;
  std::optional<int> utterances, vocab, speakers, min_tokens, max_tokens, n_mels;
  int holdout = 0;
};

void cmd_gen_synthetic(const GenArgs& a) {
  check_out(a.common);
  Loaded l = resolve_common(a.common);
  SyntheticLawParams p = l.config.synthetic;
  p.frame_spec = l.config.frame_spec;
  if (a.utterances) p.n_utterances = *a.utterances;
  if (a.vocab) p.vocab_size = *a.vocab;
  if (a.speakers) p.n_speakers = *a.speakers;
  if (a.min_tokens) p.min_tokens = *a.min_tokens;
  if (a.max_tokens) p.max_tokens = *a.max_tokens;
  if (a.n_mels) p.frame_spec.n_mels = *a.n_mels;
  p.seed = l.seed;
  const SyntheticCorpusSpec spec = make_synthetic_spec(p);
  spec.validate();
  if (a.holdout < 0 || a.holdout >= p.n_utterances) {
    throw UsageError("--holdout must lie in [0, utterances)");
  }
  print_config("gen-synthetic", {{"synthetic", p},
                                 {"holdout", a.holdout},
                                 {"seed", l.seed},
                                 {"out", a.common.out}});

  make_out(a.common);
  const SyntheticCorpus sc = generate_synthetic_corpus(spec);
  const auto split = sc.corpus.end() - a.holdout;
  auto write = [&](const Corpus& part, const fs::path& dir) {
    const fs::path manifest = save_corpus(part, dir, p.frame_spec);
    const SrStatistics stats = compute_sr_statistics(part);
    write_json(dir / kCorpusMeta,
               {{"frame_spec", p.frame_spec},
                {"vocab_size", p.vocab_size},
                {"synthetic", p},
                {"law",
                 {{"base_duration", spec.base_duration},
                  {"sr_exponent", spec.sr_exponent},
                  {"reference_sr", spec.reference_sr}}},
                {"sr_stats", {{"mean", stats.mean}, {"std", stats.std}, {"count", stats.count}}}});
    std::cout << "wrote " << part.size() << " utterances to " << manifest.string()
              << " (SR mean " << stats.mean << ", std " << stats.std << ")\n";
  };
  write(Corpus(sc.corpus.begin(), split), a.common.out);
  if (a.holdout > 0) write(Corpus(split, sc.corpus.end()), fs::path(a.common.out) / "test");
}

// ---------------------------------------------------------------------------

struct SelectArgs {
  Common common;
  std::string corpus;
  std::optional<std::string> strategy;
  std::optional<double> hours;
  std::optional<bool> per_speaker;
};

void cmd_select_data(const SelectArgs& a) {
  require_file(a.corpus, "--corpus");
  check_out(a.common);
  Loaded l = resolve_common(a.common);
  const std::string label = a.strategy.value_or(l.config.selection);
  const double hours = a.hours.value_or(l.config.selection_hours);
  const bool per_speaker = a.per_speaker.value_or(l.config.per_speaker);
  if (!(hours > 0.0)) throw UsageError("--hours must be positive");
  SelectionStrategy probe = SelectionStrategy::from_label(label, hours * 3600.0, l.seed);
  probe.validate();

  const fs::path manifest = manifest_path(a.corpus);
  const json meta = read_corpus_meta(manifest);
  const AudioFrameSpec spec = corpus_frame_spec(meta, l.config.frame_spec);
  const Corpus corpus = load_corpus(manifest, spec);
  const std::size_t n_speakers = speaker_ids(corpus).size();
  const double budget =
      per_speaker ? hours * 3600.0 : hours * 3600.0 / static_cast<double>(n_speakers);
  const SelectionStrategy strategy = SelectionStrategy::from_label(label, budget, l.seed);
  print_config("select-data", {{"corpus", manifest.string()},
                               {"strategy", strategy.label()},
                               {"hours", hours},
                               {"per_speaker", per_speaker},
                               {"budget_seconds_per_speaker", budget},
                               {"seed", l.seed},
                               {"frame_spec", spec},
                               {"out", a.common.out}});

  const Corpus subset = select_training_subset(corpus, strategy, spec);
  make_out(a.common);
  save_corpus(subset, a.common.out, spec);
  json out_meta = meta;
  out_meta["frame_spec"] = spec;
  out_meta["vocab_size"] = corpus_vocab(meta, corpus);
  out_meta["selection"] = {{"strategy", strategy.label()},
                           {"budget_seconds_per_speaker", budget},
                           {"seed", l.seed},
                           {"source", manifest.string()}};
  write_json(fs::path(a.common.out) / kCorpusMeta, out_meta);
  double seconds = 0.0;
  for (const auto& r : subset) seconds += record_seconds(r, spec);
  std::cout << "selected " << subset.size() << " of " << corpus.size() << " utterances ("
            << seconds << " s)\n";
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string corpus;
  std::optional<std::string> variant, preset;
  std::optional<int> epochs, batch_size, checkpoint_every;
  std::optional<double> learning_rate;
};

void apply_train_overrides(TrainConfig& tc, const TrainArgs& a, std::uint64_t seed) {
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.batch_size) tc.batch_size = *a.batch_size;
  if (a.checkpoint_every) tc.checkpoint_every = *a.checkpoint_every;
  if (a.learning_rate) tc.learning_rate = *a.learning_rate;
  tc.seed = seed;
}

void finish_training(const fs::path& out, const FastSpeechModel& model,
                     const std::vector<std::string>& speakers, const AudioFrameSpec& spec,
                     const TrainResult& result) {
  save_checkpoint(out / "final.ckpt", model, speakers, spec);
  write_loss_history_csv(out / "loss_history.csv", result.history);
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cout << "final loss: mel " << last.mel_loss << ", duration " << last.duration_loss
              << "\n";
  }
  std::cout << "wrote " << (out / "final.ckpt").string() << "\n";
}

std::function<void(int, const LossBreakdown&)> progress(int epochs) {
  return [epochs](int epoch, const LossBreakdown& l) {
    std::printf("epoch %d/%d  mel %.6f  duration %.6f\n", epoch, epochs, l.mel_loss,
                l.duration_loss);
    std::fflush(stdout);
  };
}

void cmd_train(const TrainArgs& a) {
  require_file(a.corpus, "--corpus");
  check_out(a.common);
  Loaded l = resolve_common(a.common);
  const DurationPredictorVariant variant = parse_variant(a.variant.value_or("baseline"));
  const std::string preset = a.preset.value_or(l.config.model_preset);
  if (preset != "toy" && preset != "full") {
    throw UsageError("--model-preset must be toy or full");
  }
  TrainConfig tc = l.config.train;
  apply_train_overrides(tc, a, l.seed);
  tc.validate();

  const fs::path manifest = manifest_path(a.corpus);
  const json meta = read_corpus_meta(manifest);
  const AudioFrameSpec spec = corpus_frame_spec(meta, l.config.frame_spec);
  const Corpus corpus = load_corpus(manifest, spec);
  const std::vector<std::string> speakers = speaker_ids(corpus);
  ModelConfig mc;
  if (l.config.model) {
    mc = *l.config.model;
    mc.variant = variant;
  } else if (preset == "full") {
    mc = ModelConfig::full(variant);
  } else {
    mc = ModelConfig::toy(variant, corpus_vocab(meta, corpus), spec.n_mels,
                          static_cast<int>(speakers.size()));
  }
  mc.n_mels = spec.n_mels;
  mc.n_speakers = std::max(mc.n_speakers, static_cast<int>(speakers.size()));
  mc.vocab_size = std::max(mc.vocab_size, corpus_vocab(meta, corpus));
  mc.validate();
  const json resolved = {{"corpus", manifest.string()}, {"model", mc},      {"train", tc},
                         {"frame_spec", spec},          {"seed", l.seed},   {"speakers", speakers},
                         {"out", a.common.out}};
  print_config("train", resolved);

  make_out(a.common);
  write_json(fs::path(a.common.out) / "config.json", resolved);
  FastSpeechModel model(mc, l.seed);
  TrainOptions opts;
  opts.speakers = speakers;
  opts.frame_spec = spec;
  opts.checkpoint_dir = a.common.out;
  opts.on_epoch = progress(tc.epochs);
  const TrainResult result = train(model, corpus, tc, opts);
  finish_training(a.common.out, model, speakers, spec, result);
}

// ---------------------------------------------------------------------------

struct FinetuneArgs {
  TrainArgs train;
  std::string checkpoint;
  std::string freeze = "ft3";
};

void cmd_finetune(const FinetuneArgs& a) {
  require_file(a.checkpoint, "--checkpoint");
  require_file(a.train.corpus, "--corpus");
  check_out(a.train.common);
  Loaded l = resolve_common(a.train.common);
  const DurationPredictorVariant variant = parse_variant(a.train.variant.value_or("sra-e"));
  if (!is_sra(variant)) throw UsageError("fine-tuning target must be sra-e or sra-b");
  const FreezeConfig freeze = FreezeConfig::preset(a.freeze);
  TrainConfig tc = l.config.train;
  apply_train_overrides(tc, a.train, l.seed);
  tc.validate();

  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  if (ckpt.config.variant != DurationPredictorVariant::kBaseline) {
    throw UsageError("fine-tuning starts from a baseline checkpoint, got " +
                     to_string(ckpt.config.variant));
  }
  const fs::path manifest = manifest_path(a.train.corpus);
  const Corpus corpus = load_corpus(manifest, ckpt.frame_spec);
  const json resolved = {{"checkpoint", a.checkpoint},
                         {"corpus", manifest.string()},
                         {"variant", to_string(variant)},
                         {"freeze",
                          {{"preset", a.freeze},
                           {"encoder", freeze.freeze_encoder},
                           {"decoder", freeze.freeze_decoder}}},
                         {"train", tc},
                         {"seed", l.seed},
                         {"out", a.train.common.out}};
  print_config("finetune", resolved);

  make_out(a.train.common);
  write_json(fs::path(a.train.common.out) / "config.json", resolved);
  TrainOptions opts;
  opts.speakers = ckpt.speakers;
  opts.frame_spec = ckpt.frame_spec;
  opts.checkpoint_dir = a.train.common.out;
  opts.on_epoch = progress(tc.epochs);
  FinetuneResult result = finetune(ckpt, variant, corpus, freeze, tc, opts);
  finish_training(a.train.common.out, result.model, ckpt.speakers, ckpt.frame_spec,
                  result.training);
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  Common common;
  std::string checkpoint;
  std::string baseline;
  std::string text;
  std::string tokens;
  std::string speaker;
  std::string mode = "pace";
  double factor = 1.0;
  std::optional<double> base_sr;
  bool wav = false;
  int iterations = 32;
};

void cmd_synthesize(const SynthArgs& a) {
  require_file(a.checkpoint, "--checkpoint");
  if (!a.baseline.empty()) require_file(a.baseline, "--baseline");
  check_out(a.common);
  Loaded l = resolve_common(a.common);
  if (a.text.empty() == a.tokens.empty()) {
    throw UsageError("give exactly one of --text or --tokens");
  }
  if (!(a.factor > 0.0)) throw UsageError("--factor must be positive");
  if (a.iterations < 1) throw UsageError("--iterations must be >= 1");
  const ControlMode mode = parse_mode(a.mode);

  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const FastSpeechModel model = ckpt.model();
  if (mode == ControlMode::kSra && !is_sra(model.config().variant)) {
    throw UsageError("sra mode needs an sra-e or sra-b checkpoint, got baseline");
  }
  SynthesisRequest req;
  req.tokens = a.text.empty() ? parse_token_list(a.tokens) : CharacterTokenizer().encode(a.text);
  if (req.tokens.empty()) throw UsageError("no tokens to synthesize");
  req.speaker = a.speaker.empty() ? 0 : speaker_index(ckpt.speakers, a.speaker);
  req.mode = mode;
  req.sr_factor = a.factor;
  if (a.base_sr) {
    req.base_sr = *a.base_sr;
  } else if (!a.baseline.empty()) {
    const Checkpoint base = load_checkpoint(a.baseline);
    const FastSpeechModel base_model = base.model();
    req.base_sr = resolve_base_sr(req, std::nullopt, &base_model, ckpt.frame_spec);
  } else if (is_sra(model.config().variant)) {
    throw UsageError("an SRA checkpoint needs --base-sr or --baseline");
  }
  print_config("synthesize", {{"checkpoint", a.checkpoint},
                              {"variant", to_string(model.config().variant)},
                              {"mode", to_string(mode)},
                              {"factor", a.factor},
                              {"base_sr", req.base_sr ? json(*req.base_sr) : json(nullptr)},
                              {"tokens", req.tokens},
                              {"speaker", req.speaker},
                              {"wav", a.wav},
                              {"iterations", a.iterations},
                              {"seed", l.seed},
                              {"out", a.common.out}});

  const SynthesisResult result = synthesize(model, req, ckpt.frame_spec);
  make_out(a.common);
  const fs::path out(a.common.out);
  write_mel_file(out / "mel.mel", result.mel);
  if (a.wav) {
    VocoderConfig vc;
    vc.iterations = a.iterations;
    vc.phase_seed = l.seed;
    MelMatrix mel = result.mel.cwiseMax(0.0f);
    write_wav(out / "audio.wav", vocode_griffin_lim(mel, ckpt.frame_spec, vc),
              ckpt.frame_spec.sample_rate);
  }
  write_json(out / "synthesis.json", {{"tokens", req.tokens},
                                      {"mode", to_string(mode)},
                                      {"factor", a.factor},
                                      {"durations", result.durations_used},
                                      {"n_frames", result.mel.rows()},
                                      {"expected_sr", result.expected_sr},
                                      {"obtained_sr", result.obtained_sr}});
  std::cout << "synthesized " << result.mel.rows() << " frames, expected SR "
            << result.expected_sr << ", obtained SR " << result.obtained_sr << "\n";
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string checkpoint;
  std::string corpus;
  std::string mode = "pace";
  std::optional<std::string> factors;
  std::string label;
  bool pitch = false;
  bool linearity = false;
  bool no_rounding = false;
  int limit = 0;
  int iterations = 32;
};

void cmd_evaluate(const EvalArgs& a) {
  require_file(a.checkpoint, "--checkpoint");
  require_file(a.corpus, "--corpus");
  check_out(a.common);
  Loaded l = resolve_common(a.common);
  if (a.limit < 0) throw UsageError("--limit must be >= 0");
  const ControlMode mode = parse_mode(a.mode);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  if (mode == ControlMode::kSra && !is_sra(ckpt.config.variant)) {
    throw UsageError("sra mode needs an sra-e or sra-b checkpoint, got baseline");
  }
  const FastSpeechModel model = ckpt.model();
  const fs::path manifest = manifest_path(a.corpus);
  Corpus test = load_corpus(manifest, ckpt.frame_spec);
  if (a.limit > 0 && test.size() > static_cast<std::size_t>(a.limit)) test.resize(a.limit);
  const SrStatistics stats = compute_sr_statistics(test);
  const std::string source = a.factors.value_or(l.config.factors);
  const SrFactorSet factors = parse_factor_source(source, &stats);

  EvalOptions eo;
  eo.model_label = a.label.empty() ? to_string(ckpt.config.variant) + "-" + to_string(mode)
                                   : a.label;
  eo.speakers = ckpt.speakers;
  eo.frame_spec = ckpt.frame_spec;
  eo.rounding = !a.no_rounding;
  print_config("evaluate", {{"checkpoint", a.checkpoint},
                            {"corpus", manifest.string()},
                            {"utterances", test.size()},
                            {"mode", to_string(mode)},
                            {"factors", factors.factors},
                            {"factor_provenance", to_string(factors.provenance)},
                            {"label", eo.model_label},
                            {"rounding", eo.rounding},
                            {"pitch", a.pitch},
                            {"linearity", a.linearity},
                            {"seed", l.seed},
                            {"out", a.common.out}});

  make_out(a.common);
  const SrErrorReport sr = evaluate_sr_curve(model, test, factors, mode, eo);
  for (const auto& p : emit_report(sr, a.common.out)) std::cout << "wrote " << p.string() << "\n";
  std::cout << "factor  mean SR error (s/token)\n";
  for (std::size_t i = 0; i < sr.factors.size(); ++i) {
    std::printf("%6s  %s\n", format_double(sr.factors[i]).c_str(),
                format_double(sr.mean_error[i]).c_str());
  }
  if (!sr.failures.empty()) {
    std::cout << sr.failures.size() << " (utterance, factor) pairs failed; see JSON summary\n";
  }
  if (a.linearity) {
    const LinearityReport lin = duration_linearity(model, test.front(), factors, mode, eo);
    for (const auto& p : emit_report(lin, a.common.out)) std::cout << "wrote " << p.string() << "\n";
  }
  if (a.pitch) {
    VocoderConfig vc;
    vc.iterations = a.iterations;
    vc.phase_seed = l.seed;
    const PitchReport pr = evaluate_pitch_trend(model, test, factors, mode, eo, vc);
    for (const auto& p : emit_report(pr, a.common.out)) std::cout << "wrote " << p.string() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sratts: speaking-rate controllable TTS pipeline"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen-synthetic", "Generate a synthetic corpus with a known duration law");
  add_common(c_gen, gen.common);
  c_gen->add_option("--utterances", gen.utterances, "Number of utterances");
  c_gen->add_option("--vocab", gen.vocab, "Vocabulary size");
  c_gen->add_option("--speakers", gen.speakers, "Number of speakers");
  c_gen->add_option("--min-tokens", gen.min_tokens, "Shortest utterance in tokens");
  c_gen->add_option("--max-tokens", gen.max_tokens, "Longest utterance in tokens");
  c_gen->add_option("--n-mels", gen.n_mels, "Mel channels");
  c_gen->add_option("--holdout", gen.holdout,
                    "Write the last N utterances to <out>/test instead of <out>");

  SelectArgs sel;
  auto* c_sel = app.add_subcommand("select-data", "Select a training subset (RS, TS, NS1.5, NS1)");
  add_common(c_sel, sel.common);
  c_sel->add_option("--corpus", sel.corpus, "Corpus directory or manifest")->required();
  c_sel->add_option("--strategy", sel.strategy, "rs | ts | ns1.5 | ns1");
  c_sel->add_option("--hours", sel.hours, "Budget in hours");
  c_sel->add_option("--per-speaker", sel.per_speaker,
                    "true: budget applies to each speaker; false: split across speakers");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a model from scratch");
  add_common(c_train, tr.common);
  c_train->add_option("--corpus", tr.corpus, "Training corpus directory or manifest")->required();
  c_train->add_option("--variant", tr.variant, "baseline | sra-e | sra-b");
  c_train->add_option("--model-preset", tr.preset, "toy | full");
  c_train->add_option("--epochs", tr.epochs, "Epochs");
  c_train->add_option("--batch-size", tr.batch_size, "Batch size");
  c_train->add_option("--lr", tr.learning_rate, "Learning rate");
  c_train->add_option("--checkpoint-every", tr.checkpoint_every, "Checkpoint period in epochs");

  FinetuneArgs ft;
  auto* c_ft = app.add_subcommand("finetune", "Fine-tune an SRA model from a baseline checkpoint");
  add_common(c_ft, ft.train.common);
  c_ft->add_option("--checkpoint", ft.checkpoint, "Baseline checkpoint")->required();
  c_ft->add_option("--corpus", ft.train.corpus, "Training corpus directory or manifest")->required();
  c_ft->add_option("--variant", ft.train.variant, "sra-e | sra-b");
  c_ft->add_option("--freeze", ft.freeze, "ft1 (encoder+decoder) | ft2 (decoder) | ft3 (none)");
  c_ft->add_option("--epochs", ft.train.epochs, "Epochs");
  c_ft->add_option("--batch-size", ft.train.batch_size, "Batch size");
  c_ft->add_option("--lr", ft.train.learning_rate, "Learning rate");
  c_ft->add_option("--checkpoint-every", ft.train.checkpoint_every, "Checkpoint period in epochs");

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synthesize", "Synthesize a mel (and optionally a WAV)");
  add_common(c_syn, syn.common);
  c_syn->add_option("--checkpoint", syn.checkpoint, "Model checkpoint")->required();
  c_syn->add_option("--baseline", syn.baseline, "Baseline checkpoint used to derive the base SR");
  c_syn->add_option("--text", syn.text, "Text for the character tokenizer");
  c_syn->add_option("--tokens", syn.tokens, "Token ids, e.g. 3,1,4");
  c_syn->add_option("--speaker", syn.speaker, "Speaker id");
  c_syn->add_option("--mode", syn.mode, "pace | sra");
  c_syn->add_option("--factor", syn.factor, "SR factor");
  c_syn->add_option("--base-sr", syn.base_sr, "Base SR in seconds per token");
  c_syn->add_flag("--wav", syn.wav, "Also vocode with Griffin-Lim");
  c_syn->add_option("--iterations", syn.iterations, "Griffin-Lim iterations");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "SR error curves, pitch trend and duration linearity");
  add_common(c_ev, ev.common);
  c_ev->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  c_ev->add_option("--corpus", ev.corpus, "Test corpus directory or manifest")->required();
  c_ev->add_option("--mode", ev.mode, "pace | sra");
  c_ev->add_option("--factors", ev.factors, "default | from-stats | comma-separated list");
  c_ev->add_option("--label", ev.label, "Model label used in reports");
  c_ev->add_flag("--pitch", ev.pitch, "Also run the pitch-trend analysis");
  c_ev->add_flag("--linearity", ev.linearity, "Also run token duration linearity");
  c_ev->add_flag("--no-rounding", ev.no_rounding, "Real-valued durations (diagnostic)");
  c_ev->add_option("--limit", ev.limit, "Use only the first N test utterances");
  c_ev->add_option("--iterations", ev.iterations, "Griffin-Lim iterations for --pitch");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_gen) cmd_gen_synthetic(gen);
    if (*c_sel) cmd_select_data(sel);
    if (*c_train) cmd_train(tr);
    if (*c_ft) cmd_finetune(ft);
    if (*c_syn) cmd_synthesize(syn);
    if (*c_ev) cmd_evaluate(ev);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kMode || e.kind() == ErrorKind::kConfiguration
               ? kExitUsage
               : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
