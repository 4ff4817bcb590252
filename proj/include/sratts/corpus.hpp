#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sratts {

using TokenId = std::int32_t;

// Row-major so that one mel frame is one contiguous row, matching the
// on-disk layout.
using MelMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct AudioFrameSpec {
  int sample_rate = 22050;
  int hop_length = 256;
  int n_mels = 80;

  double frame_seconds() const {
    return static_cast<double>(hop_length) / sample_rate;
  }
  double seconds(double n_frames) const {
    return n_frames * static_cast<double>(hop_length) / sample_rate;
  }
  void validate() const;

  bool operator==(const AudioFrameSpec&) const = default;
};

struct UtteranceRecord {
  std::string id;
  std::string speaker_id;
  std::vector<TokenId> tokens;
  std::vector<int> durations;
  MelMatrix mel;
  // Seconds per token; always equal to compute_speaking_rate(*this, spec).
  double speaking_rate = 0.0;

  long total_frames() const;
  bool operator==(const UtteranceRecord& other) const;
};

using Corpus = std::vector<UtteranceRecord>;

// Seconds of audio per token: seconds(sum durations) / number of tokens.
double compute_speaking_rate(std::size_t n_tokens, long total_frames,
                             const AudioFrameSpec& spec);
double compute_speaking_rate(const UtteranceRecord& record,
                             const AudioFrameSpec& spec);

// Checks token/duration lengths, duration signs and mel shape; throws
// Error{kInvalidUtterance | kShapeMismatch}.
void validate_record(const UtteranceRecord& record, int n_mels);

double record_seconds(const UtteranceRecord& record,
                      const AudioFrameSpec& spec);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges, inclusive-left bins
  std::vector<std::size_t> counts;
};

struct SrStatistics {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
  Histogram histogram;
};

SrStatistics compute_sr_statistics(const std::vector<double>& speaking_rates,
                                   int bins = 50);
SrStatistics compute_sr_statistics(const Corpus& corpus, int bins = 50);

// ---------------------------------------------------------------------------
// Training-subset selection.

enum class SelectionKind { kRandom, kTailFirst, kNarrow };

struct SelectionStrategy {
  SelectionKind kind = SelectionKind::kRandom;
  double ns_width = 1.0;         // multiples of std, only for kNarrow
  double budget_seconds = 0.0;   // per speaker
  std::uint64_t seed = 0;

  // Parses the preset labels "rs", "ts", "ns1.5", "ns1" (case-insensitive).
  static SelectionStrategy from_label(const std::string& label,
                                      double budget_seconds,
                                      std::uint64_t seed);
  std::string label() const;
  void validate() const;
};

// Utterances whose SR lies strictly beyond this many per-speaker stds from
// the per-speaker mean are the tail for tail-first selection.
inline constexpr double kTailWidth = 1.5;

Corpus select_training_subset(const Corpus& corpus,
                              const SelectionStrategy& strategy,
                              const AudioFrameSpec& spec);

// ---------------------------------------------------------------------------
// Synthetic corpora with a known token-level duration law.

struct SyntheticCorpusSpec {
  int vocab_size = 30;
  int n_utterances = 200;
  int min_tokens = 8;
  int max_tokens = 20;
  int n_speakers = 1;
  // Per-token law: round(base[t] * (s / reference_sr)^exponent[t]), >= 1.
  std::vector<double> base_duration;
  std::vector<double> sr_exponent;
  double reference_sr = 0.0;
  // Target SR drawn uniformly in [sr_min, sr_max] times the speaker scale.
  double sr_min = 0.0;
  double sr_max = 0.0;
  std::vector<double> speaker_sr_scale;
  // vocab_size x n_mels, non-negative.
  MelMatrix mel_patterns;
  double mel_noise = 0.05;
  AudioFrameSpec frame_spec;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticLawParams {
  int vocab_size = 30;
  int n_utterances = 200;
  int min_tokens = 8;
  int max_tokens = 20;
  int n_speakers = 1;
  double base_min = 4.0;
  double base_max = 12.0;
  double exponent_min = 0.5;
  double exponent_max = 2.0;
  // Target SR range relative to reference_sr.
  double relative_sr_min = 0.88;
  double relative_sr_max = 1.12;
  double mel_noise = 0.05;
  AudioFrameSpec frame_spec;
  std::uint64_t seed = 7;

  bool operator==(const SyntheticLawParams&) const = default;
};

// Draws per-token bases, exponents and mel patterns from the seed.
SyntheticCorpusSpec make_synthetic_spec(const SyntheticLawParams& params);

class DurationLaw {
 public:
  DurationLaw(std::vector<double> base, std::vector<double> exponent,
              double reference_sr);

  // Real-valued law before rounding.
  double expected_duration(TokenId token, double sr) const;
  // round(expected) clamped to >= 1.
  int oracle_duration(TokenId token, double sr) const;

  double reference_sr() const { return reference_sr_; }
  const std::vector<double>& exponents() const { return exponent_; }

 private:
  std::vector<double> base_;
  std::vector<double> exponent_;
  double reference_sr_;
};

struct SyntheticCorpus {
  Corpus corpus;
  DurationLaw law;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

// ---------------------------------------------------------------------------
// Manifest (JSON lines) + binary mel files.

MelMatrix read_mel_file(const std::filesystem::path& path);
void write_mel_file(const std::filesystem::path& path, const MelMatrix& mel);

// Writes <dir>/manifest.jsonl and <dir>/mels/<id>.mel; returns the manifest
// path.
std::filesystem::path save_corpus(const Corpus& corpus,
                                  const std::filesystem::path& dir,
                                  const AudioFrameSpec& spec);

Corpus load_corpus(const std::filesystem::path& manifest_path,
                   const AudioFrameSpec& spec);

std::vector<std::string> speaker_ids(const Corpus& corpus);

}  // namespace sratts
