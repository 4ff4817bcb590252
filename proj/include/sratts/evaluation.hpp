#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sratts/corpus.hpp"
#include "sratts/inference.hpp"
#include "sratts/model.hpp"
#include "sratts/pitch.hpp"
#include "sratts/vocoder.hpp"

namespace sratts {

// ---------------------------------------------------------------------------
// Factor grids.

enum class FactorProvenance { kDefault, kDerivedFromStats, kExplicit };

std::string to_string(FactorProvenance p);

struct SrFactorSet {
  std::vector<double> factors;
  FactorProvenance provenance = FactorProvenance::kDefault;

  // Positive, contains 1.0, ascending. Derived sets may repeat values (a
  // zero-spread corpus collapses every factor to 1.0); the others must be
  // strictly ascending.
  void validate() const;
};

// 0.54 0.66 0.77 0.83 0.89 1.0 1.11 1.17 1.23 1.34 1.46
SrFactorSet default_sr_factors();

// 1 +/- k * std/mean for k in {1, 1.5, 2, 3, 4}, plus 1.0. Each low factor is
// computed as 2 - high so every pair averages to exactly 1. Throws
// Error{kDegenerateDistribution} when std/mean >= 0.25.
SrFactorSet derive_sr_factors(const SrStatistics& stats);

SrFactorSet explicit_sr_factors(std::vector<double> factors);

// "default", "from-stats" (needs stats) or a comma-separated list.
SrFactorSet parse_factor_source(const std::string& source,
                                const SrStatistics* stats);

// ---------------------------------------------------------------------------
// SR error curves.

double sr_error(double expected, double obtained);

struct EvalOptions {
  std::string model_label = "model";
  std::vector<std::string> speakers;  // speaker id -> model index
  AudioFrameSpec frame_spec;
  bool rounding = true;  // false: real-valued durations (diagnostic)
};

struct SrErrorRow {
  std::string utterance_id;
  double factor = 0.0;
  double expected_sr = 0.0;
  double obtained_sr = 0.0;
  double error = 0.0;
};

struct EvalFailure {
  std::string utterance_id;
  double factor = 0.0;
  std::string reason;
};

struct SrErrorReport {
  std::string model_label;
  ControlMode mode = ControlMode::kPace;
  std::vector<double> factors;
  std::vector<SrErrorRow> rows;  // utterance-major, factors in grid order
  std::vector<double> mean_error;  // per factor, NaN if no row succeeded
  std::vector<std::size_t> row_count;
  std::vector<EvalFailure> failures;
};

// Expected SR is factor times the utterance's ground-truth SR; obtained SR
// comes from the planned frame counts. A failing (utterance, factor) pair is
// recorded in `failures` and skipped.
SrErrorReport evaluate_sr_curve(const FastSpeechModel& model,
                                const Corpus& test_corpus,
                                const SrFactorSet& factors, ControlMode mode,
                                const EvalOptions& options);

// Pool-adjacent-violators fit, non-decreasing, equal weights.
std::vector<double> isotonic_increasing(const std::vector<double>& values);

struct ConvexityCheck {
  std::size_t argmin = 0;
  double argmin_factor = 0.0;
  bool minimum_in_band = false;
  // Isotonic fits read outward from the minimum.
  std::vector<double> left_smoothed;
  std::vector<double> right_smoothed;
  bool left_rises = false;
  bool right_rises = false;
  bool holds = false;
};

// The minimum lies in [band_low, band_high] and, after isotonic regression
// outward from it, each side ends strictly above the minimum. NaN means are
// treated as failures.
ConvexityCheck check_convexity(const std::vector<double>& factors,
                               const std::vector<double>& mean_errors,
                               double band_low = 0.89, double band_high = 1.11);

// ---------------------------------------------------------------------------
// Pitch trend.

struct PitchReport {
  std::string model_label;
  ControlMode mode = ControlMode::kPace;
  std::vector<double> factors;
  std::vector<double> mean_f0;  // Hz over voiced frames; NaN when none
  std::vector<std::size_t> voiced_frames;
  std::vector<std::size_t> excluded_utterances;  // no voiced frame at all
  double voicing_threshold = 0.0;
  std::vector<EvalFailure> failures;
};

PitchReport evaluate_pitch_trend(const FastSpeechModel& model,
                                 const Corpus& test_corpus,
                                 const SrFactorSet& factors, ControlMode mode,
                                 const EvalOptions& options,
                                 const VocoderConfig& vocoder = {},
                                 const F0Config& f0 = {});

// ---------------------------------------------------------------------------
// Token-level duration linearity.

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;  // 1 for a constant series
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Largest vertical distance from the chord through the first and last
// points, divided by max(y) - min(y); 0 for a constant series.
double endpoint_chord_deviation(const std::vector<double>& x,
                                const std::vector<double>& y);

struct TokenLinearity {
  int position = 0;
  TokenId token = 0;
  std::vector<double> durations;  // one per factor
  LineFit fit;
  double chord_deviation = 0.0;
};

struct LinearityReport {
  std::string model_label;
  ControlMode mode = ControlMode::kPace;
  std::string utterance_id;
  std::vector<double> factors;
  std::vector<TokenLinearity> tokens;
};

LinearityReport duration_linearity(const FastSpeechModel& model,
                                   const UtteranceRecord& utterance,
                                   const SrFactorSet& factors, ControlMode mode,
                                   const EvalOptions& options, int n_tokens = 8);

}  // namespace sratts
