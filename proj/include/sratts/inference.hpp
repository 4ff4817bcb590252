#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sratts/corpus.hpp"
#include "sratts/model.hpp"

namespace sratts {

enum class ControlMode {
  kPace,  // scale predicted durations by the factor
  kSra,   // condition the duration predictor on factor * base_sr
};

std::string to_string(ControlMode mode);
ControlMode parse_mode(const std::string& text);

struct SynthesisRequest {
  std::vector<TokenId> tokens;
  int speaker = 0;
  ControlMode mode = ControlMode::kPace;
  double sr_factor = 1.0;
  std::optional<double> base_sr;  // seconds per token
};

struct SynthesisResult {
  MelMatrix mel;
  std::vector<int> durations_used;
  double obtained_sr = 0.0;
  double expected_sr = 0.0;
};

// Per-token frame plan before decoding. With rounding disabled the
// durations stay real-valued and obtained_sr uses their exact sum.
struct DurationPlan {
  std::vector<double> durations;
  double expected_sr = 0.0;
  double obtained_sr = 0.0;
};

// Request base SR, then the ground-truth SR, then the frame-count SR of a factor-1
// baseline synthesis.
double resolve_base_sr(const SynthesisRequest& request,
                       std::optional<double> ground_truth_sr,
                       const FastSpeechModel* baseline_model,
                       const AudioFrameSpec& spec);

// max(1, round_half_away_from_zero(factor * d)) per token.
std::vector<int> pace_control_durations(const std::vector<double>& predicted,
                                        double factor);

// Plans durations from an already computed encoder output. Baseline models
// in pace mode may omit base_sr; it is then taken from their own factor-1
// prediction.
DurationPlan plan_durations(const FastSpeechModel& model,
                            const Mat& encoder_out,
                            const SynthesisRequest& request,
                            const AudioFrameSpec& spec, bool rounding = true);

SynthesisResult synthesize(const FastSpeechModel& model,
                           const SynthesisRequest& request,
                           const AudioFrameSpec& spec);

}  // namespace sratts
