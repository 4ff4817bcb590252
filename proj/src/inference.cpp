#include "sratts/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sratts/error.hpp"

namespace sratts {

std::string to_string(ControlMode mode) {
  return mode == ControlMode::kPace ? "pace" : "sra";
}

ControlMode parse_mode(const std::string& text) {
  if (text == "pace") return ControlMode::kPace;
  if (text == "sra") return ControlMode::kSra;
  throw Error(ErrorKind::kConfiguration,
              "unknown control mode '" + text + "' (expected pace or sra)");
}

std::vector<int> pace_control_durations(const std::vector<double>& predicted,
                                        double factor) {
  if (!(factor > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "SR factor must be positive");
  }
  std::vector<int> out;
  out.reserve(predicted.size());
  for (double d : predicted) {
    out.push_back(std::max(1, static_cast<int>(std::round(factor * d))));
  }
  return out;
}

namespace {

double frames_sum(const std::vector<double>& d) {
  return std::accumulate(d.begin(), d.end(), 0.0);
}

// Baseline factor-1 durations under the pace rule.
double self_base_sr(const FastSpeechModel& model, const Mat& enc,
                    std::size_t n_tokens, const AudioFrameSpec& spec) {
  const auto frames =
      pace_control_durations(model.predict_durations(enc, std::nullopt).durations, 1.0);
  return compute_speaking_rate(
      n_tokens, std::accumulate(frames.begin(), frames.end(), 0L), spec);
}

}  // namespace

double resolve_base_sr(const SynthesisRequest& request,
                       std::optional<double> ground_truth_sr,
                       const FastSpeechModel* baseline_model,
                       const AudioFrameSpec& spec) {
  if (request.base_sr) return *request.base_sr;
  if (ground_truth_sr) return *ground_truth_sr;
  if (baseline_model != nullptr) {
    if (is_sra(baseline_model->config().variant)) {
      throw Error(ErrorKind::kMode,
                  "base SR fallback needs a baseline model, got " +
                      to_string(baseline_model->config().variant));
    }
    const Mat enc = baseline_model->encode(request.tokens, request.speaker);
    return self_base_sr(*baseline_model, enc, request.tokens.size(), spec);
  }
  throw Error(ErrorKind::kConfiguration,
              "no base SR: give one explicitly, a ground-truth SR, or a baseline model");
}

DurationPlan plan_durations(const FastSpeechModel& model, const Mat& enc,
                            const SynthesisRequest& request,
                            const AudioFrameSpec& spec, bool rounding) {
  const double factor = request.sr_factor;
  if (!(factor > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "SR factor must be positive");
  }
  const bool sra_model = is_sra(model.config().variant);
  if (request.mode == ControlMode::kSra && !sra_model) {
    throw Error(ErrorKind::kMode, "sra mode needs an SRA variant, model is baseline");
  }
  double base_sr = 0.0;
  if (request.base_sr) {
    base_sr = *request.base_sr;
  } else if (!sra_model) {
    base_sr = self_base_sr(model, enc, request.tokens.size(), spec);
  } else {
    throw Error(ErrorKind::kConfiguration,
                "SRA model needs a base SR to condition on");
  }
  if (!(base_sr > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "base SR must be positive");
  }

  DurationPlan plan;
  plan.expected_sr = factor * base_sr;
  if (request.mode == ControlMode::kPace) {
    std::optional<double> cond;
    if (sra_model) cond = base_sr;
    const auto predicted = model.predict_durations(enc, cond).durations;
    if (rounding) {
      const auto frames = pace_control_durations(predicted, factor);
      plan.durations.assign(frames.begin(), frames.end());
    } else {
      for (double d : predicted) plan.durations.push_back(factor * d);
    }
  } else {
    const auto predicted = model.predict_durations(enc, factor * base_sr).durations;
    for (double d : predicted) {
      plan.durations.push_back(rounding ? std::max(1.0, std::round(d)) : d);
    }
  }
  plan.obtained_sr = spec.seconds(frames_sum(plan.durations)) /
                     static_cast<double>(request.tokens.size());
  return plan;
}

SynthesisResult synthesize(const FastSpeechModel& model,
                           const SynthesisRequest& request,
                           const AudioFrameSpec& spec) {
  const Mat enc = model.encode(request.tokens, request.speaker);
  const DurationPlan plan = plan_durations(model, enc, request, spec, true);
  SynthesisResult result;
  result.durations_used.reserve(plan.durations.size());
  for (double d : plan.durations) result.durations_used.push_back(static_cast<int>(d));
  result.expected_sr = plan.expected_sr;
  const long total = std::accumulate(result.durations_used.begin(),
                                     result.durations_used.end(), 0L);
  result.obtained_sr = compute_speaking_rate(request.tokens.size(), total, spec);
  result.mel = model.decode(length_regulate(enc, result.durations_used)).cast<float>();
  return result;
}

}  // namespace sratts
