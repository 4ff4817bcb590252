#include "sratts/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "sratts/error.hpp"
#include "sratts/training.hpp"

namespace sratts {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSpreadLevels[] = {1.0, 1.5, 2.0, 3.0, 4.0};

bool contains_one(const std::vector<double>& f) {
  return std::find(f.begin(), f.end(), 1.0) != f.end();
}

}  // namespace

std::string to_string(FactorProvenance p) {
  switch (p) {
    case FactorProvenance::kDefault: return "default";
    case FactorProvenance::kDerivedFromStats: return "derived-from-stats";
    case FactorProvenance::kExplicit: return "explicit";
  }
  return "unknown";
}

void SrFactorSet::validate() const {
  if (factors.empty()) throw Error(ErrorKind::kConfiguration, "empty factor set");
  for (double f : factors) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw Error(ErrorKind::kConfiguration, "SR factors must be positive and finite");
    }
  }
  if (!contains_one(factors)) {
    throw Error(ErrorKind::kConfiguration, "SR factor set must contain 1.0");
  }
  const bool strict = provenance != FactorProvenance::kDerivedFromStats;
  for (std::size_t i = 1; i < factors.size(); ++i) {
    if (strict ? !(factors[i - 1] < factors[i]) : !(factors[i - 1] <= factors[i])) {
      throw Error(ErrorKind::kConfiguration, "SR factors must be sorted ascending");
    }
  }
}

SrFactorSet default_sr_factors() {
  return {{0.54, 0.66, 0.77, 0.83, 0.89, 1.0, 1.11, 1.17, 1.23, 1.34, 1.46},
          FactorProvenance::kDefault};
}

SrFactorSet derive_sr_factors(const SrStatistics& stats) {
  if (!(stats.mean > 0.0)) {
    throw Error(ErrorKind::kDegenerateDistribution, "SR mean must be positive");
  }
  const double ratio = stats.std / stats.mean;
  if (!(ratio < 0.25)) {
    throw Error(ErrorKind::kDegenerateDistribution,
                "std/mean = " + std::to_string(ratio) +
                    " >= 0.25 would make the lowest factor non-positive");
  }
  SrFactorSet set{{}, FactorProvenance::kDerivedFromStats};
  std::vector<double> high;
  for (double k : kSpreadLevels) high.push_back(1.0 + k * ratio);
  for (auto it = high.rbegin(); it != high.rend(); ++it) set.factors.push_back(2.0 - *it);
  set.factors.push_back(1.0);
  set.factors.insert(set.factors.end(), high.begin(), high.end());
  set.validate();
  return set;
}

SrFactorSet explicit_sr_factors(std::vector<double> factors) {
  SrFactorSet set{std::move(factors), FactorProvenance::kExplicit};
  set.validate();
  return set;
}

SrFactorSet parse_factor_source(const std::string& source, const SrStatistics* stats) {
  if (source == "default") return default_sr_factors();
  if (source == "from-stats") {
    if (stats == nullptr) {
      throw Error(ErrorKind::kConfiguration, "from-stats factors need corpus statistics");
    }
    return derive_sr_factors(*stats);
  }
  std::vector<double> values;
  std::size_t i = 0;
  while (i < source.size()) {
    if (source[i] == ',' || source[i] == ' ') {
      ++i;
      continue;
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(source.data() + i, source.data() + source.size(), v);
    if (ec != std::errc()) {
      throw Error(ErrorKind::kConfiguration,
                  "bad factor list '" + source + "' (expected default, from-stats or numbers)");
    }
    values.push_back(v);
    i = static_cast<std::size_t>(ptr - source.data());
  }
  return explicit_sr_factors(std::move(values));
}

double sr_error(double expected, double obtained) {
  return std::abs(expected - obtained);
}

// ---------------------------------------------------------------------------

namespace {

SynthesisRequest request_for(const UtteranceRecord& r, const EvalOptions& o,
                             ControlMode mode, double factor) {
  SynthesisRequest req;
  req.tokens = r.tokens;
  req.speaker = o.speakers.empty() ? 0 : speaker_index(o.speakers, r.speaker_id);
  req.mode = mode;
  req.sr_factor = factor;
  req.base_sr = r.speaking_rate;
  return req;
}

void check_mode(const FastSpeechModel& model, ControlMode mode) {
  if (mode == ControlMode::kSra && !is_sra(model.config().variant)) {
    throw Error(ErrorKind::kMode, "sra mode needs an SRA variant, model is baseline");
  }
}

}  // namespace

SrErrorReport evaluate_sr_curve(const FastSpeechModel& model,
                                const Corpus& test_corpus,
                                const SrFactorSet& factors, ControlMode mode,
                                const EvalOptions& options) {
  factors.validate();
  check_mode(model, mode);
  if (test_corpus.empty()) throw Error(ErrorKind::kEmptyCorpus, "empty test corpus");
  SrErrorReport report;
  report.model_label = options.model_label;
  report.mode = mode;
  report.factors = factors.factors;
  const std::size_t n_factors = factors.factors.size();
  std::vector<double> sums(n_factors, 0.0);
  report.row_count.assign(n_factors, 0);

  for (const auto& utt : test_corpus) {
    Mat enc;
    try {
      const auto req = request_for(utt, options, mode, 1.0);
      enc = model.encode(req.tokens, req.speaker);
    } catch (const Error& e) {
      for (double f : factors.factors) report.failures.push_back({utt.id, f, e.what()});
      continue;
    }
    for (std::size_t i = 0; i < n_factors; ++i) {
      const double f = factors.factors[i];
      try {
        const auto req = request_for(utt, options, mode, f);
        const DurationPlan plan =
            plan_durations(model, enc, req, options.frame_spec, options.rounding);
        SrErrorRow row{utt.id, f, plan.expected_sr, plan.obtained_sr,
                       sr_error(plan.expected_sr, plan.obtained_sr)};
        sums[i] += row.error;
        ++report.row_count[i];
        report.rows.push_back(std::move(row));
      } catch (const Error& e) {
        report.failures.push_back({utt.id, f, e.what()});
      }
    }
  }
  for (std::size_t i = 0; i < n_factors; ++i) {
    report.mean_error.push_back(report.row_count[i] > 0
                                    ? sums[i] / static_cast<double>(report.row_count[i])
                                    : kNaN);
  }
  return report;
}

std::vector<double> isotonic_increasing(const std::vector<double>& values) {
  struct Block {
    double sum;
    std::size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  for (double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 &&
           blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      Block last = blocks.back();
      blocks.pop_back();
      blocks.back().sum += last.sum;
      blocks.back().count += last.count;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean());
  return out;
}

ConvexityCheck check_convexity(const std::vector<double>& factors,
                               const std::vector<double>& mean_errors,
                               double band_low, double band_high) {
  if (factors.size() != mean_errors.size() || factors.empty()) {
    throw Error(ErrorKind::kShapeMismatch, "factor and mean-error lengths differ");
  }
  ConvexityCheck c;
  for (double m : mean_errors) {
    if (!std::isfinite(m)) return c;
  }
  c.argmin = static_cast<std::size_t>(
      std::min_element(mean_errors.begin(), mean_errors.end()) - mean_errors.begin());
  c.argmin_factor = factors[c.argmin];
  constexpr double kSlack = 1e-9;
  c.minimum_in_band =
      c.argmin_factor >= band_low - kSlack && c.argmin_factor <= band_high + kSlack;
  const double minimum = mean_errors[c.argmin];

  std::vector<double> left(mean_errors.begin(),
                           mean_errors.begin() + static_cast<long>(c.argmin) + 1);
  std::reverse(left.begin(), left.end());
  std::vector<double> right(mean_errors.begin() + static_cast<long>(c.argmin),
                            mean_errors.end());
  c.left_smoothed = isotonic_increasing(left);
  c.right_smoothed = isotonic_increasing(right);
  c.left_rises = c.left_smoothed.size() > 1 && c.left_smoothed.back() > minimum;
  c.right_rises = c.right_smoothed.size() > 1 && c.right_smoothed.back() > minimum;
  c.holds = c.minimum_in_band && c.left_rises && c.right_rises;
  return c;
}

// ---------------------------------------------------------------------------

PitchReport evaluate_pitch_trend(const FastSpeechModel& model,
                                 const Corpus& test_corpus,
                                 const SrFactorSet& factors, ControlMode mode,
                                 const EvalOptions& options,
                                 const VocoderConfig& vocoder, const F0Config& f0) {
  factors.validate();
  check_mode(model, mode);
  PitchReport report;
  report.model_label = options.model_label;
  report.mode = mode;
  report.factors = factors.factors;
  report.voicing_threshold = f0.voicing_threshold;
  const std::size_t n_factors = factors.factors.size();
  std::vector<double> sums(n_factors, 0.0);
  report.voiced_frames.assign(n_factors, 0);
  report.excluded_utterances.assign(n_factors, 0);

  for (const auto& utt : test_corpus) {
    for (std::size_t i = 0; i < n_factors; ++i) {
      const double f = factors.factors[i];
      try {
        const SynthesisResult result =
            synthesize(model, request_for(utt, options, mode, f), options.frame_spec);
        const auto wave = vocode_griffin_lim(result.mel, options.frame_spec, vocoder);
        const F0Track track = estimate_f0(wave, options.frame_spec.sample_rate, f0);
        const std::size_t voiced = track.voiced_count();
        if (voiced == 0) {
          ++report.excluded_utterances[i];
          continue;
        }
        for (std::size_t k = 0; k < track.f0.size(); ++k) {
          if (track.voiced[k]) sums[i] += track.f0[k];
        }
        report.voiced_frames[i] += voiced;
      } catch (const Error& e) {
        report.failures.push_back({utt.id, f, e.what()});
      }
    }
  }
  for (std::size_t i = 0; i < n_factors; ++i) {
    report.mean_f0.push_back(report.voiced_frames[i] > 0
                                 ? sums[i] / static_cast<double>(report.voiced_frames[i])
                                 : kNaN);
  }
  return report;
}

// ---------------------------------------------------------------------------

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::kShapeMismatch, "line fit needs two or more paired points");
  }
  LineFit fit;
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) {
    fit.intercept = y.front();
    return fit;
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::kShapeMismatch, "line fit needs distinct x values");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  return fit;
}

double endpoint_chord_deviation(const std::vector<double>& x,
                                const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::kShapeMismatch, "chord deviation needs two or more points");
  }
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double range = *hi - *lo;
  if (range == 0.0) return 0.0;
  const double x0 = x.front();
  const double x1 = x.back();
  const double y0 = y.front();
  const double y1 = y.back();
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double chord = y0 + (y1 - y0) * (x[i] - x0) / (x1 - x0);
    worst = std::max(worst, std::abs(y[i] - chord));
  }
  return worst / range;
}

LinearityReport duration_linearity(const FastSpeechModel& model,
                                   const UtteranceRecord& utterance,
                                   const SrFactorSet& factors, ControlMode mode,
                                   const EvalOptions& options, int n_tokens) {
  factors.validate();
  check_mode(model, mode);
  if (n_tokens < 1) throw Error(ErrorKind::kConfiguration, "n_tokens must be >= 1");
  LinearityReport report;
  report.model_label = options.model_label;
  report.mode = mode;
  report.utterance_id = utterance.id;
  report.factors = factors.factors;

  const auto base_req = request_for(utterance, options, mode, 1.0);
  const Mat enc = model.encode(base_req.tokens, base_req.speaker);
  const int shown = std::min<int>(n_tokens, static_cast<int>(utterance.tokens.size()));
  report.tokens.resize(shown);
  for (int t = 0; t < shown; ++t) {
    report.tokens[t].position = t;
    report.tokens[t].token = utterance.tokens[t];
  }
  for (double f : factors.factors) {
    const DurationPlan plan =
        plan_durations(model, enc, request_for(utterance, options, mode, f),
                       options.frame_spec, options.rounding);
    for (int t = 0; t < shown; ++t) report.tokens[t].durations.push_back(plan.durations[t]);
  }
  for (auto& tok : report.tokens) {
    tok.fit = fit_line(factors.factors, tok.durations);
    tok.chord_deviation = endpoint_chord_deviation(factors.factors, tok.durations);
  }
  return report;
}

}  // namespace sratts
