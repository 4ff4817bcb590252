#include "sratts/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include "sratts/error.hpp"
#include "sratts/random.hpp"

namespace sratts {

void AudioFrameSpec::validate() const {
  if (sample_rate <= 0 || hop_length <= 0 || n_mels <= 0) {
    throw Error(ErrorKind::kConfiguration,
                "frame spec fields must be positive");
  }
}

long UtteranceRecord::total_frames() const {
  return std::accumulate(durations.begin(), durations.end(), 0L);
}

bool UtteranceRecord::operator==(const UtteranceRecord& other) const {
  return id == other.id && speaker_id == other.speaker_id &&
         tokens == other.tokens && durations == other.durations &&
         mel.rows() == other.mel.rows() && mel.cols() == other.mel.cols() &&
         std::equal(mel.data(), mel.data() + mel.size(), other.mel.data()) &&
         speaking_rate == other.speaking_rate;
}

double compute_speaking_rate(std::size_t n_tokens, long total_frames,
                             const AudioFrameSpec& spec) {
  if (n_tokens == 0) {
    throw Error(ErrorKind::kInvalidUtterance,
                "speaking rate undefined for an empty token sequence");
  }
  if (total_frames < 1) {
    throw Error(ErrorKind::kInvalidUtterance,
                "speaking rate undefined for zero audio frames");
  }
  return spec.seconds(static_cast<double>(total_frames)) /
         static_cast<double>(n_tokens);
}

double compute_speaking_rate(const UtteranceRecord& record,
                             const AudioFrameSpec& spec) {
  return compute_speaking_rate(record.tokens.size(), record.total_frames(),
                               spec);
}

void validate_record(const UtteranceRecord& record, int n_mels) {
  if (record.tokens.empty()) {
    throw Error(ErrorKind::kInvalidUtterance,
                "utterance '" + record.id + "' has no tokens");
  }
  if (record.durations.size() != record.tokens.size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "utterance '" + record.id + "': " +
                    std::to_string(record.tokens.size()) + " tokens but " +
                    std::to_string(record.durations.size()) + " durations");
  }
  for (int d : record.durations) {
    if (d < 0) {
      throw Error(ErrorKind::kInvalidUtterance,
                  "utterance '" + record.id + "' has a negative duration");
    }
  }
  const long frames = record.total_frames();
  if (frames < 1) {
    throw Error(ErrorKind::kInvalidUtterance,
                "utterance '" + record.id + "' has zero total frames");
  }
  if (record.mel.rows() != frames) {
    throw Error(ErrorKind::kShapeMismatch,
                "utterance '" + record.id + "': durations sum to " +
                    std::to_string(frames) + " frames but mel has " +
                    std::to_string(record.mel.rows()));
  }
  if (n_mels > 0 && record.mel.cols() != n_mels) {
    throw Error(ErrorKind::kShapeMismatch,
                "utterance '" + record.id + "': mel has " +
                    std::to_string(record.mel.cols()) + " channels, expected " +
                    std::to_string(n_mels));
  }
}

double record_seconds(const UtteranceRecord& record,
                      const AudioFrameSpec& spec) {
  return spec.seconds(static_cast<double>(record.total_frames()));
}

// ---------------------------------------------------------------------------

SrStatistics compute_sr_statistics(const std::vector<double>& speaking_rates,
                                   int bins) {
  if (speaking_rates.empty()) {
    throw Error(ErrorKind::kEmptyCorpus,
                "cannot compute SR statistics of an empty corpus");
  }
  if (bins < 1) {
    throw Error(ErrorKind::kConfiguration, "histogram needs at least one bin");
  }
  SrStatistics stats;
  stats.count = speaking_rates.size();
  // Welford accumulation.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double sr : speaking_rates) {
    ++n;
    const double delta = sr - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (sr - mean);
  }
  stats.mean = mean;
  stats.std = std::sqrt(std::max(0.0, m2 / static_cast<double>(n)));

  const auto [lo_it, hi_it] =
      std::minmax_element(speaking_rates.begin(), speaking_rates.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Histogram& h = stats.histogram;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / bins;
  for (int i = 0; i <= bins; ++i) h.edges[i] = lo + width * i;
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double sr : speaking_rates) {
    int bin = width > 0.0 ? static_cast<int>((sr - lo) / width) : 0;
    // Inclusive-left bins; the maximum falls into the last bin.
    bin = std::clamp(bin, 0, bins - 1);
    ++h.counts[bin];
  }
  return stats;
}

SrStatistics compute_sr_statistics(const Corpus& corpus, int bins) {
  std::vector<double> rates;
  rates.reserve(corpus.size());
  for (const auto& r : corpus) rates.push_back(r.speaking_rate);
  return compute_sr_statistics(rates, bins);
}

// ---------------------------------------------------------------------------

SelectionStrategy SelectionStrategy::from_label(const std::string& label,
                                                double budget_seconds,
                                                std::uint64_t seed) {
  std::string lower = label;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  SelectionStrategy s;
  s.budget_seconds = budget_seconds;
  s.seed = seed;
  if (lower == "rs") {
    s.kind = SelectionKind::kRandom;
  } else if (lower == "ts") {
    s.kind = SelectionKind::kTailFirst;
  } else if (lower == "ns1.5") {
    s.kind = SelectionKind::kNarrow;
    s.ns_width = 1.5;
  } else if (lower == "ns1") {
    s.kind = SelectionKind::kNarrow;
    s.ns_width = 1.0;
  } else {
    throw Error(ErrorKind::kConfiguration,
                "unknown selection strategy '" + label +
                    "' (expected rs, ts, ns1.5 or ns1)");
  }
  return s;
}

std::string SelectionStrategy::label() const {
  switch (kind) {
    case SelectionKind::kRandom:
      return "RS";
    case SelectionKind::kTailFirst:
      return "TS";
    case SelectionKind::kNarrow: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "NS%g", ns_width);
      return buf;
    }
  }
  return "?";
}

void SelectionStrategy::validate() const {
  if (!(budget_seconds > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "selection budget must be > 0");
  }
  if (kind == SelectionKind::kNarrow && !(ns_width > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "ns_width must be > 0");
  }
}

namespace {

// Appends pool members in seeded random order until the running total first
// reaches the budget. The crossing utterance is kept.
void fill_randomly(const Corpus& corpus, std::vector<std::size_t> pool,
                   double budget, const AudioFrameSpec& spec, Rng& rng,
                   double& total, std::vector<std::size_t>& out) {
  rng.shuffle(pool);
  for (std::size_t idx : pool) {
    if (total >= budget) break;
    out.push_back(idx);
    total += record_seconds(corpus[idx], spec);
  }
}

}  // namespace

Corpus select_training_subset(const Corpus& corpus,
                              const SelectionStrategy& strategy,
                              const AudioFrameSpec& spec) {
  strategy.validate();
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    by_speaker[corpus[i].speaker_id].push_back(i);
  }

  Rng rng(strategy.seed);
  std::vector<std::size_t> chosen;
  for (const auto& [speaker, members] : by_speaker) {
    std::vector<double> rates;
    for (std::size_t i : members) rates.push_back(corpus[i].speaking_rate);
    const SrStatistics stats = compute_sr_statistics(rates, 1);
    auto distance = [&](std::size_t i) {
      return std::abs(corpus[i].speaking_rate - stats.mean);
    };

    double total = 0.0;
    switch (strategy.kind) {
      case SelectionKind::kRandom:
        fill_randomly(corpus, members, strategy.budget_seconds, spec, rng,
                      total, chosen);
        break;
      case SelectionKind::kTailFirst: {
        std::vector<std::size_t> tail;
        std::vector<std::size_t> rest;
        for (std::size_t i : members) {
          (distance(i) > kTailWidth * stats.std ? tail : rest).push_back(i);
        }
        std::stable_sort(tail.begin(), tail.end(),
                         [&](std::size_t a, std::size_t b) {
                           if (distance(a) != distance(b))
                             return distance(a) > distance(b);
                           return corpus[a].id < corpus[b].id;
                         });
        for (std::size_t i : tail) {
          if (total >= strategy.budget_seconds) break;
          chosen.push_back(i);
          total += record_seconds(corpus[i], spec);
        }
        fill_randomly(corpus, rest, strategy.budget_seconds, spec, rng, total,
                      chosen);
        break;
      }
      case SelectionKind::kNarrow: {
        std::vector<std::size_t> pool;
        double pool_seconds = 0.0;
        for (std::size_t i : members) {
          if (distance(i) <= strategy.ns_width * stats.std) {
            pool.push_back(i);
            pool_seconds += record_seconds(corpus[i], spec);
          }
        }
        if (pool_seconds < strategy.budget_seconds) {
          char buf[256];
          std::snprintf(buf, sizeof(buf),
                        "speaker '%s': %s pool holds %.3f s, budget is %.3f s",
                        speaker.c_str(), strategy.label().c_str(),
                        pool_seconds, strategy.budget_seconds);
          throw InsufficientDataError(buf, pool_seconds);
        }
        fill_randomly(corpus, pool, strategy.budget_seconds, spec, rng, total,
                      chosen);
        break;
      }
    }
  }

  Corpus subset;
  subset.reserve(chosen.size());
  for (std::size_t i : chosen) subset.push_back(corpus[i]);
  return subset;
}

// ---------------------------------------------------------------------------

void SyntheticCorpusSpec::validate() const {
  frame_spec.validate();
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::kConfiguration, "synthetic corpus: " + msg);
  };
  if (vocab_size < 1) fail("vocab_size must be >= 1");
  if (n_utterances < 1) fail("n_utterances must be >= 1");
  if (min_tokens < 1 || max_tokens < min_tokens) fail("bad token range");
  if (n_speakers < 1) fail("n_speakers must be >= 1");
  if (static_cast<int>(base_duration.size()) != vocab_size ||
      static_cast<int>(sr_exponent.size()) != vocab_size) {
    fail("per-token law arrays must have vocab_size entries");
  }
  for (double b : base_duration) {
    if (!(b > 0.0)) fail("base durations must be positive");
  }
  if (!(reference_sr > 0.0)) fail("reference_sr must be positive");
  if (!(sr_min > 0.0) || sr_max < sr_min) fail("sr range must be positive");
  if (static_cast<int>(speaker_sr_scale.size()) != n_speakers) {
    fail("speaker_sr_scale must have n_speakers entries");
  }
  for (double s : speaker_sr_scale) {
    if (!(s > 0.0)) fail("speaker scales must be positive");
  }
  if (mel_patterns.rows() != vocab_size ||
      mel_patterns.cols() != frame_spec.n_mels) {
    fail("mel_patterns must be vocab_size x n_mels");
  }
  if (mel_noise < 0.0) fail("mel_noise must be >= 0");
}

SyntheticCorpusSpec make_synthetic_spec(const SyntheticLawParams& p) {
  Rng rng(p.seed ^ 0x5eedc0de5eedc0deULL);
  SyntheticCorpusSpec spec;
  spec.vocab_size = p.vocab_size;
  spec.n_utterances = p.n_utterances;
  spec.min_tokens = p.min_tokens;
  spec.max_tokens = p.max_tokens;
  spec.n_speakers = p.n_speakers;
  spec.mel_noise = p.mel_noise;
  spec.frame_spec = p.frame_spec;
  spec.seed = p.seed;
  double base_sum = 0.0;
  for (int t = 0; t < p.vocab_size; ++t) {
    spec.base_duration.push_back(rng.uniform(p.base_min, p.base_max));
    spec.sr_exponent.push_back(rng.uniform(p.exponent_min, p.exponent_max));
    base_sum += spec.base_duration.back();
  }
  // The law is centred so that an average token at the reference rate
  // lasts exactly the reference SR.
  spec.reference_sr = p.frame_spec.seconds(base_sum / p.vocab_size);
  spec.sr_min = p.relative_sr_min * spec.reference_sr;
  spec.sr_max = p.relative_sr_max * spec.reference_sr;
  for (int k = 0; k < p.n_speakers; ++k) {
    // Speakers spread symmetrically around 1 in 10% steps.
    spec.speaker_sr_scale.push_back(1.0 + 0.1 * (k - (p.n_speakers - 1) / 2.0));
  }
  spec.mel_patterns.resize(p.vocab_size, p.frame_spec.n_mels);
  for (int t = 0; t < p.vocab_size; ++t) {
    for (int m = 0; m < p.frame_spec.n_mels; ++m) {
      spec.mel_patterns(t, m) = static_cast<float>(rng.uniform());
    }
  }
  return spec;
}

DurationLaw::DurationLaw(std::vector<double> base, std::vector<double> exponent,
                         double reference_sr)
    : base_(std::move(base)),
      exponent_(std::move(exponent)),
      reference_sr_(reference_sr) {}

double DurationLaw::expected_duration(TokenId token, double sr) const {
  if (token < 0 || static_cast<std::size_t>(token) >= base_.size()) {
    throw Error(ErrorKind::kOutOfRange, "token id outside the duration law");
  }
  return base_[token] * std::pow(sr / reference_sr_, exponent_[token]);
}

int DurationLaw::oracle_duration(TokenId token, double sr) const {
  return std::max(1, static_cast<int>(std::lround(expected_duration(token, sr))));
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  SyntheticCorpus out{{}, DurationLaw(spec.base_duration, spec.sr_exponent,
                                      spec.reference_sr)};
  Rng rng(spec.seed);
  out.corpus.reserve(spec.n_utterances);
  const int n_mels = spec.frame_spec.n_mels;
  for (int i = 0; i < spec.n_utterances; ++i) {
    UtteranceRecord r;
    char id[32];
    std::snprintf(id, sizeof(id), "utt%05d", i);
    r.id = id;
    const int speaker = i % spec.n_speakers;
    r.speaker_id = "spk" + std::to_string(speaker);
    const int length =
        spec.min_tokens +
        static_cast<int>(rng.below(spec.max_tokens - spec.min_tokens + 1));
    const double target_sr = rng.uniform(spec.sr_min, spec.sr_max) *
                             spec.speaker_sr_scale[speaker];
    for (int k = 0; k < length; ++k) {
      const auto tok = static_cast<TokenId>(rng.below(spec.vocab_size));
      r.tokens.push_back(tok);
      r.durations.push_back(out.law.oracle_duration(tok, target_sr));
    }
    r.mel.resize(r.total_frames(), n_mels);
    long row = 0;
    for (std::size_t k = 0; k < r.tokens.size(); ++k) {
      for (int f = 0; f < r.durations[k]; ++f, ++row) {
        for (int m = 0; m < n_mels; ++m) {
          const double noise = rng.uniform(-spec.mel_noise, spec.mel_noise);
          r.mel(row, m) = static_cast<float>(
              std::max(0.0, spec.mel_patterns(r.tokens[k], m) + noise));
        }
      }
    }
    r.speaking_rate = compute_speaking_rate(r, spec.frame_spec);
    out.corpus.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> speaker_ids(const Corpus& corpus) {
  std::set<std::string> ids;
  for (const auto& r : corpus) ids.insert(r.speaker_id);
  return {ids.begin(), ids.end()};
}

}  // namespace sratts
