#include "sratts/pitch.hpp"

#include <algorithm>
#include <cmath>

#include "sratts/error.hpp"

namespace sratts {

std::size_t F0Track::voiced_count() const {
  return static_cast<std::size_t>(std::count(voiced.begin(), voiced.end(), true));
}

F0Track estimate_f0(std::span<const double> waveform, int sample_rate,
                    const F0Config& config) {
  if (sample_rate <= 0) throw Error(ErrorKind::kConfiguration, "sample rate must be positive");
  if (!(config.f_min > 0.0 && config.f_max > config.f_min)) {
    throw Error(ErrorKind::kConfiguration, "F0 band must satisfy 0 < f_min < f_max");
  }
  const auto window = static_cast<std::size_t>(std::lround(config.window_seconds * sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(config.hop_seconds * sample_rate));
  const int lag_min = std::max(1, static_cast<int>(std::floor(sample_rate / config.f_max)));
  const int lag_max = static_cast<int>(std::ceil(sample_rate / config.f_min));
  if (hop == 0 || window <= static_cast<std::size_t>(lag_max + 1)) {
    throw Error(ErrorKind::kConfiguration, "F0 window too short for the lowest frequency");
  }

  F0Track track;
  track.hop_seconds = static_cast<double>(hop) / sample_rate;
  if (waveform.size() < window) return track;

  std::vector<double> frame(window);
  // nccf[lag] for lag in [lag_min - 1, lag_max + 1]
  std::vector<double> nccf(lag_max + 2, 0.0);
  for (std::size_t start = 0; start + window <= waveform.size(); start += hop) {
    double mean = 0.0;
    for (std::size_t n = 0; n < window; ++n) mean += waveform[start + n];
    mean /= static_cast<double>(window);
    for (std::size_t n = 0; n < window; ++n) frame[n] = waveform[start + n] - mean;

    for (int lag = lag_min - 1; lag <= lag_max + 1; ++lag) {
      double xy = 0.0;
      double xx = 0.0;
      double yy = 0.0;
      for (std::size_t n = 0; n + lag < window; ++n) {
        xy += frame[n] * frame[n + lag];
        xx += frame[n] * frame[n];
        yy += frame[n + lag] * frame[n + lag];
      }
      nccf[lag] = (xx > 1e-12 && yy > 1e-12) ? xy / std::sqrt(xx * yy) : 0.0;
    }

    double best = 0.0;
    for (int lag = lag_min; lag <= lag_max; ++lag) best = std::max(best, nccf[lag]);
    int chosen = -1;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      const bool peak = nccf[lag] >= nccf[lag - 1] && nccf[lag] >= nccf[lag + 1];
      if (peak && nccf[lag] >= 0.9 * best && nccf[lag] > 0.0) {
        chosen = lag;
        break;
      }
    }
    double f0 = 0.0;
    double strength = 0.0;
    if (chosen > 0) {
      const double a = nccf[chosen - 1];
      const double b = nccf[chosen];
      const double c = nccf[chosen + 1];
      const double denom = a - 2.0 * b + c;
      const double shift = std::abs(denom) > 1e-15 ? 0.5 * (a - c) / denom : 0.0;
      const double lag = chosen + std::clamp(shift, -0.5, 0.5);
      f0 = std::clamp(sample_rate / lag, config.f_min, config.f_max);
      strength = b;
    }
    const bool voiced = chosen > 0 && strength >= config.voicing_threshold;
    track.f0.push_back(voiced ? f0 : 0.0);
    track.voiced.push_back(voiced);
    track.strength.push_back(strength);
  }
  return track;
}

}  // namespace sratts
