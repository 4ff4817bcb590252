#pragma once

#include <span>
#include <vector>

namespace sratts {

struct F0Config {
  double f_min = 50.0;
  double f_max = 500.0;
  double window_seconds = 0.046;
  double hop_seconds = 0.010;
  double voicing_threshold = 0.5;  // normalized autocorrelation peak
};

struct F0Track {
  std::vector<double> f0;        // Hz, 0 where unvoiced
  std::vector<bool> voiced;
  std::vector<double> strength;  // normalized autocorrelation at the chosen lag
  double hop_seconds = 0.0;

  std::size_t voiced_count() const;
};

// Normalized-autocorrelation pitch tracker. Among lags whose correlation is
// within 10% of the best one in the search band, the shortest wins, which
// keeps octave-down errors away; the lag is refined by parabolic
// interpolation. Windows shorter than the waveform yield no frames.
F0Track estimate_f0(std::span<const double> waveform, int sample_rate,
                    const F0Config& config = {});

}  // namespace sratts
