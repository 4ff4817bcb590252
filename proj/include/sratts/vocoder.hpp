#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sratts/corpus.hpp"
#include "sratts/nn.hpp"

namespace sratts {

struct VocoderConfig {
  int n_fft = 1024;  // also the Hann window length
  double f_min = 0.0;
  double f_max = 8000.0;
  int iterations = 32;
  std::uint64_t phase_seed = 0;

  void validate(const AudioFrameSpec& spec) const;
};

// Triangular HTK-mel filters, peak 1: n_mels x (n_fft / 2 + 1).
// Throws Error{kConfiguration} if any filter covers no FFT bin.
Mat mel_filterbank(const AudioFrameSpec& spec, const VocoderConfig& config);

// Centred frames at t * hop for t in [0, len / hop): frames x (n_fft/2 + 1).
Mat stft_magnitude(std::span<const double> waveform, const AudioFrameSpec& spec,
                   const VocoderConfig& config);

// Linear-magnitude mel spectrogram, frames x n_mels.
MelMatrix mel_spectrogram(std::span<const double> waveform,
                          const AudioFrameSpec& spec,
                          const VocoderConfig& config);

// Output length is n_frames * hop_length. The magnitude estimate comes from
// the pseudo-inverse of the filterbank; the initial phase is drawn from
// config.phase_seed, so the result is deterministic.
std::vector<double> vocode_griffin_lim(const MelMatrix& mel,
                                       const AudioFrameSpec& spec,
                                       const VocoderConfig& config = {});

// 16-bit PCM mono; samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path,
               std::span<const double> samples, int sample_rate);
std::vector<double> read_wav(const std::filesystem::path& path,
                             int* sample_rate = nullptr);

}  // namespace sratts
