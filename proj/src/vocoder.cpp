#include "sratts/vocoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "sratts/error.hpp"
#include "sratts/random.hpp"

namespace sratts {

namespace {

using Complex = std::complex<double>;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

class Stft {
 public:
  Stft(const AudioFrameSpec& spec, const VocoderConfig& config)
      : n_fft_(config.n_fft), hop_(spec.hop_length), window_(hann(config.n_fft)) {}

  int bins() const { return n_fft_ / 2 + 1; }

  // frames x bins
  std::vector<std::vector<Complex>> forward(std::span<const double> x,
                                            Eigen::Index n_frames) {
    std::vector<std::vector<Complex>> out(n_frames);
    std::vector<double> frame(n_fft_);
    std::vector<Complex> spectrum;
    const long len = static_cast<long>(x.size());
    for (Eigen::Index t = 0; t < n_frames; ++t) {
      const long start = static_cast<long>(t) * hop_ - n_fft_ / 2;
      for (int n = 0; n < n_fft_; ++n) {
        const long i = start + n;
        frame[n] = (i >= 0 && i < len) ? x[i] * window_[n] : 0.0;
      }
      fft_.fwd(spectrum, frame);
      out[t].assign(spectrum.begin(), spectrum.begin() + bins());
    }
    return out;
  }

  // Weighted overlap-add inverse; output length n_frames * hop.
  std::vector<double> inverse(const std::vector<std::vector<Complex>>& frames) {
    const long len = static_cast<long>(frames.size()) * hop_;
    std::vector<double> y(len, 0.0);
    std::vector<double> norm(len, 0.0);
    std::vector<Complex> full(n_fft_);
    std::vector<double> frame;
    for (std::size_t t = 0; t < frames.size(); ++t) {
      for (int k = 0; k < bins(); ++k) full[k] = frames[t][k];
      for (int k = bins(); k < n_fft_; ++k) full[k] = std::conj(frames[t][n_fft_ - k]);
      fft_.inv(frame, full);
      const long start = static_cast<long>(t) * hop_ - n_fft_ / 2;
      for (int n = 0; n < n_fft_; ++n) {
        const long i = start + n;
        if (i < 0 || i >= len) continue;
        y[i] += window_[n] * frame[n];
        norm[i] += window_[n] * window_[n];
      }
    }
    for (long i = 0; i < len; ++i) {
      if (norm[i] > 1e-10) y[i] /= norm[i];
    }
    return y;
  }

 private:
  int n_fft_;
  int hop_;
  std::vector<double> window_;
  Eigen::FFT<double> fft_;
};

}  // namespace

void VocoderConfig::validate(const AudioFrameSpec& spec) const {
  spec.validate();
  if (n_fft < 2 || n_fft % 2 != 0) {
    throw Error(ErrorKind::kConfiguration, "n_fft must be a positive even number");
  }
  if (iterations < 1) {
    throw Error(ErrorKind::kConfiguration, "Griffin-Lim needs at least one iteration");
  }
  if (!(f_min >= 0.0 && f_max > f_min && f_max <= spec.sample_rate / 2.0)) {
    throw Error(ErrorKind::kConfiguration, "mel band must satisfy 0 <= f_min < f_max <= Nyquist");
  }
}

Mat mel_filterbank(const AudioFrameSpec& spec, const VocoderConfig& config) {
  config.validate(spec);
  const int bins = config.n_fft / 2 + 1;
  const double lo = hz_to_mel(config.f_min);
  const double hi = hz_to_mel(config.f_max);
  std::vector<double> edges(spec.n_mels + 2);
  for (int i = 0; i < spec.n_mels + 2; ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * i / (spec.n_mels + 1));
  }
  Mat basis = Mat::Zero(spec.n_mels, bins);
  const double bin_hz = static_cast<double>(spec.sample_rate) / config.n_fft;
  for (int m = 0; m < spec.n_mels; ++m) {
    const double left = edges[m];
    const double centre = edges[m + 1];
    const double right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = k * bin_hz;
      double v = 0.0;
      if (f > left && f <= centre) {
        v = (f - left) / (centre - left);
      } else if (f > centre && f < right) {
        v = (right - f) / (right - centre);
      }
      basis(m, k) = v;
    }
    if (basis.row(m).maxCoeff() <= 0.0) {
      throw Error(ErrorKind::kConfiguration,
                  "invalid mel basis: filter " + std::to_string(m) +
                      " covers no FFT bin (too many mels for n_fft)");
    }
  }
  return basis;
}

Mat stft_magnitude(std::span<const double> waveform, const AudioFrameSpec& spec,
                   const VocoderConfig& config) {
  config.validate(spec);
  Stft stft(spec, config);
  const Eigen::Index n_frames = static_cast<Eigen::Index>(waveform.size()) / spec.hop_length;
  const auto frames = stft.forward(waveform, n_frames);
  Mat mag(n_frames, stft.bins());
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    for (int k = 0; k < stft.bins(); ++k) mag(t, k) = std::abs(frames[t][k]);
  }
  return mag;
}

MelMatrix mel_spectrogram(std::span<const double> waveform,
                          const AudioFrameSpec& spec,
                          const VocoderConfig& config) {
  const Mat basis = mel_filterbank(spec, config);
  const Mat mag = stft_magnitude(waveform, spec, config);
  return (mag * basis.transpose()).cast<float>();
}

std::vector<double> vocode_griffin_lim(const MelMatrix& mel,
                                       const AudioFrameSpec& spec,
                                       const VocoderConfig& config) {
  const Mat basis = mel_filterbank(spec, config);
  if (mel.cols() != spec.n_mels) {
    throw Error(ErrorKind::kShapeMismatch,
                "mel has " + std::to_string(mel.cols()) + " channels, frame spec says " +
                    std::to_string(spec.n_mels));
  }
  if (!mel.allFinite() || (mel.size() > 0 && mel.minCoeff() < 0.0f)) {
    throw Error(ErrorKind::kShapeMismatch, "mel must be finite and non-negative");
  }
  const Eigen::Index n_frames = mel.rows();
  if (n_frames == 0) return {};

  const Mat pinv = basis.completeOrthogonalDecomposition().pseudoInverse();
  const Mat magnitude = (mel.cast<double>() * pinv.transpose()).cwiseMax(0.0);

  Stft stft(spec, config);
  const int bins = stft.bins();
  Rng rng(config.phase_seed);
  std::vector<std::vector<Complex>> spec_frames(n_frames, std::vector<Complex>(bins));
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    for (int k = 0; k < bins; ++k) {
      const double phase = 2.0 * std::numbers::pi * rng.uniform();
      spec_frames[t][k] = std::polar(magnitude(t, k), phase);
    }
  }
  std::vector<double> y = stft.inverse(spec_frames);
  for (int it = 0; it < config.iterations; ++it) {
    const auto estimate = stft.forward(y, n_frames);
    for (Eigen::Index t = 0; t < n_frames; ++t) {
      for (int k = 0; k < bins; ++k) {
        const double a = std::abs(estimate[t][k]);
        const Complex unit = a > 1e-12 ? estimate[t][k] / a : Complex(1.0, 0.0);
        spec_frames[t][k] = magnitude(t, k) * unit;
      }
    }
    y = stft.inverse(spec_frames);
  }
  return y;
}

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void write_wav(const std::filesystem::path& path,
               std::span<const double> samples, int sample_rate) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, 1);
  put<std::uint16_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate * 2));
  put<std::uint16_t>(out, 2);
  put<std::uint16_t>(out, 16);
  out.write("data", 4);
  put<std::uint32_t>(out, data_bytes);
  for (double s : samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    put<std::int16_t>(out, static_cast<std::int16_t>(std::lround(c * 32767.0)));
  }
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

std::vector<double> read_wav(const std::filesystem::path& path, int* sample_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, "cannot open " + path.string());
  char tag[4];
  in.read(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0) {
    throw Error(ErrorKind::kFormat, path.string() + " is not a RIFF file");
  }
  get<std::uint32_t>(in);
  in.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0) {
    throw Error(ErrorKind::kFormat, path.string() + " is not a WAVE file");
  }
  int rate = 0;
  int bits = 0;
  int channels = 0;
  while (in.read(tag, 4)) {
    const auto size = get<std::uint32_t>(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      const auto format = get<std::uint16_t>(in);
      channels = get<std::uint16_t>(in);
      rate = static_cast<int>(get<std::uint32_t>(in));
      get<std::uint32_t>(in);
      get<std::uint16_t>(in);
      bits = get<std::uint16_t>(in);
      if (format != 1 || bits != 16 || channels != 1) {
        throw Error(ErrorKind::kFormat, "only 16-bit PCM mono WAV is supported");
      }
      in.seekg(size - 16, std::ios::cur);
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (bits == 0) throw Error(ErrorKind::kFormat, "WAV data before fmt chunk");
      std::vector<double> samples(size / 2);
      for (auto& s : samples) s = get<std::int16_t>(in) / 32767.0;
      if (!in) throw Error(ErrorKind::kFormat, "truncated WAV data in " + path.string());
      if (sample_rate != nullptr) *sample_rate = rate;
      return samples;
    } else {
      in.seekg(size, std::ios::cur);
    }
  }
  throw Error(ErrorKind::kFormat, "no data chunk in " + path.string());
}

}  // namespace sratts
