#include "helpers.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace testutil {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("sratts_" + tag + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

sratts::UtteranceRecord make_record(const std::string& id, const std::string& speaker,
                                    std::vector<int> durations,
                                    const sratts::AudioFrameSpec& spec, int n_mels) {
  sratts::UtteranceRecord r;
  r.id = id;
  r.speaker_id = speaker;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    r.tokens.push_back(static_cast<sratts::TokenId>(i % 5));
  }
  r.durations = std::move(durations);
  long frames = 0;
  for (int d : r.durations) frames += d;
  r.mel = sratts::MelMatrix::Constant(frames, n_mels, 0.25f);
  for (long f = 0; f < frames; ++f) r.mel(f, 0) = static_cast<float>(f) / 8.0f;
  r.speaking_rate = sratts::compute_speaking_rate(r, spec);
  return r;
}

sratts::UtteranceRecord sr_record(const std::string& id, const std::string& speaker,
                                  double sr) {
  // 1 s of audio at 100 frames/s; SR field overridden for selection tests.
  sratts::UtteranceRecord r;
  r.id = id;
  r.speaker_id = speaker;
  r.tokens = {0};
  r.durations = {100};
  r.mel = sratts::MelMatrix::Zero(100, 1);
  r.speaking_rate = sr;
  return r;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testutil
