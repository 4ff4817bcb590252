#pragma once

#include <filesystem>
#include <string>

#include "sratts/corpus.hpp"

namespace testutil {

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// One-speaker record with uniform mel rows; SR filled in from `spec`.
sratts::UtteranceRecord make_record(const std::string& id, const std::string& speaker,
                                    std::vector<int> durations,
                                    const sratts::AudioFrameSpec& spec, int n_mels = 4);

// Record whose SR is forced to `sr` with a 1-second duration, for selection
// tests that reason in SR values directly.
sratts::UtteranceRecord sr_record(const std::string& id, const std::string& speaker,
                                  double sr);

std::string read_file(const std::filesystem::path& path);

}  // namespace testutil
