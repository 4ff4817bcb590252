#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sratts/corpus.hpp"
#include "sratts/error.hpp"

namespace sratts {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "mel and checkpoint files are written in host order");

constexpr char kMelMagic[4] = {'M', 'E', 'L', 'F'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

MelMatrix read_mel_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kMissingFile,
                "cannot open mel file " + path.string());
  }
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMelMagic, 4) != 0) {
    throw Error(ErrorKind::kFormat, "bad mel magic in " + path.string());
  }
  const std::uint32_t frames = read_u32(in);
  const std::uint32_t mels = read_u32(in);
  MelMatrix mel(frames, mels);
  in.read(reinterpret_cast<char*>(mel.data()),
          static_cast<std::streamsize>(mel.size() * sizeof(float)));
  if (!in) {
    throw Error(ErrorKind::kFormat, "truncated mel file " + path.string());
  }
  return mel;
}

void write_mel_file(const fs::path& path, const MelMatrix& mel) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot write mel file " + path.string());
  }
  out.write(kMelMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(mel.rows()));
  write_u32(out, static_cast<std::uint32_t>(mel.cols()));
  out.write(reinterpret_cast<const char*>(mel.data()),
            static_cast<std::streamsize>(mel.size() * sizeof(float)));
  if (!out) {
    throw Error(ErrorKind::kIo, "short write to " + path.string());
  }
}

fs::path save_corpus(const Corpus& corpus, const fs::path& dir,
                     const AudioFrameSpec& spec) {
  std::set<std::string> seen;
  for (const auto& r : corpus) {
    validate_record(r, spec.n_mels);
    if (!seen.insert(r.id).second) {
      throw Error(ErrorKind::kDuplicateId, "duplicate utterance id '" + r.id + "'");
    }
  }
  fs::create_directories(dir / "mels");
  const fs::path manifest = dir / "manifest.jsonl";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot write " + manifest.string());
  }
  for (const auto& r : corpus) {
    const std::string rel = "mels/" + r.id + ".mel";
    write_mel_file(dir / rel, r.mel);
    nlohmann::json line = {
        {"id", r.id},
        {"speaker", r.speaker_id},
        {"tokens", r.tokens},
        {"durations", r.durations},
        {"mel", rel},
        {"sr", compute_speaking_rate(r, spec)},
    };
    out << line.dump() << '\n';
  }
  return manifest;
}

Corpus load_corpus(const fs::path& manifest_path, const AudioFrameSpec& spec) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw Error(ErrorKind::kMissingFile,
                "cannot open manifest " + manifest_path.string());
  }
  const fs::path base = manifest_path.parent_path();
  Corpus corpus;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, manifest_path.string() + ":" +
                                          std::to_string(line_no) + ": " +
                                          e.what());
    }
    UtteranceRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.speaker_id = j.at("speaker").get<std::string>();
      r.tokens = j.at("tokens").get<std::vector<TokenId>>();
      r.durations = j.at("durations").get<std::vector<int>>();
      const fs::path mel_rel = j.at("mel").get<std::string>();
      const fs::path mel_path = mel_rel.is_absolute() ? mel_rel : base / mel_rel;
      if (!seen.insert(r.id).second) {
        throw Error(ErrorKind::kDuplicateId,
                    "duplicate utterance id '" + r.id + "'");
      }
      if (!fs::exists(mel_path)) {
        throw Error(ErrorKind::kMissingFile, "utterance '" + r.id +
                                                 "': mel file " +
                                                 mel_path.string() +
                                                 " does not exist");
      }
      r.mel = read_mel_file(mel_path);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, manifest_path.string() + ":" +
                                          std::to_string(line_no) + ": " +
                                          e.what());
    }
    validate_record(r, spec.n_mels);
    r.speaking_rate = compute_speaking_rate(r, spec);
    corpus.push_back(std::move(r));
  }
  return corpus;
}

}  // namespace sratts
