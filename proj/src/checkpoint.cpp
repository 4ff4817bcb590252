#include "sratts/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "sratts/config_json.hpp"
#include "sratts/error.hpp"

namespace sratts {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'S', 'R', 'C', 'K'};

ParamGroup parse_group(const std::string& s) {
  if (s == "encoder") return ParamGroup::kEncoder;
  if (s == "decoder") return ParamGroup::kDecoder;
  if (s == "duration_predictor") return ParamGroup::kDurationPredictor;
  throw Error(ErrorKind::kFormat, "unknown parameter group '" + s + "'");
}

}  // namespace

void save_checkpoint(const fs::path& path, const FastSpeechModel& model,
                     const std::vector<std::string>& speakers,
                     const AudioFrameSpec& frame_spec) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["config"] = model.config();
  header["variant"] = to_string(model.config().variant);
  header["speakers"] = speakers;
  header["frame_spec"] = frame_spec;
  nlohmann::json arrays = nlohmann::json::array();
  for (const auto& p : model.parameters()) {
    arrays.push_back({{"name", p.name},
                      {"group", to_string(p.group)},
                      {"rows", p.value.rows()},
                      {"cols", p.value.cols()}});
  }
  header["arrays"] = std::move(arrays);
  const std::string text = header.dump();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write checkpoint " + path.string());
  out.write(kMagic, 4);
  const std::uint32_t version = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::vector<float> buffer;
  for (const auto& p : model.parameters()) {
    buffer.resize(p.value.size());
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      buffer[i] = static_cast<float>(p.value.data()[i]);
    }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kMissingFile, "cannot open checkpoint " + path.string());
  }
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorKind::kFormat, path.string() + " is not a checkpoint");
  }
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || version != kCheckpointVersion) {
    throw Error(ErrorKind::kFormat, "unsupported checkpoint version in " + path.string());
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw Error(ErrorKind::kFormat, "truncated checkpoint header");

  Checkpoint ck;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
    ck.config = header.at("config").get<ModelConfig>();
    ck.speakers = header.at("speakers").get<std::vector<std::string>>();
    ck.frame_spec = header.at("frame_spec").get<AudioFrameSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("checkpoint header: ") + e.what());
  }

  std::vector<float> buffer;
  for (const auto& a : header.at("arrays")) {
    const auto name = a.at("name").get<std::string>();
    const auto rows = a.at("rows").get<Eigen::Index>();
    const auto cols = a.at("cols").get<Eigen::Index>();
    const std::size_t idx =
        ck.parameters.add(name, parse_group(a.at("group").get<std::string>()), rows, cols);
    buffer.resize(static_cast<std::size_t>(rows * cols));
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    if (!in) throw Error(ErrorKind::kFormat, "truncated array " + name);
    Mat& m = ck.parameters[idx];
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = buffer[i];
  }
  // Constructing the model validates names and shapes against the config.
  FastSpeechModel check(ck.config, ck.parameters);
  for (std::size_t i = 0; i < check.parameters().size(); ++i) {
    const auto& expected = check.parameters().at(i);
    const std::size_t j = ck.parameters.find(expected.name);
    if (ck.parameters.at(j).group != expected.group) {
      throw Error(ErrorKind::kFormat, "parameter " + expected.name + " has the wrong group");
    }
  }
  ck.parameters = check.parameters();
  return ck;
}

}  // namespace sratts
