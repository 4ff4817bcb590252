#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "sratts/error.hpp"
#include "sratts/experiment.hpp"

using namespace sratts;
using nlohmann::json;

TEST_CASE("empty config resolves to defaults") {
  const ExperimentConfig c = json::object().get<ExperimentConfig>();
  CHECK(c == ExperimentConfig{});
  CHECK(c.frame_spec == AudioFrameSpec{});
  CHECK(c.frame_spec.sample_rate == 22050);
  CHECK(c.frame_spec.hop_length == 256);
  CHECK(c.frame_spec.n_mels == 80);
  CHECK(c.factors == "default");
  CHECK_FALSE(c.model.has_value());
}

TEST_CASE("config round trip") {
  ExperimentConfig c;
  c.frame_spec = {16000, 200, 40};
  c.model_preset = "full";
  c.model = ModelConfig::toy(DurationPredictorVariant::kSraB, 30, 40, 3);
  c.train.epochs = 7;
  c.train.learning_rate = 3e-4;
  c.train.seed = 11;
  c.selection = "ns1.5";
  c.selection_hours = 0.25;
  c.per_speaker = false;
  c.factors = "0.8,1,1.2";
  c.synthetic.n_utterances = 123;
  c.synthetic.relative_sr_min = 0.9;
  c.data_dir = "data";
  c.output_dir = "out";
  c.seed = 42;
  const json j = c;
  const ExperimentConfig back = j.get<ExperimentConfig>();
  CHECK(back == c);
  CHECK(json(back).dump() == j.dump());
  CHECK(json::parse(j.dump()).get<ExperimentConfig>() == c);
}

TEST_CASE("partial files override only what they name") {
  testutil::TempDir dir("exp");
  std::ofstream(dir / "c.json") << R"({"train": {"epochs": 3}, "seed": 9, "frame_spec": {"n_mels": 20}})";
  const ExperimentConfig c = load_experiment_config(dir / "c.json");
  CHECK(c.train.epochs == 3);
  CHECK(c.train.batch_size == TrainConfig{}.batch_size);
  CHECK(c.seed == 9);
  CHECK(c.frame_spec.n_mels == 20);
  CHECK(c.frame_spec.hop_length == 256);

  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK_THROWS_AS(load_experiment_config(dir / "bad.json"), Error);
  CHECK_THROWS_AS(load_experiment_config(dir / "missing.json"), Error);
  std::ofstream(dir / "variant.json") << R"({"model": {"variant": "sra-q"}})";
  CHECK_THROWS_AS(load_experiment_config(dir / "variant.json"), Error);
}

TEST_CASE("seed from the environment") {
  ::unsetenv("SRATTS_SEED");
  CHECK(seed_from_environment(5) == 5);
  ::setenv("SRATTS_SEED", "1234", 1);
  CHECK(seed_from_environment(5) == 1234);
  ::setenv("SRATTS_SEED", "abc", 1);
  CHECK(seed_from_environment(5) == 5);
  ::unsetenv("SRATTS_SEED");
}
