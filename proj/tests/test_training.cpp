#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "sratts/checkpoint.hpp"
#include "sratts/error.hpp"
#include "sratts/training.hpp"

using namespace sratts;
using Variant = DurationPredictorVariant;

namespace {

const AudioFrameSpec kSpec{16000, 160, 4};

ModelConfig small(Variant v) {
  ModelConfig c = ModelConfig::toy(v, 8, 4, 2);
  c.n_encoder_layers = 1;
  c.n_decoder_layers = 1;
  c.d_model = 8;
  c.d_ff = 12;
  c.d_attn = 4;
  c.d_duration = 6;
  c.max_frames = 256;
  return c;
}

UtteranceRecord varied(const std::string& id, const std::string& spk, std::vector<int> d,
                       double shift) {
  UtteranceRecord r = testutil::make_record(id, spk, d, kSpec, 4);
  for (Eigen::Index i = 0; i < r.mel.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.mel.cols(); ++j) {
      r.mel(i, j) = static_cast<float>(0.5 + 0.3 * std::sin(0.7 * i + 1.3 * j + shift));
    }
  }
  return r;
}

Corpus small_corpus() {
  Corpus c;
  c.push_back(varied("u1", "a", {2, 3, 1, 4}, 0.0));
  c.push_back(varied("u2", "b", {1, 1, 2}, 1.0));
  c.push_back(varied("u3", "a", {3, 2, 2, 2, 1}, 2.0));
  c.push_back(varied("u4", "b", {4, 1}, 3.0));
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t k = 0; k < c[i].tokens.size(); ++k) {
      c[i].tokens[k] = static_cast<TokenId>((i + 3 * k) % 8);
    }
  }
  return c;
}

TrainConfig quick(int epochs, double lr = 1e-3) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 2;
  t.learning_rate = lr;
  t.seed = 5;
  return t;
}

}  // namespace

TEST_CASE("train config validation") {
  CHECK_NOTHROW(quick(1).validate());
  TrainConfig t = quick(1);
  t.batch_size = 0;
  CHECK_THROWS_AS(t.validate(), Error);
  t = quick(-1);
  CHECK_THROWS_AS(t.validate(), Error);
  t = quick(1, -1e-3);
  CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("empty corpus is rejected") {
  FastSpeechModel m(small(Variant::kBaseline), 1);
  try {
    train(m, {}, quick(1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptyCorpus);
  }
}

TEST_CASE("single utterance overfits") {
  for (Variant v : {Variant::kBaseline, Variant::kSraE, Variant::kSraB}) {
    CAPTURE(to_string(v));
    FastSpeechModel m(small(v), 2);
    Corpus one = {small_corpus()[0]};
    TrainConfig t = quick(200, 3e-3);
    t.batch_size = 1;
    const TrainResult r = train(m, one, t);
    REQUIRE(r.history.size() == 200);
    CHECK(r.history.back().total <= 0.1 * r.history.front().total);
  }
}

TEST_CASE("training is deterministic under a fixed seed") {
  const Corpus c = small_corpus();
  FastSpeechModel a(small(Variant::kSraE), 3);
  FastSpeechModel b(small(Variant::kSraE), 3);
  const TrainResult ra = train(a, c, quick(4));
  const TrainResult rb = train(b, c, quick(4));
  CHECK(a.parameters().identical(b.parameters()));
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    CHECK(ra.history[i].total == rb.history[i].total);
  }
  FastSpeechModel d(small(Variant::kSraE), 3);
  TrainConfig other = quick(4);
  other.seed = 6;
  train(d, c, other);
  CHECK_FALSE(a.parameters().identical(d.parameters()));
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  FastSpeechModel m(small(Variant::kSraB), 4);
  const ParameterSet before = m.parameters();
  const TrainResult r = train(m, small_corpus(), quick(2, 0.0));
  CHECK(m.parameters().identical(before));
  CHECK(r.history.size() == 2);
  CHECK(r.history[0].total == r.history[1].total);
}

TEST_CASE("freeze presets") {
  CHECK(FreezeConfig::preset("FT1") == FreezeConfig{true, true});
  CHECK(FreezeConfig::preset("ft2") == FreezeConfig{false, true});
  CHECK(FreezeConfig::preset("ft3") == FreezeConfig{false, false});
  CHECK_THROWS_AS(FreezeConfig::preset("ft4"), Error);

  FastSpeechModel m(small(Variant::kSraE), 1);
  const ParameterSet& ps = m.parameters();
  for (const char* name : {"ft1", "ft2", "ft3"}) {
    const FreezeConfig f = FreezeConfig::preset(name);
    const auto mask = apply_freeze(ps, f);
    REQUIRE(mask.size() == ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
      switch (ps.at(i).group) {
        case ParamGroup::kEncoder: CHECK(mask[i] == !f.freeze_encoder); break;
        case ParamGroup::kDecoder: CHECK(mask[i] == !f.freeze_decoder); break;
        case ParamGroup::kDurationPredictor: CHECK(mask[i]); break;
      }
    }
  }
}

TEST_CASE("frozen groups stay bit-identical") {
  const Corpus c = small_corpus();
  FastSpeechModel base(small(Variant::kBaseline), 8);
  train(base, c, quick(2));
  Checkpoint ck{base.config(), base.parameters(), speaker_ids(c), kSpec};

  for (const char* preset : {"ft1", "ft2", "ft3"}) {
    CAPTURE(preset);
    const FreezeConfig f = FreezeConfig::preset(preset);
    const FinetuneResult r = finetune(ck, Variant::kSraE, c, f, quick(3));
    const ParameterSet& after = r.model.parameters();
    for (std::size_t i = 0; i < after.size(); ++i) {
      const auto& p = after.at(i);
      const std::size_t j = ck.parameters.find(p.name);
      if (j == ParameterSet::npos) continue;
      const bool same = after[i] == ck.parameters[j];
      if (p.group == ParamGroup::kEncoder) CHECK(same == f.freeze_encoder);
      if (p.group == ParamGroup::kDecoder) CHECK(same == f.freeze_decoder);
      if (p.group == ParamGroup::kDurationPredictor) CHECK_FALSE(same);
    }
  }
}

TEST_CASE("finetune setup copies everything but the conditioner") {
  const Corpus c = small_corpus();
  FastSpeechModel base(small(Variant::kBaseline), 9);
  Checkpoint ck{base.config(), base.parameters(), speaker_ids(c), kSpec};
  for (Variant v : {Variant::kSraE, Variant::kSraB}) {
    const FinetuneSetup s = prepare_finetune(ck, v, 1);
    const auto names = s.model.conditioner_parameter_names();
    CHECK(std::set<std::string>(s.initialized.begin(), s.initialized.end()) ==
          std::set<std::string>(names.begin(), names.end()));
    // Zero epochs: encoder and decoder are the baseline's.
    const FinetuneResult r = finetune(ck, v, c, FreezeConfig::preset("ft3"), quick(0));
    CHECK(r.training.history.empty());
    const TrainingExample ex = make_example(c[0], ck.speakers);
    const auto want = base.loss_and_gradient(ex, nullptr);
    const auto got = r.model.loss_and_gradient(ex, nullptr);
    CHECK(got.mel_loss == want.mel_loss);
  }
  CHECK_THROWS_AS(prepare_finetune(ck, Variant::kBaseline, 1), Error);
  FastSpeechModel sra(small(Variant::kSraE), 9);
  Checkpoint sck{sra.config(), sra.parameters(), speaker_ids(c), kSpec};
  CHECK_THROWS_AS(prepare_finetune(sck, Variant::kSraB, 1), Error);
  ModelConfig wider = small(Variant::kSraE);
  wider.d_model = 12;
  CHECK_THROWS_AS(prepare_finetune(ck, wider, 1), Error);
}

TEST_CASE("masked losses ignore padding") {
  Mat p1 = Mat::Constant(5, 3, 0.2);
  Mat t1 = Mat::Constant(5, 3, 0.5);
  Mat p2 = Mat::Constant(5, 3, 1.0);
  Mat t2 = Mat::Constant(5, 3, 1.0);
  const double a = masked_mel_loss({p1, p2}, {t1, t2}, {3, 2});
  p1.bottomRows(2).setConstant(99.0);
  p2.bottomRows(3).setConstant(-7.0);
  t2.bottomRows(3).setConstant(1e6);
  const double b = masked_mel_loss({p1, p2}, {t1, t2}, {3, 2});
  CHECK(a == b);
  CHECK(a == doctest::Approx((0.09 + 0.0) / 2.0));

  Eigen::VectorXd l1(4);
  l1 << std::log(3.0), std::log(2.0), 50.0, -50.0;
  const double d = masked_duration_loss({l1}, {{2, 1, 0, 0}}, {2});
  CHECK(d == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(masked_mel_loss({}, {}, {}), Error);
}

TEST_CASE("checkpoints and loss history on disk") {
  testutil::TempDir dir("train");
  FastSpeechModel m(small(Variant::kSraB), 1);
  TrainOptions o;
  o.checkpoint_dir = dir.path();
  o.frame_spec = kSpec;
  TrainConfig t = quick(5);
  t.checkpoint_every = 2;
  int calls = 0;
  o.on_epoch = [&](int, const LossBreakdown&) { ++calls; };
  const TrainResult r = train(m, small_corpus(), t, o);
  CHECK(calls == 5);
  REQUIRE(r.checkpoints.size() == 3);
  CHECK(r.checkpoints.back().filename() == "epoch_0005.ckpt");
  const Checkpoint c = load_checkpoint(r.checkpoints.back());
  CHECK(c.speakers == std::vector<std::string>{"a", "b"});
  CHECK(c.frame_spec == kSpec);

  write_loss_history_csv(dir / "loss.csv", r.history);
  std::ifstream in(dir / "loss.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,mel_loss,duration_loss,total");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.rfind(std::to_string(rows) + ",", 0) == 0);
  }
  CHECK(rows == 5);
}

TEST_CASE("too many speakers for the model") {
  ModelConfig c = small(Variant::kBaseline);
  c.n_speakers = 1;
  FastSpeechModel m(c, 1);
  CHECK_THROWS_AS(train(m, small_corpus(), quick(1)), Error);
}
