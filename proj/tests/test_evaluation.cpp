#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "sratts/error.hpp"
#include "sratts/evaluation.hpp"
#include "sratts/random.hpp"
#include "sratts/report.hpp"

using namespace sratts;
using Variant = DurationPredictorVariant;

namespace {

const AudioFrameSpec kSpec{22050, 256, 6};

FastSpeechModel lively(Variant v, std::uint64_t seed, int n_mels = 6) {
  ModelConfig c = ModelConfig::toy(v, 10, n_mels, 2);
  c.n_encoder_layers = 1;
  c.n_decoder_layers = 1;
  c.d_model = 8;
  c.d_ff = 12;
  c.d_attn = 4;
  c.d_duration = 6;
  c.max_frames = 4096;
  FastSpeechModel m(c, seed);
  Rng rng(seed + 1);
  auto& p = m.parameters();
  p[p.find("duration.output.bias")].setConstant(2.0);
  for (auto& prm : p) {
    if (prm.name.rfind("duration.sr.", 0) == 0) {
      for (Eigen::Index i = 0; i < prm.value.size(); ++i) prm.value.data()[i] += rng.uniform(-1, 1);
    }
  }
  return m;
}

Corpus test_set() {
  Corpus c;
  c.push_back(testutil::make_record("t1", "a", {5, 7, 6, 4}, kSpec, 6));
  c.push_back(testutil::make_record("t2", "b", {8, 3, 9}, kSpec, 6));
  c.push_back(testutil::make_record("t3", "a", {6, 6, 6, 6, 6}, kSpec, 6));
  c[0].tokens = {1, 5, 2, 9};
  c[1].tokens = {0, 3, 3};
  c[2].tokens = {7, 4, 8, 6, 2};
  return c;
}

EvalOptions options(const std::string& label, bool rounding = true) {
  EvalOptions o;
  o.model_label = label;
  o.speakers = {"a", "b"};
  o.frame_spec = kSpec;
  o.rounding = rounding;
  return o;
}

std::vector<double> round2(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(std::round(x * 100.0) / 100.0);
  return out;
}

SrStatistics stats(double mean, double std) {
  SrStatistics s;
  s.mean = mean;
  s.std = std;
  return s;
}

}  // namespace

TEST_CASE("default factor grid") {
  const SrFactorSet s = default_sr_factors();
  CHECK(s.factors == std::vector<double>{0.54, 0.66, 0.77, 0.83, 0.89, 1.0, 1.11, 1.17, 1.23,
                                         1.34, 1.46});
  CHECK(s.provenance == FactorProvenance::kDefault);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("factors derived from statistics") {
  const SrFactorSet a = derive_sr_factors(stats(1.0, 0.114));
  CHECK(round2(a.factors) == default_sr_factors().factors);
  CHECK(a.provenance == FactorProvenance::kDerivedFromStats);
  for (std::size_t k = 0; k < 5; ++k) CHECK((a.factors[k] + a.factors[10 - k]) / 2.0 == 1.0);

  const SrFactorSet b = derive_sr_factors(stats(0.5, 0.05));
  const std::vector<double> want = {0.6, 0.7, 0.8, 0.85, 0.9, 1.0, 1.1, 1.15, 1.2, 1.3, 1.4};
  REQUIRE(b.factors.size() == 11);
  for (std::size_t i = 0; i < 11; ++i) CHECK(b.factors[i] == doctest::Approx(want[i]).epsilon(1e-12));

  const SrFactorSet c = derive_sr_factors(stats(2.0, 0.0));
  CHECK(c.factors == std::vector<double>(11, 1.0));
  CHECK_NOTHROW(c.validate());

  try {
    derive_sr_factors(stats(1.0, 0.25));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDegenerateDistribution);
  }
  CHECK_NOTHROW(derive_sr_factors(stats(1.0, 0.2499)));
}

TEST_CASE("explicit factor lists") {
  CHECK(parse_factor_source("0.8,1,1.2", nullptr).factors == std::vector<double>{0.8, 1.0, 1.2});
  CHECK(parse_factor_source("default", nullptr).factors.size() == 11);
  const SrStatistics s = stats(0.5, 0.05);
  CHECK(parse_factor_source("from-stats", &s).factors.size() == 11);
  CHECK_THROWS_AS(parse_factor_source("from-stats", nullptr), Error);
  CHECK_THROWS_AS(parse_factor_source("0.8,1.2", nullptr), Error);
  CHECK_THROWS_AS(parse_factor_source("1,0.8", nullptr), Error);
  CHECK_THROWS_AS(parse_factor_source("1,1", nullptr), Error);
  CHECK_THROWS_AS(parse_factor_source("-1,1", nullptr), Error);
  CHECK_THROWS_AS(parse_factor_source("1,x", nullptr), Error);
}

TEST_CASE("SR error") {
  CHECK(sr_error(1.2 * 0.5, 0.55) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(sr_error(0.3, 0.3) == 0.0);
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(0.01, 1.0);
    const double b = rng.uniform(0.01, 1.0);
    CHECK(sr_error(a, b) == sr_error(b, a));
  }
}

TEST_CASE("SR curve rows and factor-1 expectation") {
  const Corpus c = test_set();
  for (Variant v : {Variant::kBaseline, Variant::kSraE}) {
    const FastSpeechModel m = lively(v, 3);
    const SrErrorReport r =
        evaluate_sr_curve(m, c, default_sr_factors(), ControlMode::kPace, options("m"));
    REQUIRE(r.rows.size() == 33);
    CHECK(r.failures.empty());
    for (const auto& row : r.rows) CHECK(row.error == std::abs(row.expected_sr - row.obtained_sr));
    for (std::size_t u = 0; u < c.size(); ++u) {
      const SrErrorRow& at1 = r.rows[u * 11 + 5];
      CHECK(at1.factor == 1.0);
      CHECK(at1.utterance_id == c[u].id);
      CHECK(at1.expected_sr == c[u].speaking_rate);
    }
    for (std::size_t i = 0; i < 11; ++i) {
      double sum = 0.0;
      for (std::size_t u = 0; u < c.size(); ++u) sum += r.rows[u * 11 + i].error;
      CHECK(r.mean_error[i] == doctest::Approx(sum / 3.0).epsilon(1e-15));
      CHECK(r.row_count[i] == 3);
    }
  }
  const FastSpeechModel base = lively(Variant::kBaseline, 3);
  CHECK_THROWS_AS(evaluate_sr_curve(base, c, default_sr_factors(), ControlMode::kSra, options("b")),
                  Error);
}

TEST_CASE("failures are recorded, not fatal") {
  Corpus c = test_set();
  c[1].speaker_id = "nobody";
  const FastSpeechModel m = lively(Variant::kSraB, 2);
  const SrErrorReport r =
      evaluate_sr_curve(m, c, explicit_sr_factors({0.8, 1.0}), ControlMode::kSra, options("x"));
  CHECK(r.rows.size() == 4);
  CHECK(r.failures.size() == 2);
  CHECK(r.row_count == std::vector<std::size_t>{2, 2});
}

TEST_CASE("pace mode without rounding is exactly linear") {
  // Real-valued durations: obtained(f) = f * obtained(1), so with the
  // expected SR also scaling by f, error(f) = f * error(1).
  const Corpus c = test_set();
  const FastSpeechModel m = lively(Variant::kBaseline, 7);
  const SrErrorReport r =
      evaluate_sr_curve(m, c, default_sr_factors(), ControlMode::kPace, options("lin", false));
  for (std::size_t u = 0; u < c.size(); ++u) {
    const double e1 = r.rows[u * 11 + 5].error;
    for (std::size_t i = 0; i < 11; ++i) {
      const SrErrorRow& row = r.rows[u * 11 + i];
      CHECK(std::abs(row.error / row.factor - e1) <= 1e-9 * e1);
    }
  }
  const double m1 = r.mean_error[5];
  for (std::size_t i = 0; i < 11; ++i) {
    CHECK(std::abs(r.mean_error[i] - r.factors[i] * m1) <= 1e-9 * m1);
  }

  const SrErrorReport rounded =
      evaluate_sr_curve(m, c, default_sr_factors(), ControlMode::kPace, options("lin"));
  const double bound = 0.5 * kSpec.seconds(1.0);
  for (std::size_t k = 0; k < rounded.rows.size(); ++k) {
    CHECK(std::abs(rounded.rows[k].obtained_sr - r.rows[k].obtained_sr) <= bound + 1e-15);
  }
}

TEST_CASE("isotonic regression") {
  CHECK(isotonic_increasing({}).empty());
  CHECK(isotonic_increasing({1, 2, 3}) == std::vector<double>{1, 2, 3});
  CHECK(isotonic_increasing({3, 1}) == std::vector<double>{2, 2});
  CHECK(isotonic_increasing({1, 3, 2, 4}) == std::vector<double>{1, 2.5, 2.5, 4});
  CHECK(isotonic_increasing({5, 4, 3, 2, 1}) == std::vector<double>(5, 3.0));
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + rng.below(12));
    for (double& x : v) x = rng.uniform(-1, 1);
    const auto fit = isotonic_increasing(v);
    double a = 0.0;
    double b = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      a += v[i];
      b += fit[i];
      if (i > 0) CHECK(fit[i] >= fit[i - 1] - 1e-15);
    }
    CHECK(a == doctest::Approx(b));
  }
}

TEST_CASE("convexity surrogate") {
  const std::vector<double> f = default_sr_factors().factors;
  const std::vector<double> bowl = {9, 7, 5, 4, 2, 1, 2, 3, 5, 7, 9};
  CHECK(check_convexity(f, bowl).holds);
  const std::vector<double> bumpy = {9, 7, 8, 4, 2, 1, 3, 2, 5, 7, 9};
  CHECK(check_convexity(f, bumpy).holds);
  const std::vector<double> line = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  const ConvexityCheck c = check_convexity(f, line);
  CHECK(c.argmin == 0);
  CHECK_FALSE(c.minimum_in_band);
  CHECK_FALSE(c.holds);
  const std::vector<double> flat_right = {9, 7, 5, 4, 2, 1, 1, 1, 1, 1, 1};
  const ConvexityCheck d = check_convexity(f, flat_right);
  CHECK(d.minimum_in_band);
  CHECK(d.left_rises);
  CHECK_FALSE(d.right_rises);
  CHECK_FALSE(d.holds);
  std::vector<double> with_nan = bowl;
  with_nan[10] = std::nan("");
  CHECK_FALSE(check_convexity(f, with_nan).holds);
}

TEST_CASE("line fits and chord deviation") {
  const std::vector<double> x = {0.54, 0.66, 0.77, 1.0, 1.46};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v - 0.25);
  const LineFit fit = fit_line(x, y);
  CHECK(std::abs(fit.r2 - 1.0) <= 1e-12);
  CHECK(fit.slope == doctest::Approx(3.0));
  CHECK(fit.intercept == doctest::Approx(-0.25));
  CHECK(endpoint_chord_deviation(x, y) == doctest::Approx(0.0).scale(1.0));

  const std::vector<double> flat(5, 1.0);
  const LineFit c = fit_line(x, flat);
  CHECK(c.slope == 0.0);
  CHECK(c.r2 == 1.0);
  CHECK(endpoint_chord_deviation(x, flat) == 0.0);

  const std::vector<double> kink = {0, 0, 0, 0, 1};
  CHECK(fit_line(x, kink).r2 < 1.0);
  CHECK(fit_line(x, kink).r2 >= 0.0);
  const std::vector<double> xs = {0, 1, 2};
  CHECK(endpoint_chord_deviation(xs, {0, 2, 2}) == doctest::Approx(0.5));
}

TEST_CASE("duration linearity report") {
  const Corpus c = test_set();
  const FastSpeechModel m = lively(Variant::kSraE, 5);
  const LinearityReport pace =
      duration_linearity(m, c[2], default_sr_factors(), ControlMode::kPace, options("p", false));
  REQUIRE(pace.tokens.size() == 5);
  for (const auto& t : pace.tokens) {
    CHECK(t.durations.size() == 11);
    CHECK(std::abs(t.fit.r2 - 1.0) <= 1e-12);
    CHECK(t.chord_deviation <= 1e-12);
  }
  const LinearityReport sra =
      duration_linearity(m, c[2], default_sr_factors(), ControlMode::kSra, options("s"), 3);
  CHECK(sra.tokens.size() == 3);
  CHECK(sra.tokens[1].token == 4);
  for (const auto& t : sra.tokens) {
    CHECK(t.fit.r2 >= 0.0);
    CHECK(t.fit.r2 <= 1.0);
  }
  const FastSpeechModel base = lively(Variant::kBaseline, 5);
  CHECK_THROWS_AS(duration_linearity(base, c[0], default_sr_factors(), ControlMode::kSra, options("b")),
                  Error);
}

TEST_CASE("pitch stays on a fixed harmonic stack") {
  const AudioFrameSpec spec;
  std::vector<double> stack(40 * 256);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    double a = 0.0;
    for (int k = 1; k <= 10; ++k) a += std::sin(2.0 * std::numbers::pi * 200.0 * k * i / 22050.0) / k;
    stack[i] = 0.2 * a;
  }
  const MelMatrix mel = mel_spectrogram(stack, spec, {});
  // Every frame of the model's output is this one mel row.
  FastSpeechModel m = lively(Variant::kSraE, 9, 80);
  auto& p = m.parameters();
  p[p.find("decoder.mel_head.weight")].setZero();
  p[p.find("decoder.mel_head.bias")] = mel.row(20).cast<double>();
  p[p.find("duration.output.weight")].setZero();
  p[p.find("duration.output.bias")].setConstant(std::log(21.0));

  Corpus c;
  c.push_back(testutil::make_record("h", "a", {20, 20, 20}, spec, 80));
  c[0].tokens = {1, 2, 3};
  EvalOptions o;
  o.model_label = "stack";
  o.speakers = {"a"};
  o.frame_spec = spec;
  VocoderConfig voc;
  voc.iterations = 16;
  const PitchReport r = evaluate_pitch_trend(m, c, default_sr_factors(), ControlMode::kSra, o, voc);
  REQUIRE(r.mean_f0.size() == 11);
  CHECK(r.voicing_threshold == 0.5);
  for (std::size_t i = 0; i < 11; ++i) {
    CAPTURE(r.factors[i]);
    CHECK(std::abs(r.mean_f0[i] - 200.0) <= 5.0);
    CHECK(r.excluded_utterances[i] == 0);
  }
  const PitchReport again =
      evaluate_pitch_trend(m, c, default_sr_factors(), ControlMode::kSra, o, voc);
  CHECK(again.mean_f0 == r.mean_f0);
}

TEST_CASE("report files") {
  SrErrorReport r;
  r.model_label = "toy sra/e";
  r.mode = ControlMode::kSra;
  r.factors = {0.8, 1.2};
  r.rows = {{"u1", 0.8, 0.08, 0.081, 0.0}, {"u1", 1.2, 0.12, 0.1175, 0.0},
            {"u2", 0.8, 0.064, 0.07, 0.0}, {"u2", 1.2, 0.096, 0.1, 0.0}};
  for (auto& row : r.rows) row.error = sr_error(row.expected_sr, row.obtained_sr);
  r.mean_error = {(r.rows[0].error + r.rows[2].error) / 2, (r.rows[1].error + r.rows[3].error) / 2};
  r.row_count = {2, 2};

  testutil::TempDir dir("report");
  const auto paths = emit_report(r, dir.path());
  REQUIRE(paths.size() == 3);
  CHECK(paths[0].filename() == "toy_sra_e_sr_error.csv");
  CHECK(paths[1].extension() == ".json");
  CHECK(paths[2].extension() == ".svg");
  const std::string csv = testutil::read_file(paths[0]);
  const std::string json_text = testutil::read_file(paths[1]);
  const std::string svg = testutil::read_file(paths[2]);
  CHECK(svg.rfind("<svg", 0) == 0);

  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "model_label,utterance_id,factor,expected_sr,obtained_sr,error");
  std::map<std::string, std::pair<double, int>> sums;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 6);
    const double e = std::stod(cells[5]);
    CHECK(e == std::abs(std::stod(cells[3]) - std::stod(cells[4])));
    sums[cells[2]].first += e;
    sums[cells[2]].second += 1;
  }
  CHECK(rows == 4);
  const auto summary = nlohmann::json::parse(json_text);
  CHECK(summary["mode"] == "sra");
  REQUIRE(summary["factors"].size() == 2);
  for (const auto& [key, acc] : sums) {
    CHECK(summary["factors"][key]["mean_error"].get<double>() ==
          doctest::Approx(acc.first / acc.second).epsilon(1e-15));
  }

  emit_report(r, dir.path());
  CHECK(testutil::read_file(paths[0]) == csv);
  CHECK(testutil::read_file(paths[1]) == json_text);
  CHECK(testutil::read_file(paths[2]) == svg);
}

TEST_CASE("number formatting and labels") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(sanitize_label("a b/c:d") == "a_b_c_d");
  CHECK(sanitize_label("ok-1.2_x") == "ok-1.2_x");
}

TEST_CASE("pitch and linearity reports emit three files") {
  testutil::TempDir dir("more");
  PitchReport p;
  p.model_label = "p";
  p.factors = {1.0};
  p.mean_f0 = {std::nan("")};
  p.voiced_frames = {0};
  p.excluded_utterances = {1};
  const auto pp = emit_report(p, dir.path());
  CHECK(pp[0].filename() == "p_pitch.csv");
  CHECK(nlohmann::json::parse(testutil::read_file(pp[1])).dump().find("null") != std::string::npos);

  LinearityReport l;
  l.model_label = "l";
  l.factors = {0.5, 1.0};
  l.tokens.push_back({0, 3, {2.0, 4.0}, {4.0, 0.0, 1.0}, 0.0});
  const auto lp = emit_report(l, dir.path());
  CHECK(lp[0].filename() == "l_linearity.csv");
  for (const auto& path : lp) CHECK(std::filesystem::file_size(path) > 0);
}
