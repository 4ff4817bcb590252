#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "sratts/corpus.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args, const fs::path& log_dir) {
  const fs::path log = log_dir / "cli.log";
  const std::string cmd = std::string(SRATTS_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testutil::read_file(log);
  return r;
}

const sratts::AudioFrameSpec kSpec{22050, 256, 8};

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

// A small synthetic corpus written once per test case.
fs::path make_corpus(const testutil::TempDir& dir, const std::string& extra = "") {
  const fs::path out = dir / "corpus";
  const Run r = run("gen-synthetic --out " + quoted(out) +
                        " --utterances 120 --n-mels 8 --min-tokens 4 --max-tokens 8 --seed 3 " + extra,
                    dir.path());
  REQUIRE_MESSAGE(r.code == 0, r.out);
  return out;
}

}  // namespace

TEST_CASE("help lists every flag") {
  testutil::TempDir dir("help");
  const Run top = run("--help", dir.path());
  CHECK(top.code == 0);
  for (const char* sub : {"gen-synthetic", "select-data", "train", "finetune", "synthesize", "evaluate"}) {
    CHECK(top.out.find(sub) != std::string::npos);
  }
  const std::pair<const char*, std::vector<const char*>> expected[] = {
      {"select-data", {"--strategy", "--hours", "--per-speaker", "--seed", "--out", "--force", "--config"}},
      {"train", {"--variant", "--epochs", "--batch-size", "--lr", "--corpus"}},
      {"finetune", {"--freeze", "--checkpoint", "--variant"}},
      {"synthesize", {"--mode", "--factor", "--base-sr", "--text", "--tokens", "--wav"}},
      {"evaluate", {"--factors", "--mode", "--pitch", "--linearity", "--label"}},
  };
  for (const auto& [sub, flags] : expected) {
    const Run r = run(std::string(sub) + " --help", dir.path());
    CHECK(r.code == 0);
    for (const char* f : flags) {
      CAPTURE(sub);
      CAPTURE(f);
      CHECK(r.out.find(f) != std::string::npos);
    }
  }
}

TEST_CASE("usage errors exit with 2") {
  testutil::TempDir dir("usage");
  CHECK(run("", dir.path()).code != 0);
  CHECK(run("frobnicate", dir.path()).code == 2);
  CHECK(run("select-data --bogus 1", dir.path()).code == 2);
  CHECK(run("select-data --corpus x", dir.path()).code == 2);  // --out missing
  const fs::path corpus = make_corpus(dir);
  const Run bad = run("select-data --corpus " + quoted(corpus) + " --strategy ns3 --out " +
                          quoted(dir / "sel"),
                      dir.path());
  CHECK(bad.code == 2);
  CHECK_FALSE(fs::exists(dir / "sel"));
}

TEST_CASE("missing inputs are usage errors, data failures are runtime errors") {
  testutil::TempDir dir("runtime");
  const Run missing =
      run("select-data --corpus " + quoted(dir / "nowhere") + " --out " + quoted(dir / "o"), dir.path());
  CHECK(missing.code == 2);
  CHECK_FALSE(fs::exists(dir / "o"));
  const fs::path corpus = make_corpus(dir);
  const Run starved = run("select-data --corpus " + quoted(corpus) +
                              " --strategy ns1 --hours 100 --out " + quoted(dir / "o"),
                          dir.path());
  CHECK(starved.code == 1);
  CHECK(starved.out.find("budget") != std::string::npos);
}

TEST_CASE("output directories are not overwritten without --force") {
  testutil::TempDir dir("force");
  const fs::path corpus = make_corpus(dir);
  const Run again = run("gen-synthetic --out " + quoted(corpus) + " --utterances 10", dir.path());
  CHECK(again.code == 2);
  const Run forced =
      run("gen-synthetic --out " + quoted(corpus) + " --utterances 10 --n-mels 8 --force", dir.path());
  CHECK(forced.code == 0);
  CHECK(sratts::load_corpus(corpus / "manifest.jsonl", kSpec).size() == 10);
}

TEST_CASE("ns1 selection keeps only in-band utterances") {
  testutil::TempDir dir("ns1");
  const fs::path corpus = make_corpus(dir);
  const Run r = run("select-data --corpus " + quoted(corpus) + " --strategy ns1 --hours 0.004 --out " +
                        quoted(dir / "sel"),
                    dir.path());
  REQUIRE_MESSAGE(r.code == 0, r.out);
  CHECK(r.out.find("ns1") != std::string::npos);  // resolved config is printed
  const sratts::Corpus full = sratts::load_corpus(corpus / "manifest.jsonl", kSpec);
  const sratts::Corpus sel = sratts::load_corpus(dir / "sel" / "manifest.jsonl", kSpec);
  const sratts::SrStatistics st = sratts::compute_sr_statistics(full);
  REQUIRE_FALSE(sel.empty());
  std::size_t in_band = 0;
  for (const auto& u : full) in_band += std::abs(u.speaking_rate - st.mean) <= st.std;
  CHECK(sel.size() < in_band);
  for (const auto& u : sel) CHECK(std::abs(u.speaking_rate - st.mean) <= st.std);
}

TEST_CASE("train, synthesize and evaluate with the default factors") {
  testutil::TempDir dir("pipeline");
  const fs::path corpus = make_corpus(dir);
  const Run t = run("train --corpus " + quoted(corpus) +
                        " --variant sra-e --epochs 1 --batch-size 8 --seed 1 --out " + quoted(dir / "m"),
                    dir.path());
  REQUIRE_MESSAGE(t.code == 0, t.out);
  CHECK(fs::exists(dir / "m" / "final.ckpt"));
  CHECK(testutil::read_file(dir / "m" / "loss_history.csv").rfind("epoch,mel_loss,duration_loss,total\n", 0) == 0);

  const Run e = run("evaluate --checkpoint " + quoted(dir / "m" / "final.ckpt") + " --corpus " +
                        quoted(corpus) + " --mode sra --limit 3 --label toy --out " + quoted(dir / "e"),
                    dir.path());
  REQUIRE_MESSAGE(e.code == 0, e.out);
  const json summary = json::parse(testutil::read_file(dir / "e" / "toy_sr_error.json"));
  CHECK(summary["factors"].size() == 11);
  CHECK(summary["factors"].contains("1"));
  std::set<std::string> factors;
  std::ifstream csv(dir / "e" / "toy_sr_error.csv");
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    const auto a = line.find(',', line.find(',') + 1);
    factors.insert(line.substr(a + 1, line.find(',', a + 1) - a - 1));
  }
  CHECK(rows == 33);
  CHECK(factors.size() == 11);

  const Run s = run("synthesize --checkpoint " + quoted(dir / "m" / "final.ckpt") +
                        " --tokens 1,2,3 --mode sra --factor 1.2 --base-sr 0.09 --wav --iterations 2 --out " +
                        quoted(dir / "s"),
                    dir.path());
  REQUIRE_MESSAGE(s.code == 0, s.out);
  const json meta = json::parse(testutil::read_file(dir / "s" / "synthesis.json"));
  CHECK(meta["expected_sr"].get<double>() == doctest::Approx(0.108));
  CHECK(fs::exists(dir / "s" / "audio.wav"));

  const Run base = run("train --corpus " + quoted(corpus) +
                           " --variant baseline --epochs 1 --batch-size 8 --out " + quoted(dir / "b"),
                       dir.path());
  REQUIRE(base.code == 0);
  const Run mode = run("synthesize --checkpoint " + quoted(dir / "b" / "final.ckpt") +
                           " --tokens 1,2 --mode sra --base-sr 0.1 --out " + quoted(dir / "s2"),
                       dir.path());
  CHECK(mode.code == 2);
}

TEST_CASE("seed falls back to SRATTS_SEED") {
  testutil::TempDir dir("seed");
  ::setenv("SRATTS_SEED", "77", 1);
  const Run a = run("gen-synthetic --out " + quoted(dir / "a") + " --utterances 5 --n-mels 8", dir.path());
  ::unsetenv("SRATTS_SEED");
  const Run b = run("gen-synthetic --out " + quoted(dir / "b") + " --utterances 5 --n-mels 8 --seed 77",
                    dir.path());
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(testutil::read_file(dir / "a" / "manifest.jsonl") == testutil::read_file(dir / "b" / "manifest.jsonl"));
}
