#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

#ifndef MRVB_CLI_PATH
#error "MRVB_CLI_PATH must name the built command-line tool"
#endif

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mrvb_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code;
  std::string output;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const TempDir& dir, const std::string& args) {
  const std::string log = dir / "log.txt";
  const std::string cmd = std::string(MRVB_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return {WEXITSTATUS(status), slurp(log)};
}

void simulate(const TempDir& dir, const std::string& out, std::size_t p, std::uint64_t seed = 1) {
  const Run r = run(dir, "simulate --out " + (dir / out) + " --n 150 --p " + std::to_string(p) +
                             " --d 3 --p0 2 --d0 2 --pve 0.2 --seed " + std::to_string(seed));
  REQUIRE_MESSAGE(r.code == 0, r.output);
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  TempDir dir;
  CHECK(run(dir, "").code == 1);
  CHECK(run(dir, "--help").code == 0);
  CHECK(run(dir, "--version").code == 0);
  CHECK(run(dir, "fit --bogus").code == 1);
  CHECK(run(dir, "fit --x " + (dir / "none.tsv") + " --y " + (dir / "none.tsv") + " --out " + (dir / "o")).code == 1);
  CHECK(run(dir, "simulate --out " + (dir / "s") + " --n 10 --p 5 --d 2 --x-structure wobbly").code == 1);
}

TEST_CASE("simulate is deterministic and writes its files") {
  TempDir dir;
  simulate(dir, "a", 20, 7);
  simulate(dir, "b", 20, 7);
  simulate(dir, "c", 20, 8);
  for (const char* f : {"X.tsv", "Y.tsv", "truth.tsv", "maf.tsv", "residual_sd.tsv", "run_manifest"})
    CHECK(fs::exists(dir.path / "a" / f));
  CHECK(slurp(dir / "a/X.tsv") == slurp(dir / "b/X.tsv"));
  CHECK(slurp(dir / "a/Y.tsv") == slurp(dir / "b/Y.tsv"));
  CHECK(slurp(dir / "a/X.tsv") != slurp(dir / "c/X.tsv"));
}

TEST_CASE("a fit replayed from its manifest is bit-identical") {
  TempDir dir;
  simulate(dir, "sim", 25);
  const std::string data = "--x " + (dir / "sim/X.tsv") + " --y " + (dir / "sim/Y.tsv");
  const Run first = run(dir, "fit " + data + " --out " + (dir / "fit1") + " --p-star 2 --restarts 2 --seed 5");
  REQUIRE_MESSAGE(first.code == 0, first.output);
  for (const char* f : {"ppi.tsv", "beta_mean.tsv", "omega.tsv", "elbo_trace.tsv", "run_manifest"})
    CHECK(fs::exists(dir.path / "fit1" / f));

  const std::string manifest = slurp(dir / "fit1/run_manifest");
  CHECK(manifest.find("[fit]") != std::string::npos);
  CHECK(manifest.find("p-star") != std::string::npos);

  const Run replay = run(dir, "--config " + (dir / "fit1/run_manifest") + " fit --out " + (dir / "fit2"));
  REQUIRE_MESSAGE(replay.code == 0, replay.output);
  CHECK(slurp(dir / "fit1/ppi.tsv") == slurp(dir / "fit2/ppi.tsv"));
  CHECK(slurp(dir / "fit1/beta_mean.tsv") == slurp(dir / "fit2/beta_mean.tsv"));

  const Run other_prior = run(dir, "--config " + (dir / "fit1/run_manifest") + " fit --out " + (dir / "fit3") +
                                      " --p-star 6");
  REQUIRE(other_prior.code == 0);
  CHECK(slurp(dir / "fit1/ppi.tsv") != slurp(dir / "fit3/ppi.tsv"));
}

TEST_CASE("a failed run leaves earlier output in place") {
  TempDir dir;
  simulate(dir, "sim", 10);
  const std::string out = dir / "fit";
  const std::string data = "--x " + (dir / "sim/X.tsv") + " --y " + (dir / "sim/Y.tsv");
  REQUIRE(run(dir, "fit " + data + " --out " + out).code == 0);
  const std::string before = slurp(out + "/ppi.tsv");

  {
    std::ofstream bad(dir / "bad.tsv");
    bad << "id\tg1\ns1\t1\ns2\tNA\n";
  }
  const Run failed = run(dir, "fit --x " + (dir / "bad.tsv") + " --y " + (dir / "sim/Y.tsv") + " --out " + out);
  CHECK(failed.code == 2);
  CHECK(failed.output.find("NA") != std::string::npos);
  CHECK(slurp(out + "/ppi.tsv") == before);

  const Run again = run(dir, "fit " + data + " --out " + out + " --p-star 3");
  CHECK(again.code == 0);
  for (const auto& entry : fs::directory_iterator(dir.path))
    CHECK(entry.path().filename().string().find(".staging-") == std::string::npos);
}

TEST_CASE("oracle-check refuses large problems") {
  TempDir dir;
  simulate(dir, "big", 20);
  const Run r = run(dir, "oracle-check --x " + (dir / "big/X.tsv") + " --y " + (dir / "big/Y.tsv") + " --out " +
                             (dir / "o"));
  CHECK(r.code == 1);
  CHECK(r.output.find("p = 20") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path / "o"));

  simulate(dir, "small", 6);
  const Run ok = run(dir, "oracle-check --x " + (dir / "small/X.tsv") + " --y " + (dir / "small/Y.tsv") +
                              " --out " + (dir / "o") + " --p-star 2 --draws 100");
  REQUIRE_MESSAGE(ok.code == 0, ok.output);
  for (const char* f : {"tightness.tsv", "ppi_comparison.tsv", "omega_comparison.tsv"})
    CHECK(fs::exists(dir.path / "o" / f));
}

TEST_CASE("permute-fdr and cross-validate") {
  TempDir dir;
  simulate(dir, "sim", 15);
  const std::string data = "--x " + (dir / "sim/X.tsv") + " --y " + (dir / "sim/Y.tsv");
  const Run fdr = run(dir, "permute-fdr " + data + " --out " + (dir / "fdr") + " -B 3 --targets 0.1 0.2");
  REQUIRE_MESSAGE(fdr.code == 0, fdr.output);
  for (const char* f : {"fdr_curve.tsv", "thresholds.tsv", "declarations.tsv", "ppi.tsv", "run_manifest"})
    CHECK(fs::exists(dir.path / "fdr" / f));

  const Run cv = run(dir, "cross-validate " + data + " --out " + (dir / "cv") + " --grid 1 2 4 --folds 3");
  REQUIRE_MESSAGE(cv.code == 0, cv.output);
  CHECK(fs::exists(dir.path / "cv/cv_scores.tsv"));
  CHECK(fs::exists(dir.path / "cv/ppi.tsv"));

  CHECK(run(dir, "cross-validate " + data + " --out " + (dir / "cv2") + " --grid 40").code == 1);
  CHECK(run(dir, "cross-validate " + data + " --out " + (dir / "cv2") + " --grid 2 --objective guess").code == 1);
}
