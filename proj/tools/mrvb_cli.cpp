#include "mrvb/mrvb.h"

#include "CLI11.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Failure {
  int code;
  std::string message;
};

int exit_code_for(mrvb_status st) {
  switch (st) {
    case MRVB_OK: return kExitOk;
    case MRVB_ERR_INVALID_ARGUMENT: return kExitUsage;
    case MRVB_ERR_DATA:
    case MRVB_ERR_IO: return kExitData;
    default: return kExitNumerical;
  }
}

void check(mrvb_status st) {
  if (st != MRVB_OK) throw Failure{exit_code_for(st), mrvb_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<mrvb_dataset, Deleter<mrvb_dataset, mrvb_dataset_free>>;
using Fit = std::unique_ptr<mrvb_fit_result, Deleter<mrvb_fit_result, mrvb_fit_free>>;
using Simulation = std::unique_ptr<mrvb_simulation, Deleter<mrvb_simulation, mrvb_simulation_free>>;
using FdrResult = std::unique_ptr<mrvb_fdr_result, Deleter<mrvb_fdr_result, mrvb_fdr_free>>;
using OracleResult = std::unique_ptr<mrvb_oracle_result, Deleter<mrvb_oracle_result, mrvb_oracle_free>>;
using CvResult = std::unique_ptr<mrvb_cv_result, Deleter<mrvb_cv_result, mrvb_cv_free>>;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string ini_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string list(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out + "]";
}

// Key/value lines for one manifest section, in insertion order.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  void set(const std::string& key, double value) { set(key, fmt(value)); }
  void set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }
  void set_path(const std::string& key, const std::string& path) { set(key, ini_string(fs::absolute(path).string())); }
  void set_bool(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : entries_) os << k << " = " << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Output is assembled in a sibling staging directory and swapped in at the end
// so a failed or interrupted run never leaves a half-written result in place.
class Staging {
 public:
  explicit Staging(const std::string& target) : target_(fs::absolute(target)) {
    if (fs::exists(target_) && !fs::is_directory(target_))
      throw Failure{kExitData, "output path exists and is not a directory: " + target_.string()};
    std::error_code ec;
    fs::create_directories(target_.parent_path(), ec);
    staging_ = target_.parent_path() /
               ("." + target_.filename().string() + ".staging-" + std::to_string(::getpid()));
    fs::remove_all(staging_, ec);
    if (!fs::create_directory(staging_, ec) || ec)
      throw Failure{kExitData, "cannot create output directory next to " + target_.string() + ": " +
                                   (ec ? ec.message() : std::string("already exists"))};
  }

  ~Staging() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  std::string dir() const { return staging_.string(); }

  void commit() {
    if (!fs::exists(target_)) {
      std::error_code ec;
      fs::rename(staging_, target_, ec);
      if (ec) throw Failure{kExitData, "cannot move results into " + target_.string() + ": " + ec.message()};
    } else {
      if (::renameat2(AT_FDCWD, staging_.c_str(), AT_FDCWD, target_.c_str(), RENAME_EXCHANGE) != 0)
        throw Failure{kExitData, "cannot replace " + target_.string() + ": " + std::strerror(errno)};
      std::error_code ec;
      fs::remove_all(staging_, ec);  // now holds the previous run
    }
    committed_ = true;
  }

 private:
  fs::path target_, staging_;
  bool committed_ = false;
};

struct CommonOptions {
  std::string x, y, out;
  mrvb_prior prior{};
  double p_star = 0.0;
  mrvb_fit_options fit{};
  std::size_t workers = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  mrvb_prior_default(&o.prior);
  mrvb_fit_options_default(&o.fit);
  cmd->add_option("--x", o.x, "Covariate matrix (samples x covariates)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--y", o.y, "Response matrix (samples x responses)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory")->required();
  cmd->add_option("--a", o.prior.a, "Beta prior shape a for omega")->capture_default_str();
  cmd->add_option("--b", o.prior.b, "Beta prior shape b for omega")->capture_default_str();
  cmd->add_option("--eta", o.prior.eta, "Gamma prior shape for tau")->capture_default_str();
  cmd->add_option("--kappa", o.prior.kappa, "Gamma prior rate for tau")->capture_default_str();
  cmd->add_option("--lambda", o.prior.lambda, "Gamma prior shape for sigma^-2")->capture_default_str();
  cmd->add_option("--nu", o.prior.nu, "Gamma prior rate for sigma^-2")->capture_default_str();
  cmd->add_option("--p-star", o.p_star, "Prior expected number of active covariates; overrides --a/--b");
  cmd->add_option("--tol", o.fit.tol, "Convergence tolerance on the lower bound")->capture_default_str();
  cmd->add_option("--maxit", o.fit.maxit, "Iteration cap")->capture_default_str();
  cmd->add_option("--restarts", o.fit.restarts, "Number of initialisations")->capture_default_str();
  cmd->add_option("--seed", o.fit.seed, "Seed")->capture_default_str();
  cmd->add_flag("--parallel-responses", o.fit.parallel_responses, "Split each sweep across responses");
  cmd->add_option("--workers", o.workers, "Worker threads (0: all cores)")->envname("MRVB_WORKERS")->capture_default_str();
}

void record_common(Manifest& m, const CommonOptions& o) {
  m.set_path("x", o.x);
  m.set_path("y", o.y);
  m.set_path("out", o.out);
  m.set("a", o.prior.a);
  m.set("b", o.prior.b);
  m.set("eta", o.prior.eta);
  m.set("kappa", o.prior.kappa);
  m.set("lambda", o.prior.lambda);
  m.set("nu", o.prior.nu);
  if (o.p_star > 0.0) m.set("p-star", o.p_star);
  m.set("tol", o.fit.tol);
  m.set("maxit", o.fit.maxit);
  m.set("restarts", o.fit.restarts);
  m.set("seed", std::to_string(o.fit.seed));
  m.set_bool("parallel-responses", o.fit.parallel_responses != 0);
  m.set("workers", o.workers);
}

Dataset load(const CommonOptions& o) {
  mrvb_dataset* raw = nullptr;
  check(mrvb_dataset_load(o.x.c_str(), o.y.c_str(), &raw));
  Dataset ds(raw);
  for (std::size_t i = 0; i < mrvb_dataset_warning_count(ds.get()); ++i)
    std::cerr << "warning: " << mrvb_dataset_warning(ds.get(), i) << '\n';
  std::size_t n = 0, p = 0, d = 0;
  mrvb_dataset_dims(ds.get(), &n, &p, &d);
  std::cerr << "loaded n = " << n << ", p = " << p << ", d = " << d << '\n';
  return ds;
}

Fit run_fit(const mrvb_dataset* ds, const mrvb_prior& prior, const mrvb_fit_options& options) {
  mrvb_fit_result* raw = nullptr;
  check(mrvb_fit(ds, &prior, &options, &raw));
  Fit f(raw);
  std::cerr << "fit: " << mrvb_fit_iterations(f.get()) << " iterations, "
            << (mrvb_fit_converged(f.get()) ? "converged" : "not converged") << ", lower bound "
            << fmt(mrvb_fit_elbo(f.get())) << '\n';
  return f;
}

void write_manifest(const std::string& dir, const std::string& mode, const Manifest& top, const Manifest& section,
                    double seconds) {
  const std::string path = dir + "/run_manifest";
  std::ofstream out(path);
  out << "# mrvb run manifest; replay with: mrvb --config run_manifest " << mode << '\n';
  out << "mrvb_version = " << ini_string(mrvb_version()) << '\n';
  out << "mode = " << ini_string(mode) << '\n';
  out << "wall_time_seconds = " << fmt(seconds) << '\n';
  top.write(out);
  out << '[' << mode << "]\n";
  section.write(out);
  if (!out) throw Failure{kExitData, "cannot write " + path};
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

mrvb_prior effective_prior(const CommonOptions& o) {
  mrvb_prior p = o.prior;
  p.p_star = o.p_star;
  return p;
}

mrvb_fit_options effective_fit(const CommonOptions& o, bool fit_level_workers) {
  mrvb_fit_options f = o.fit;
  f.workers = fit_level_workers ? o.workers : 1;
  if (!fit_level_workers) f.parallel_responses = 0;
  return f;
}

int cmd_fit(const CommonOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  Dataset ds = load(o);
  Staging stage(o.out);
  Fit f = run_fit(ds.get(), effective_prior(o), effective_fit(o, true));
  check(mrvb_fit_write(f.get(), ds.get(), stage.dir().c_str()));
  Manifest top, section;
  top.set("iterations", mrvb_fit_iterations(f.get()));
  top.set_bool("converged", mrvb_fit_converged(f.get()) != 0);
  top.set("elbo", mrvb_fit_elbo(f.get()));
  record_common(section, o);
  write_manifest(stage.dir(), "fit", top, section, elapsed(start));
  stage.commit();
  return kExitOk;
}

struct SimOptions {
  std::string out;
  mrvb_sim_options sim{};
  std::string x_structure = "independent", y_structure = "independent";
  std::vector<double> x_rho, y_rho, y_padd;
};

int parse_structure(const std::string& s) {
  if (s == "independent") return MRVB_INDEPENDENT;
  if (s == "autocorrelated") return MRVB_AUTOCORRELATED;
  if (s == "equicorrelated") return MRVB_EQUICORRELATED;
  throw Failure{kExitUsage, "unknown structure " + s};
}

int cmd_simulate(SimOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  o.sim.covariates.structure = parse_structure(o.x_structure);
  o.sim.covariates.rho = o.x_rho.data();
  o.sim.covariates.rho_count = o.x_rho.size();
  o.sim.responses.structure = parse_structure(o.y_structure);
  o.sim.responses.rho = o.y_rho.data();
  o.sim.responses.rho_count = o.y_rho.size();
  o.sim.responses.padd_multiplier = o.y_padd.data();
  o.sim.responses.padd_multiplier_count = o.y_padd.size();

  Staging stage(o.out);
  mrvb_simulation* raw = nullptr;
  check(mrvb_simulate(&o.sim, &raw));
  Simulation sim(raw);
  check(mrvb_simulation_write(sim.get(), stage.dir().c_str()));

  const mrvb_sim_options& s = o.sim;
  Manifest top, section;
  section.set_path("out", o.out);
  section.set("n", s.n);
  section.set("p", s.p);
  section.set("d", s.d);
  section.set("p0", s.p0);
  section.set("d0", s.d0);
  section.set("maf-lo", s.maf_lo);
  section.set("maf-hi", s.maf_hi);
  section.set("p-add", s.p_add);
  section.set("pve", s.target_pve);
  section.set("shape-a", s.shape_a);
  section.set("shape-b", s.shape_b);
  section.set("seed", std::to_string(s.seed));
  section.set("x-structure", ini_string(o.x_structure));
  section.set("x-block-size", s.covariates.block_size);
  if (!o.x_rho.empty()) section.set("x-rho", list(o.x_rho));
  section.set("y-structure", ini_string(o.y_structure));
  section.set("y-block-size", s.responses.block_size);
  if (!o.y_rho.empty()) section.set("y-rho", list(o.y_rho));
  if (!o.y_padd.empty()) section.set("y-padd-multiplier", list(o.y_padd));
  write_manifest(stage.dir(), "simulate", top, section, elapsed(start));
  stage.commit();
  std::cerr << "simulated n = " << s.n << ", p = " << s.p << ", d = " << s.d << '\n';
  return kExitOk;
}

struct FdrOptions {
  CommonOptions common;
  std::size_t B = 100;
  std::uint64_t perm_seed = 1;
  std::vector<double> targets{0.05, 0.1, 0.15, 0.2, 0.25};
  std::vector<double> grid;
};

int cmd_permute_fdr(const FdrOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  Dataset ds = load(o.common);
  Staging stage(o.common.out);
  const mrvb_prior prior = effective_prior(o.common);
  Fit observed = run_fit(ds.get(), prior, effective_fit(o.common, true));
  check(mrvb_fit_write(observed.get(), ds.get(), stage.dir().c_str()));

  mrvb_fdr_options fo;
  mrvb_fdr_options_default(&fo);
  fo.B = o.B;
  fo.seed = o.perm_seed;
  fo.workers = o.common.workers;
  fo.grid = o.grid.empty() ? nullptr : o.grid.data();
  fo.grid_length = o.grid.size();
  mrvb_fdr_result* raw = nullptr;
  const mrvb_fit_options per_perm = effective_fit(o.common, false);
  check(mrvb_permute_fdr(ds.get(), &prior, &per_perm, &fo, observed.get(), &raw));
  FdrResult res(raw);
  check(mrvb_fdr_write(res.get(), observed.get(), ds.get(), o.targets.data(), o.targets.size(), stage.dir().c_str()));
  for (double target : o.targets) {
    double tau = 1.0;
    int found = 0;
    check(mrvb_fdr_threshold(res.get(), target, &tau, &found));
    std::cerr << "target fdr " << target << ": " << (found ? "tau = " + fmt(tau) : std::string("not reached")) << '\n';
  }

  Manifest top, section;
  top.set("iterations", mrvb_fit_iterations(observed.get()));
  top.set_bool("converged", mrvb_fit_converged(observed.get()) != 0);
  record_common(section, o.common);
  section.set("permutations", o.B);
  section.set("perm-seed", std::to_string(o.perm_seed));
  section.set("targets", list(o.targets));
  if (!o.grid.empty()) section.set("grid", list(o.grid));
  write_manifest(stage.dir(), "permute-fdr", top, section, elapsed(start));
  stage.commit();
  return kExitOk;
}

struct OracleOptions {
  CommonOptions common;
  mrvb_oracle_options oracle{};
};

int cmd_oracle_check(const OracleOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  Dataset ds = load(o.common);
  std::size_t p = 0;
  mrvb_dataset_dims(ds.get(), nullptr, &p, nullptr);
  if (p > o.oracle.max_p)
    throw Failure{kExitUsage, "oracle-check refuses p = " + std::to_string(p) +
                                  ": exact enumeration over 2^p inclusion patterns is capped at p <= " +
                                  std::to_string(o.oracle.max_p)};
  Staging stage(o.common.out);
  const mrvb_prior prior = effective_prior(o.common);
  const mrvb_fit_options fo = effective_fit(o.common, true);
  mrvb_oracle_result* raw = nullptr;
  check(mrvb_oracle_check(ds.get(), &prior, &fo, &o.oracle, &raw));
  OracleResult res(raw);
  check(mrvb_oracle_write(res.get(), ds.get(), stage.dir().c_str()));
  mrvb_tightness t{};
  mrvb_oracle_tightness(res.get(), &t);
  std::cerr << "log evidence " << fmt(t.log_evidence) << " (se " << fmt(t.std_error) << "), lower bound "
            << fmt(t.elbo) << ", relative gap " << fmt(t.relative_gap) << '\n';

  Manifest top, section;
  top.set("relative_gap", t.relative_gap);
  top.set_bool("bound_holds", t.bound_holds != 0);
  record_common(section, o.common);
  section.set("draws", o.oracle.n_draws);
  section.set("oracle-seed", std::to_string(o.oracle.seed));
  section.set("max-p", o.oracle.max_p);
  write_manifest(stage.dir(), "oracle-check", top, section, elapsed(start));
  stage.commit();
  return kExitOk;
}

struct CvOptions {
  CommonOptions common;
  std::vector<double> grid;
  mrvb_cv_options cv{};
  std::string objective = "predictive";
};

int cmd_cross_validate(const CvOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  Dataset ds = load(o.common);
  Staging stage(o.common.out);
  mrvb_cv_options cv = o.cv;
  cv.workers = o.common.workers;
  if (o.objective == "predictive")
    cv.objective = MRVB_CV_PREDICTIVE;
  else if (o.objective == "elbo")
    cv.objective = MRVB_CV_TRAINING_ELBO;
  else
    throw Failure{kExitUsage, "unknown objective " + o.objective};
  const mrvb_prior prior = effective_prior(o.common);
  const mrvb_fit_options per_cell = effective_fit(o.common, false);
  mrvb_cv_result* raw = nullptr;
  check(mrvb_cross_validate(ds.get(), o.grid.data(), o.grid.size(), &prior, &per_cell, &cv, &raw));
  CvResult res(raw);
  check(mrvb_cv_write(res.get(), stage.dir().c_str()));
  const double selected = mrvb_cv_selected(res.get());
  std::cerr << "selected p_star = " << fmt(selected) << '\n';

  mrvb_prior final_prior = prior;
  final_prior.p_star = selected;
  Fit f = run_fit(ds.get(), final_prior, effective_fit(o.common, true));
  check(mrvb_fit_write(f.get(), ds.get(), stage.dir().c_str()));

  Manifest top, section;
  top.set("selected_p_star", selected);
  top.set("iterations", mrvb_fit_iterations(f.get()));
  top.set_bool("converged", mrvb_fit_converged(f.get()) != 0);
  record_common(section, o.common);
  section.set("grid", list(o.grid));
  section.set("folds", o.cv.folds);
  section.set("cv-seed", std::to_string(o.cv.seed));
  section.set("objective", ini_string(o.objective));
  write_manifest(stage.dir(), "cross-validate", top, section, elapsed(start));
  stage.commit();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse multi-response regression with spike-and-slab priors fitted by variational inference"};
  app.set_config("--config", "", "Read options from a key = value file (flags on the command line win)");
  app.allow_config_extras(CLI::config_extras_mode::ignore);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mrvb_version()));

  CommonOptions fit_opts;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the model and write posterior summaries");
  add_common(fit_cmd, fit_opts);

  SimOptions sim_opts;
  mrvb_sim_options_default(&sim_opts.sim);
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate genotypes and responses with planted associations");
  sim_cmd->add_option("--out", sim_opts.out, "Output directory")->required();
  sim_cmd->add_option("--n", sim_opts.sim.n, "Samples")->required();
  sim_cmd->add_option("--p", sim_opts.sim.p, "Covariates")->required();
  sim_cmd->add_option("--d", sim_opts.sim.d, "Responses")->required();
  sim_cmd->add_option("--p0", sim_opts.sim.p0, "Active covariates")->capture_default_str();
  sim_cmd->add_option("--d0", sim_opts.sim.d0, "Active responses")->capture_default_str();
  sim_cmd->add_option("--maf-lo", sim_opts.sim.maf_lo, "Lowest minor allele frequency")->capture_default_str();
  sim_cmd->add_option("--maf-hi", sim_opts.sim.maf_hi, "Highest minor allele frequency")->capture_default_str();
  sim_cmd->add_option("--p-add", sim_opts.sim.p_add, "Probability of each additional association")
      ->capture_default_str();
  sim_cmd->add_option("--pve", sim_opts.sim.target_pve, "Mean variance explained per association")
      ->capture_default_str();
  sim_cmd->add_option("--shape-a", sim_opts.sim.shape_a, "Beta shape for pve draws")->capture_default_str();
  sim_cmd->add_option("--shape-b", sim_opts.sim.shape_b, "Beta shape for pve draws")->capture_default_str();
  sim_cmd->add_option("--seed", sim_opts.sim.seed, "Seed")->capture_default_str();
  sim_cmd->add_option("--x-structure", sim_opts.x_structure, "independent, autocorrelated or equicorrelated")
      ->capture_default_str();
  sim_cmd->add_option("--x-block-size", sim_opts.sim.covariates.block_size, "Covariate block size (0: one block)");
  sim_cmd->add_option("--x-rho", sim_opts.x_rho, "Correlation per covariate block, recycled");
  sim_cmd->add_option("--y-structure", sim_opts.y_structure, "independent, autocorrelated or equicorrelated")
      ->capture_default_str();
  sim_cmd->add_option("--y-block-size", sim_opts.sim.responses.block_size, "Response block size (0: one block)");
  sim_cmd->add_option("--y-rho", sim_opts.y_rho, "Correlation per response block, recycled");
  sim_cmd->add_option("--y-padd-multiplier", sim_opts.y_padd, "Multiplier on --p-add per response block, recycled");

  FdrOptions fdr_opts;
  auto* fdr_cmd = app.add_subcommand("permute-fdr", "Calibrate PPI thresholds against a permutation null");
  add_common(fdr_cmd, fdr_opts.common);
  fdr_cmd->add_option("--permutations,-B", fdr_opts.B, "Number of permutations")->capture_default_str();
  fdr_cmd->add_option("--perm-seed", fdr_opts.perm_seed, "Seed for the permutations")->capture_default_str();
  fdr_cmd->add_option("--targets", fdr_opts.targets, "Target FDR levels")->capture_default_str();
  fdr_cmd->add_option("--grid", fdr_opts.grid, "PPI threshold grid (default: 50 points on [0.01, 0.99])");

  OracleOptions oracle_opts;
  mrvb_oracle_options_default(&oracle_opts.oracle);
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare the fit with exact enumeration on a small problem");
  add_common(oracle_cmd, oracle_opts.common);
  oracle_cmd->add_option("--draws", oracle_opts.oracle.n_draws, "Monte Carlo draws")->capture_default_str();
  oracle_cmd->add_option("--oracle-seed", oracle_opts.oracle.seed, "Seed for the draws")->capture_default_str();
  oracle_cmd->add_option("--max-p", oracle_opts.oracle.max_p, "Enumeration cap")->capture_default_str();

  CvOptions cv_opts;
  mrvb_cv_options_default(&cv_opts.cv);
  auto* cv_cmd = app.add_subcommand("cross-validate", "Choose p_star by k-fold cross-validation, then fit");
  add_common(cv_cmd, cv_opts.common);
  cv_cmd->add_option("--grid", cv_opts.grid, "Candidate p_star values")->required();
  cv_cmd->add_option("--folds", cv_opts.cv.folds, "Number of folds")->capture_default_str();
  cv_cmd->add_option("--cv-seed", cv_opts.cv.seed, "Seed for the fold assignment")->capture_default_str();
  cv_cmd->add_option("--objective", cv_opts.objective, "predictive or elbo")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_opts);
    if (*sim_cmd) return cmd_simulate(sim_opts);
    if (*fdr_cmd) return cmd_permute_fdr(fdr_opts);
    if (*oracle_cmd) return cmd_oracle_check(oracle_opts);
    if (*cv_cmd) return cmd_cross_validate(cv_opts);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
