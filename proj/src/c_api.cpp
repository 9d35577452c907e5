#include "mrvb/mrvb.h"

#include "mrvb/cavi.hpp"
#include "mrvb/cross_validation.hpp"
#include "mrvb/error.hpp"
#include "mrvb/fdr.hpp"
#include "mrvb/io.hpp"
#include "mrvb/model.hpp"
#include "mrvb/oracle.hpp"
#include "mrvb/simulator.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#ifndef MRVB_VERSION
#define MRVB_VERSION "unknown"
#endif

struct mrvb_dataset {
  mrvb::LabeledMatrix X, Y;  // raw values with identifiers
  mrvb::Dataset data;
  std::vector<std::string> warnings;
};

struct mrvb_fit_result {
  mrvb::FitResult fit;
};

struct mrvb_simulation {
  mrvb::SimulatedData sim;
  std::vector<std::string> samples, covariates, responses;
};

struct mrvb_fdr_result {
  mrvb::PermutationRun run;
  std::vector<mrvb::FdrPoint> curve;
};

struct mrvb_oracle_result {
  mrvb::TightnessReport report;
  mrvb::OracleSummary summary;
  mrvb::FitResult fit;
};

struct mrvb_cv_result {
  mrvb::CvResult cv;
  mrvb::CvObjective objective;
};

namespace {

thread_local std::string last_error;

mrvb_status status_for(mrvb::ErrorKind kind) {
  switch (kind) {
    case mrvb::ErrorKind::invalid_argument: return MRVB_ERR_INVALID_ARGUMENT;
    case mrvb::ErrorKind::data: return MRVB_ERR_DATA;
    case mrvb::ErrorKind::numerical: return MRVB_ERR_NUMERICAL;
    case mrvb::ErrorKind::io: return MRVB_ERR_IO;
  }
  return MRVB_ERR_INTERNAL;
}

template <class Fn>
mrvb_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return MRVB_OK;
  } catch (const mrvb::Error& e) {
    last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return MRVB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MRVB_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return MRVB_ERR_INTERNAL;
  }
}

template <class T>
void require(const T* ptr, const char* name) {
  if (!ptr) throw mrvb::invalid_argument(std::string(name) + " is null");
}

std::vector<std::string> numbered(const char* prefix, std::size_t count) {
  std::vector<std::string> ids(count);
  for (std::size_t i = 0; i < count; ++i) ids[i] = prefix + std::to_string(i + 1);
  return ids;
}

mrvb::Hyperparameters expand_prior(const mrvb_prior& prior, std::size_t p, std::size_t d) {
  mrvb::PriorSettings s;
  s.a = prior.a;
  s.b = prior.b;
  s.eta = prior.eta;
  s.kappa = prior.kappa;
  s.lambda = prior.lambda;
  s.nu = prior.nu;
  if (prior.p_star > 0.0) s.p_star = prior.p_star;
  return s.expand(p, d);
}

std::optional<double> pstar_of(const mrvb_prior& prior) {
  return prior.p_star > 0.0 ? std::optional<double>(prior.p_star) : std::nullopt;
}

mrvb::FitConfig to_config(const mrvb_fit_options& o) {
  mrvb::FitConfig c;
  c.tol = o.tol;
  c.maxit = o.maxit;
  c.n_restarts = o.restarts;
  c.seed = o.seed;
  c.parallel_responses = o.parallel_responses != 0;
  c.workers = o.workers;
  c.validate();
  return c;
}

mrvb::ModelSpec make_spec(const mrvb_dataset& ds, const mrvb_prior& prior) {
  return mrvb::ModelSpec(ds.data, expand_prior(prior, ds.data.p(), ds.data.d()), pstar_of(prior));
}

std::string join_path(const char* dir, const char* name) {
  std::string out(dir);
  if (!out.empty() && out.back() != '/') out += '/';
  return out + name;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw mrvb::io_error("cannot write " + path + ": " + std::strerror(errno));
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw mrvb::io_error("write failed for " + path);
}

void copy_out(const Eigen::MatrixXd& m, double* out) { std::copy(m.data(), m.data() + m.size(), out); }

std::vector<std::size_t> descending_ranks(const Eigen::VectorXd& v) {
  std::vector<std::size_t> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return v[static_cast<Eigen::Index>(i)] > v[static_cast<Eigen::Index>(j)];
  });
  std::vector<std::size_t> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  return rank;
}

mrvb::LabeledMatrix labeled(const Eigen::MatrixXd& values, const mrvb_dataset& ds) {
  mrvb::LabeledMatrix m;
  m.corner = "covariate";
  m.row_ids = ds.X.col_ids;
  m.col_ids = ds.Y.col_ids;
  m.values = values;
  return m;
}

void build_dataset(mrvb_dataset& ds) { ds.data = mrvb::standardize_inputs(ds.X.values, ds.Y.values); }

}  // namespace

extern "C" {

const char* mrvb_last_error(void) { return last_error.c_str(); }

const char* mrvb_version(void) { return MRVB_VERSION; }

void mrvb_prior_default(mrvb_prior* prior) {
  if (!prior) return;
  *prior = mrvb_prior{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0};
}

void mrvb_fit_options_default(mrvb_fit_options* options) {
  if (!options) return;
  const mrvb::FitConfig c;
  *options = mrvb_fit_options{c.tol, c.maxit, c.n_restarts, c.seed, c.parallel_responses ? 1 : 0, c.workers};
}

mrvb_status mrvb_corrected_b(size_t p, size_t d, double p_star, double* b) {
  return guarded([&] {
    require(b, "b");
    *b = mrvb::corrected_hyperparameters(p, d, p_star).b[0];
  });
}

mrvb_status mrvb_prior_activation_probability(double a, double b, size_t d, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = mrvb::prior_activation_probability(a, b, d);
  });
}

mrvb_status mrvb_prior_odds_ratio(double a, double b, size_t d, size_t q, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = mrvb::prior_odds_ratio(a, b, d, q);
  });
}

mrvb_status mrvb_dataset_from_arrays(const double* X, const double* Y, size_t n, size_t p, size_t d,
                                     mrvb_dataset** out) {
  return guarded([&] {
    require(X, "X");
    require(Y, "Y");
    require(out, "out");
    *out = nullptr;
    auto ds = std::make_unique<mrvb_dataset>();
    const auto ni = static_cast<Eigen::Index>(n);
    ds->X.values = Eigen::Map<const Eigen::MatrixXd>(X, ni, static_cast<Eigen::Index>(p));
    ds->Y.values = Eigen::Map<const Eigen::MatrixXd>(Y, ni, static_cast<Eigen::Index>(d));
    ds->X.row_ids = ds->Y.row_ids = numbered("sample", n);
    ds->X.col_ids = numbered("x", p);
    ds->Y.col_ids = numbered("y", d);
    build_dataset(*ds);
    *out = ds.release();
  });
}

mrvb_status mrvb_dataset_load(const char* x_path, const char* y_path, mrvb_dataset** out) {
  return guarded([&] {
    require(x_path, "x_path");
    require(y_path, "y_path");
    require(out, "out");
    *out = nullptr;
    auto loaded = mrvb::load_matrices(x_path, y_path);
    auto ds = std::make_unique<mrvb_dataset>();
    ds->X = std::move(loaded.X);
    ds->Y = std::move(loaded.Y);
    ds->warnings = std::move(loaded.warnings);
    build_dataset(*ds);
    *out = ds.release();
  });
}

void mrvb_dataset_dims(const mrvb_dataset* ds, size_t* n, size_t* p, size_t* d) {
  if (!ds) return;
  if (n) *n = ds->data.n();
  if (p) *p = ds->data.p();
  if (d) *d = ds->data.d();
}

size_t mrvb_dataset_warning_count(const mrvb_dataset* ds) { return ds ? ds->warnings.size() : 0; }

const char* mrvb_dataset_warning(const mrvb_dataset* ds, size_t i) {
  if (!ds || i >= ds->warnings.size()) return nullptr;
  return ds->warnings[i].c_str();
}

void mrvb_dataset_free(mrvb_dataset* ds) { delete ds; }

mrvb_status mrvb_fit(const mrvb_dataset* ds, const mrvb_prior* prior, const mrvb_fit_options* options,
                     mrvb_fit_result** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(prior, "prior");
    require(options, "options");
    require(out, "out");
    *out = nullptr;
    const mrvb::FitConfig config = to_config(*options);
    auto res = std::make_unique<mrvb_fit_result>();
    res->fit = mrvb::fit(make_spec(*ds, *prior), config);
    *out = res.release();
  });
}

void mrvb_fit_dims(const mrvb_fit_result* fit, size_t* p, size_t* d) {
  if (!fit) return;
  if (p) *p = static_cast<size_t>(fit->fit.ppi.rows());
  if (d) *d = static_cast<size_t>(fit->fit.ppi.cols());
}

void mrvb_fit_ppi(const mrvb_fit_result* fit, double* out) {
  if (fit && out) copy_out(fit->fit.ppi, out);
}

void mrvb_fit_beta_mean(const mrvb_fit_result* fit, double* out) {
  if (fit && out) copy_out(fit->fit.beta_mean, out);
}

void mrvb_fit_omega(const mrvb_fit_result* fit, double* out) {
  if (fit && out) copy_out(fit->fit.omega_mean, out);
}

size_t mrvb_fit_trace_length(const mrvb_fit_result* fit) { return fit ? fit->fit.elbo_trace.size() : 0; }

void mrvb_fit_trace(const mrvb_fit_result* fit, double* out) {
  if (fit && out) std::copy(fit->fit.elbo_trace.begin(), fit->fit.elbo_trace.end(), out);
}

double mrvb_fit_elbo(const mrvb_fit_result* fit) { return fit ? fit->fit.elbo() : 0.0; }

size_t mrvb_fit_iterations(const mrvb_fit_result* fit) { return fit ? fit->fit.iterations : 0; }

int mrvb_fit_converged(const mrvb_fit_result* fit) { return fit && fit->fit.converged ? 1 : 0; }

mrvb_status mrvb_fit_write(const mrvb_fit_result* fit, const mrvb_dataset* ds, const char* dir) {
  return guarded([&] {
    require(fit, "fit");
    require(ds, "dataset");
    require(dir, "dir");
    const mrvb::FitResult& f = fit->fit;
    if (f.ppi.rows() != static_cast<Eigen::Index>(ds->data.p()) ||
        f.ppi.cols() != static_cast<Eigen::Index>(ds->data.d()))
      throw mrvb::invalid_argument("fit and dataset dimensions differ");
    mrvb::write_matrix(join_path(dir, "ppi.tsv"), labeled(f.ppi, *ds));
    mrvb::write_matrix(join_path(dir, "beta_mean.tsv"), labeled(f.beta_mean, *ds));

    const std::string omega_path = join_path(dir, "omega.tsv");
    std::ofstream omega = open_out(omega_path);
    omega << "covariate\tomega_mean\trank\n";
    const auto rank = descending_ranks(f.omega_mean);
    for (Eigen::Index s = 0; s < f.omega_mean.size(); ++s)
      omega << ds->X.col_ids[static_cast<std::size_t>(s)] << '\t' << mrvb::format_double(f.omega_mean[s]) << '\t'
            << rank[static_cast<std::size_t>(s)] << '\n';
    finish(omega, omega_path);

    const std::string trace_path = join_path(dir, "elbo_trace.tsv");
    std::ofstream trace = open_out(trace_path);
    trace << "iteration\telbo\n";
    for (std::size_t i = 0; i < f.elbo_trace.size(); ++i)
      trace << i + 1 << '\t' << mrvb::format_double(f.elbo_trace[i]) << '\n';
    finish(trace, trace_path);
  });
}

void mrvb_fit_free(mrvb_fit_result* fit) { delete fit; }

void mrvb_sim_options_default(mrvb_sim_options* options) {
  if (!options) return;
  const mrvb::SimulationSpec s;
  *options = mrvb_sim_options{};
  options->maf_lo = s.maf_range.first;
  options->maf_hi = s.maf_range.second;
  options->p_add = s.p_add;
  options->target_pve = s.target_pve;
  options->shape_a = s.effect_shape.first;
  options->shape_b = s.effect_shape.second;
  options->seed = s.seed;
  options->covariates = mrvb_block_layout{MRVB_INDEPENDENT, 0, nullptr, 0, nullptr, 0};
  options->responses = options->covariates;
}

namespace {

std::vector<mrvb::BlockSpec> to_blocks(const mrvb_block_layout& layout, std::size_t total) {
  mrvb::Dependence structure;
  switch (layout.structure) {
    case MRVB_INDEPENDENT: structure = mrvb::Dependence::independent; break;
    case MRVB_AUTOCORRELATED: structure = mrvb::Dependence::autocorrelated; break;
    case MRVB_EQUICORRELATED: structure = mrvb::Dependence::equicorrelated; break;
    default: throw mrvb::invalid_argument("unknown block structure " + std::to_string(layout.structure));
  }
  if ((layout.rho_count > 0 && !layout.rho) || (layout.padd_multiplier_count > 0 && !layout.padd_multiplier))
    throw mrvb::invalid_argument("block layout array is null");
  const std::size_t size = layout.block_size == 0 ? total : layout.block_size;
  std::vector<mrvb::BlockSpec> blocks;
  for (std::size_t start = 0, k = 0; start < total; start += size, ++k) {
    mrvb::BlockSpec b;
    b.size = std::min(size, total - start);
    b.structure = structure;
    if (layout.rho_count > 0) b.rho = layout.rho[k % layout.rho_count];
    if (layout.padd_multiplier_count > 0) b.padd_multiplier = layout.padd_multiplier[k % layout.padd_multiplier_count];
    blocks.push_back(b);
  }
  return blocks;
}

}  // namespace

mrvb_status mrvb_simulate(const mrvb_sim_options* options, mrvb_simulation** out) {
  return guarded([&] {
    require(options, "options");
    require(out, "out");
    *out = nullptr;
    mrvb::SimulationSpec spec;
    spec.n = options->n;
    spec.p = options->p;
    spec.d = options->d;
    spec.p0 = options->p0;
    spec.d0 = options->d0;
    spec.maf_range = {options->maf_lo, options->maf_hi};
    spec.p_add = options->p_add;
    spec.target_pve = options->target_pve;
    spec.effect_shape = {options->shape_a, options->shape_b};
    spec.seed = options->seed;
    spec.covariate_blocks = to_blocks(options->covariates, spec.p);
    spec.response_blocks = to_blocks(options->responses, spec.d);
    auto res = std::make_unique<mrvb_simulation>();
    res->sim = mrvb::generate_dataset(spec);
    res->samples = numbered("sample", spec.n);
    res->covariates = numbered("snp", spec.p);
    res->responses = numbered("y", spec.d);
    *out = res.release();
  });
}

void mrvb_simulation_beta(const mrvb_simulation* sim, double* out) {
  if (sim && out) copy_out(sim->sim.beta_true, out);
}

void mrvb_simulation_maf(const mrvb_simulation* sim, double* out) {
  if (sim && out) copy_out(sim->sim.maf, out);
}

mrvb_status mrvb_simulation_dataset(const mrvb_simulation* sim, mrvb_dataset** out) {
  return guarded([&] {
    require(sim, "simulation");
    require(out, "out");
    *out = nullptr;
    auto ds = std::make_unique<mrvb_dataset>();
    ds->X.values = sim->sim.genotypes;
    ds->Y.values = sim->sim.Y_raw;
    ds->X.row_ids = ds->Y.row_ids = sim->samples;
    ds->X.col_ids = sim->covariates;
    ds->Y.col_ids = sim->responses;
    ds->data = sim->sim.dataset;
    *out = ds.release();
  });
}

mrvb_status mrvb_simulation_write(const mrvb_simulation* sim, const char* dir) {
  return guarded([&] {
    require(sim, "simulation");
    require(dir, "dir");
    const mrvb::SimulatedData& s = sim->sim;
    mrvb::LabeledMatrix X{"sample", sim->samples, sim->covariates, s.genotypes};
    mrvb::LabeledMatrix Y{"sample", sim->samples, sim->responses, s.Y_raw};
    mrvb::write_matrix(join_path(dir, "X.tsv"), X);
    mrvb::write_matrix(join_path(dir, "Y.tsv"), Y);

    const std::string truth_path = join_path(dir, "truth.tsv");
    std::ofstream truth = open_out(truth_path);
    truth << "covariate\tresponse\tbeta\n";
    for (Eigen::Index s_ = 0; s_ < s.beta_true.rows(); ++s_)
      for (Eigen::Index t = 0; t < s.beta_true.cols(); ++t)
        if (s.gamma_true(s_, t) != 0.0)
          truth << sim->covariates[static_cast<std::size_t>(s_)] << '\t' << sim->responses[static_cast<std::size_t>(t)]
                << '\t' << mrvb::format_double(s.beta_true(s_, t)) << '\n';
    finish(truth, truth_path);

    const std::string maf_path = join_path(dir, "maf.tsv");
    std::ofstream maf = open_out(maf_path);
    maf << "covariate\tmaf\n";
    for (Eigen::Index j = 0; j < s.maf.size(); ++j)
      maf << sim->covariates[static_cast<std::size_t>(j)] << '\t' << mrvb::format_double(s.maf[j]) << '\n';
    finish(maf, maf_path);

    const std::string sd_path = join_path(dir, "residual_sd.tsv");
    std::ofstream sd = open_out(sd_path);
    sd << "response\tresidual_sd\n";
    for (Eigen::Index t = 0; t < s.residual_sd.size(); ++t)
      sd << sim->responses[static_cast<std::size_t>(t)] << '\t' << mrvb::format_double(s.residual_sd[t]) << '\n';
    finish(sd, sd_path);
  });
}

void mrvb_simulation_free(mrvb_simulation* sim) { delete sim; }

void mrvb_fdr_options_default(mrvb_fdr_options* options) {
  if (!options) return;
  *options = mrvb_fdr_options{100, 1, 1, nullptr, 0};
}

mrvb_status mrvb_permute_fdr(const mrvb_dataset* ds, const mrvb_prior* prior, const mrvb_fit_options* fit_options,
                             const mrvb_fdr_options* options, const mrvb_fit_result* observed,
                             mrvb_fdr_result** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(prior, "prior");
    require(fit_options, "fit_options");
    require(options, "options");
    require(observed, "observed");
    require(out, "out");
    *out = nullptr;
    if (options->grid_length > 0) require(options->grid, "grid");
    std::vector<double> grid = options->grid_length > 0
                                   ? std::vector<double>(options->grid, options->grid + options->grid_length)
                                   : mrvb::default_threshold_grid();
    auto res = std::make_unique<mrvb_fdr_result>();
    res->run = mrvb::permute_and_refit(make_spec(*ds, *prior), to_config(*fit_options), observed->fit.ppi,
                                       options->B, options->seed, std::move(grid), options->workers);
    res->curve = mrvb::empirical_fdr_curve(res->run);
    *out = res.release();
  });
}

size_t mrvb_fdr_curve_length(const mrvb_fdr_result* res) { return res ? res->curve.size() : 0; }

void mrvb_fdr_curve(const mrvb_fdr_result* res, double* tau, double* fdr, int* no_discoveries) {
  if (!res) return;
  for (std::size_t k = 0; k < res->curve.size(); ++k) {
    if (tau) tau[k] = res->curve[k].tau;
    if (fdr) fdr[k] = res->curve[k].fdr;
    if (no_discoveries) no_discoveries[k] = res->curve[k].no_discoveries ? 1 : 0;
  }
}

mrvb_status mrvb_fdr_threshold(const mrvb_fdr_result* res, double target, double* tau, int* found) {
  return guarded([&] {
    require(res, "result");
    require(tau, "tau");
    require(found, "found");
    const auto t = mrvb::threshold_for_fdr(res->curve, target);
    *found = t ? 1 : 0;
    *tau = t ? *t : 1.0;
  });
}

mrvb_status mrvb_fdr_write(const mrvb_fdr_result* res, const mrvb_fit_result* observed, const mrvb_dataset* ds,
                           const double* targets, size_t n_targets, const char* dir) {
  return guarded([&] {
    require(res, "result");
    require(observed, "observed");
    require(ds, "dataset");
    require(dir, "dir");
    if (n_targets > 0) require(targets, "targets");

    const std::string curve_path = join_path(dir, "fdr_curve.tsv");
    std::ofstream curve = open_out(curve_path);
    curve << "tau\tfdr\tobserved\tmedian_permuted\tno_discoveries\n";
    for (std::size_t k = 0; k < res->curve.size(); ++k) {
      std::vector<double> col;
      for (const auto& row : res->run.permuted) col.push_back(static_cast<double>(row[k]));
      curve << mrvb::format_double(res->curve[k].tau) << '\t' << mrvb::format_double(res->curve[k].fdr) << '\t'
            << res->run.observed[k] << '\t' << mrvb::format_double(mrvb::median(col)) << '\t'
            << (res->curve[k].no_discoveries ? 1 : 0) << '\n';
    }
    finish(curve, curve_path);

    const std::string thr_path = join_path(dir, "thresholds.tsv");
    const std::string dec_path = join_path(dir, "declarations.tsv");
    std::ofstream thr = open_out(thr_path);
    std::ofstream dec = open_out(dec_path);
    thr << "target_fdr\ttau\tpairs\tactive_covariates\n";
    dec << "target_fdr\tcovariate\tresponse\tppi\n";
    for (std::size_t i = 0; i < n_targets; ++i) {
      const auto tau = mrvb::threshold_for_fdr(res->curve, targets[i]);
      if (!tau) {
        thr << mrvb::format_double(targets[i]) << "\tNA\t0\t0\n";
        continue;
      }
      const mrvb::Declaration decl = mrvb::declare_associations(observed->fit.ppi, *tau);
      thr << mrvb::format_double(targets[i]) << '\t' << mrvb::format_double(*tau) << '\t' << decl.pairs.size() << '\t'
          << decl.active_covariates.size() << '\n';
      for (const auto& [s, t] : decl.pairs)
        dec << mrvb::format_double(targets[i]) << '\t' << ds->X.col_ids[s] << '\t' << ds->Y.col_ids[t] << '\t'
            << mrvb::format_double(observed->fit.ppi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)))
            << '\n';
    }
    finish(thr, thr_path);
    finish(dec, dec_path);
  });
}

void mrvb_fdr_free(mrvb_fdr_result* res) { delete res; }

mrvb_status mrvb_adaptive_thresholds(const double* ppi, size_t p, size_t d, double tau, double* out) {
  return guarded([&] {
    require(ppi, "ppi");
    require(out, "out");
    const Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(ppi, static_cast<Eigen::Index>(p),
                                                                static_cast<Eigen::Index>(d));
    const Eigen::VectorXd thr = mrvb::adaptive_column_thresholds(m, tau);
    std::copy(thr.data(), thr.data() + thr.size(), out);
  });
}

void mrvb_oracle_options_default(mrvb_oracle_options* options) {
  if (!options) return;
  const mrvb::OracleConfig c;
  *options = mrvb_oracle_options{c.n_draws, c.seed, c.max_p};
}

mrvb_status mrvb_oracle_check(const mrvb_dataset* ds, const mrvb_prior* prior, const mrvb_fit_options* fit_options,
                              const mrvb_oracle_options* options, mrvb_oracle_result** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(prior, "prior");
    require(fit_options, "fit_options");
    require(options, "options");
    require(out, "out");
    *out = nullptr;
    mrvb::OracleConfig oc;
    oc.n_draws = options->n_draws;
    oc.seed = options->seed;
    oc.max_p = options->max_p;
    oc.validate();
    if (ds->data.p() > oc.max_p)
      throw mrvb::invalid_argument("oracle-check enumerates all 2^p inclusion patterns and is limited to p <= " +
                                   std::to_string(oc.max_p) + "; this dataset has p = " +
                                   std::to_string(ds->data.p()));
    const mrvb::ModelSpec spec = make_spec(*ds, *prior);
    auto res = std::make_unique<mrvb_oracle_result>();
    res->fit = mrvb::fit(spec, to_config(*fit_options));
    res->summary = mrvb::oracle_summary(spec.dataset, spec.hyper, oc);
    res->report = mrvb::make_tightness_report(res->summary.log_evidence, res->fit.elbo());
    *out = res.release();
  });
}

void mrvb_oracle_tightness(const mrvb_oracle_result* res, mrvb_tightness* out) {
  if (!res || !out) return;
  const auto& r = res->report;
  *out = mrvb_tightness{r.log_evidence, r.std_error, r.elbo, r.relative_gap, r.log10_relative_gap,
                        r.bound_holds ? 1 : 0};
}

mrvb_status mrvb_oracle_write(const mrvb_oracle_result* res, const mrvb_dataset* ds, const char* dir) {
  return guarded([&] {
    require(res, "result");
    require(ds, "dataset");
    require(dir, "dir");
    const auto& r = res->report;
    const std::string tight_path = join_path(dir, "tightness.tsv");
    std::ofstream tight = open_out(tight_path);
    tight << "quantity\tvalue\n"
          << "log_evidence\t" << mrvb::format_double(r.log_evidence) << '\n'
          << "log_evidence_se\t" << mrvb::format_double(r.std_error) << '\n'
          << "elbo\t" << mrvb::format_double(r.elbo) << '\n'
          << "relative_gap\t" << mrvb::format_double(r.relative_gap) << '\n'
          << "log10_relative_gap\t" << mrvb::format_double(r.log10_relative_gap) << '\n'
          << "bound_holds\t" << (r.bound_holds ? 1 : 0) << '\n'
          << "iterations\t" << res->fit.iterations << '\n'
          << "converged\t" << (res->fit.converged ? 1 : 0) << '\n';
    finish(tight, tight_path);

    const std::string ppi_path = join_path(dir, "ppi_comparison.tsv");
    std::ofstream ppi = open_out(ppi_path);
    ppi << "covariate\tresponse\tvb\toracle\n";
    for (Eigen::Index s = 0; s < res->fit.ppi.rows(); ++s)
      for (Eigen::Index t = 0; t < res->fit.ppi.cols(); ++t)
        ppi << ds->X.col_ids[static_cast<std::size_t>(s)] << '\t' << ds->Y.col_ids[static_cast<std::size_t>(t)]
            << '\t' << mrvb::format_double(res->fit.ppi(s, t)) << '\t'
            << mrvb::format_double(res->summary.ppi(s, t)) << '\n';
    finish(ppi, ppi_path);

    const std::string omega_path = join_path(dir, "omega_comparison.tsv");
    std::ofstream omega = open_out(omega_path);
    omega << "covariate\tvb\toracle\n";
    for (Eigen::Index s = 0; s < res->fit.omega_mean.size(); ++s)
      omega << ds->X.col_ids[static_cast<std::size_t>(s)] << '\t' << mrvb::format_double(res->fit.omega_mean[s])
            << '\t' << mrvb::format_double(res->summary.omega_mean[s]) << '\n';
    finish(omega, omega_path);
  });
}

void mrvb_oracle_free(mrvb_oracle_result* res) { delete res; }

void mrvb_cv_options_default(mrvb_cv_options* options) {
  if (!options) return;
  const mrvb::CvConfig c;
  *options = mrvb_cv_options{c.folds, c.seed, MRVB_CV_PREDICTIVE, c.workers};
}

mrvb_status mrvb_cross_validate(const mrvb_dataset* ds, const double* grid, size_t grid_length,
                                const mrvb_prior* prior, const mrvb_fit_options* fit_options,
                                const mrvb_cv_options* options, mrvb_cv_result** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(grid, "grid");
    require(prior, "prior");
    require(fit_options, "fit_options");
    require(options, "options");
    require(out, "out");
    *out = nullptr;
    mrvb::PriorSettings s;
    s.a = prior->a;
    s.b = prior->b;
    s.eta = prior->eta;
    s.kappa = prior->kappa;
    s.lambda = prior->lambda;
    s.nu = prior->nu;
    mrvb::CvConfig cc;
    cc.folds = options->folds;
    cc.seed = options->seed;
    cc.workers = options->workers;
    switch (options->objective) {
      case MRVB_CV_PREDICTIVE: cc.objective = mrvb::CvObjective::predictive_density; break;
      case MRVB_CV_TRAINING_ELBO: cc.objective = mrvb::CvObjective::training_elbo; break;
      default: throw mrvb::invalid_argument("unknown cross-validation objective");
    }
    auto res = std::make_unique<mrvb_cv_result>();
    res->objective = cc.objective;
    res->cv = mrvb::cross_validate_pstar(ds->X.values, ds->Y.values, std::vector<double>(grid, grid + grid_length), s,
                                         to_config(*fit_options), cc);
    *out = res.release();
  });
}

double mrvb_cv_selected(const mrvb_cv_result* res) { return res ? res->cv.selected : 0.0; }

mrvb_status mrvb_cv_write(const mrvb_cv_result* res, const char* dir) {
  return guarded([&] {
    require(res, "result");
    require(dir, "dir");
    const std::string path = join_path(dir, "cv_scores.tsv");
    std::ofstream out = open_out(path);
    const std::size_t K = res->cv.table.empty() ? 0 : res->cv.table.front().fold_scores.size();
    out << "p_star\tobjective";
    for (std::size_t k = 0; k < K; ++k) out << "\tfold_" << k + 1;
    out << "\tmean\tstatus\tselected\n";
    const char* objective =
        res->objective == mrvb::CvObjective::predictive_density ? "predictive_density" : "training_elbo";
    for (const auto& row : res->cv.table) {
      out << mrvb::format_double(row.p_star) << '\t' << objective;
      for (const auto& s : row.fold_scores) out << '\t' << (s ? mrvb::format_double(*s) : std::string("NA"));
      out << '\t' << (row.failed ? std::string("NA") : mrvb::format_double(row.mean_score)) << '\t'
          << (row.failed ? "failed" : "ok") << '\t' << (row.p_star == res->cv.selected ? 1 : 0) << '\n';
    }
    finish(out, path);
  });
}

void mrvb_cv_free(mrvb_cv_result* res) { delete res; }

}  // extern "C"
