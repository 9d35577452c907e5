#include "mrvb/simulator.hpp"

#include "mrvb/error.hpp"
#include "mrvb/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace mrvb {

namespace {

constexpr double kProjectionTol = 1e-7;
constexpr int kProjectionMaxIter = 100;
constexpr double kEigenFloor = 1e-8;
constexpr double kMaxGeneticFraction = 0.95;
constexpr int kMaxRedraws = 100;

// Stream identifiers for derive_seed.
enum Stream : std::uint64_t { maf_stream = 1, genotype_stream, pattern_stream, effect_stream, noise_stream };

void validate_blocks(const std::vector<BlockSpec>& blocks, std::size_t total, const char* what) {
  if (blocks.empty()) return;
  std::size_t sum = 0;
  for (const BlockSpec& b : blocks) {
    if (b.size == 0) throw invalid_argument(std::string(what) + " block of size 0");
    sum += b.size;
    if (!(b.rho > -1.0 && b.rho < 1.0)) throw invalid_argument(std::string(what) + " block rho must lie in (-1, 1)");
    if (b.structure == Dependence::empirical &&
        (b.correlation.rows() != static_cast<Eigen::Index>(b.size) || b.correlation.cols() != b.correlation.rows()))
      throw invalid_argument(std::string(what) + " block correlation must be size x size");
    if (!(b.padd_multiplier >= 0.0) || !std::isfinite(b.padd_multiplier))
      throw invalid_argument(std::string(what) + " block padd_multiplier must be finite and >= 0");
  }
  if (sum != total)
    throw invalid_argument(std::string(what) + " block sizes sum to " + std::to_string(sum) + ", expected " +
                           std::to_string(total));
}

std::vector<BlockSpec> blocks_or_default(const std::vector<BlockSpec>& blocks, std::size_t total) {
  if (!blocks.empty()) return blocks;
  BlockSpec one;
  one.size = total;
  return {one};
}

Eigen::MatrixXd standard_normals(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = z(rng);
  return out;
}

// n x size latent Gaussian rows with the block's correlation.
Eigen::MatrixXd latent_block(const BlockSpec& block, std::size_t n, Rng& rng) {
  const auto rows = static_cast<Eigen::Index>(n);
  const auto k = static_cast<Eigen::Index>(block.size);
  Eigen::MatrixXd e = standard_normals(rows, k, rng);
  switch (block.structure) {
    case Dependence::independent:
      return e;
    case Dependence::autocorrelated: {
      const double rho = block.rho;
      const double scale = std::sqrt(1.0 - rho * rho);
      for (Eigen::Index j = 1; j < k; ++j) e.col(j) = rho * e.col(j - 1) + scale * e.col(j);
      return e;
    }
    case Dependence::equicorrelated:
      if (block.rho >= 0.0) {
        Eigen::VectorXd f = standard_normals(rows, 1, rng).col(0);
        e *= std::sqrt(1.0 - block.rho);
        e.colwise() += std::sqrt(block.rho) * f;
        return e;
      }
      [[fallthrough]];
    case Dependence::empirical: {
      const Eigen::MatrixXd C = nearest_positive_definite(block_correlation(block));
      Eigen::LLT<Eigen::MatrixXd> llt(C);
      if (llt.info() != Eigen::Success) throw numerical_failure("Cholesky of the repaired block correlation failed");
      return e * llt.matrixU();
    }
  }
  return e;
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void SimulationSpec::validate() const {
  if (n < 2) throw invalid_argument("n must be at least 2");
  if (p == 0 || d == 0) throw invalid_argument("p and d must be positive");
  if (p0 > p) throw invalid_argument("p0 exceeds p");
  if (d0 > d) throw invalid_argument("d0 exceeds d");
  if (p0 > 0 && d0 == 0) throw invalid_argument("p0 >= 1 requires d0 >= 1");
  if (!(p_add >= 0.0 && p_add <= 1.0)) throw invalid_argument("p_add must lie in [0, 1]");
  if (!(target_pve > 0.0 && target_pve < 1.0)) throw invalid_argument("target_pve must lie in (0, 1)");
  if (!(maf_range.first > 0.0 && maf_range.first <= maf_range.second && maf_range.second <= 0.5))
    throw invalid_argument("maf_range must satisfy 0 < lo <= hi <= 0.5");
  if (!(effect_shape.first > 0.0 && effect_shape.second > 0.0))
    throw invalid_argument("effect_shape parameters must be positive");
  validate_blocks(covariate_blocks, p, "covariate");
  validate_blocks(response_blocks, d, "response");
}

Eigen::MatrixXd block_correlation(const BlockSpec& block) {
  const auto k = static_cast<Eigen::Index>(block.size);
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(k, k);
  switch (block.structure) {
    case Dependence::independent:
      break;
    case Dependence::autocorrelated:
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) C(i, j) = std::pow(block.rho, static_cast<double>(std::abs(i - j)));
      break;
    case Dependence::equicorrelated:
      C.setConstant(block.rho);
      C.diagonal().setOnes();
      break;
    case Dependence::empirical:
      C = block.correlation;
      break;
  }
  return C;
}

Eigen::MatrixXd nearest_positive_definite(const Eigen::MatrixXd& C) {
  if (C.rows() != C.cols()) throw invalid_argument("nearest_positive_definite requires a square matrix");
  if (!C.allFinite()) throw invalid_argument("nearest_positive_definite requires finite entries");
  const Eigen::Index k = C.rows();
  if (k == 0) return C;

  Eigen::MatrixXd Y = 0.5 * (C + C.transpose());
  Eigen::MatrixXd correction = Eigen::MatrixXd::Zero(k, k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  for (int it = 0; it < kProjectionMaxIter; ++it) {
    const Eigen::MatrixXd R = Y - correction;
    eig.compute(R);
    const Eigen::MatrixXd X =
        eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
    correction = X - R;
    Eigen::MatrixXd next = X;
    next.diagonal().setOnes();
    const double change = (next - Y).norm();
    Y = std::move(next);
    if (change < kProjectionTol) break;
  }

  eig.compute(0.5 * (Y + Y.transpose()));
  if (eig.eigenvalues().minCoeff() < kEigenFloor) {
    Y = eig.eigenvectors() * eig.eigenvalues().cwiseMax(kEigenFloor).asDiagonal() * eig.eigenvectors().transpose();
    const Eigen::VectorXd inv_sd = Y.diagonal().cwiseSqrt().cwiseInverse();
    Y = inv_sd.asDiagonal() * Y * inv_sd.asDiagonal();
  }
  Y = (0.5 * (Y + Y.transpose())).eval();
  Y.diagonal().setOnes();
  return Y;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> simulate_genotypes(const SimulationSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto p = static_cast<Eigen::Index>(spec.p);

  Rng maf_rng(derive_seed(spec.seed, maf_stream));
  std::uniform_real_distribution<double> maf_dist(spec.maf_range.first, spec.maf_range.second);
  Eigen::VectorXd maf(p);
  for (Eigen::Index s = 0; s < p; ++s) maf[s] = spec.maf_range.first == spec.maf_range.second
                                                    ? spec.maf_range.first
                                                    : maf_dist(maf_rng);

  Eigen::MatrixXd G(n, p);
  const std::vector<BlockSpec> blocks = blocks_or_default(spec.covariate_blocks, spec.p);
  Eigen::Index start = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto k = static_cast<Eigen::Index>(blocks[b].size);
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRedraws && !ok; ++attempt) {
      Rng rng(derive_seed(spec.seed, genotype_stream, b, static_cast<std::uint64_t>(attempt)));
      const Eigen::MatrixXd Z = latent_block(blocks[b], spec.n, rng);
      ok = true;
      for (Eigen::Index j = 0; j < k && ok; ++j) {
        const double m = maf[start + j];
        const double c0 = (1.0 - m) * (1.0 - m);
        const double c1 = c0 + 2.0 * m * (1.0 - m);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double u = normal_cdf(Z(i, j));
          G(i, start + j) = u <= c0 ? 0.0 : (u <= c1 ? 1.0 : 2.0);
        }
        const auto col = G.col(start + j);
        ok = col.maxCoeff() > col.minCoeff();
      }
    }
    if (!ok)
      throw data_error("covariate block " + std::to_string(b + 1) +
                       " kept producing monomorphic genotypes; increase n or the minor allele frequency range");
    start += k;
  }
  return {G, maf};
}

Eigen::MatrixXd assign_association_pattern(const SimulationSpec& spec) {
  spec.validate();
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spec.p), static_cast<Eigen::Index>(spec.d));
  if (spec.p0 == 0) return gamma;

  Rng rng(derive_seed(spec.seed, pattern_stream));
  std::vector<std::size_t> rows(spec.p), cols(spec.d);
  std::iota(rows.begin(), rows.end(), 0);
  std::iota(cols.begin(), cols.end(), 0);
  std::shuffle(rows.begin(), rows.end(), rng);
  std::shuffle(cols.begin(), cols.end(), rng);
  rows.resize(spec.p0);
  cols.resize(spec.d0);
  std::sort(rows.begin(), rows.end());
  std::sort(cols.begin(), cols.end());

  // Per-response probability of an additional link.
  std::vector<double> padd(spec.d, spec.p_add);
  if (!spec.response_blocks.empty()) {
    std::size_t t = 0;
    for (const BlockSpec& b : spec.response_blocks)
      for (std::size_t j = 0; j < b.size; ++j, ++t) padd[t] = std::min(1.0, spec.p_add * b.padd_multiplier);
  }

  std::uniform_int_distribution<std::size_t> pick(0, spec.d0 - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t s : rows) {
    const std::size_t guaranteed = pick(rng);
    for (std::size_t j = 0; j < spec.d0; ++j) {
      const std::size_t t = cols[j];
      const double u = unif(rng);
      if (j == guaranteed || u < padd[t]) gamma(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = 1.0;
    }
  }
  return gamma;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> simulate_effects(const SimulationSpec& spec,
                                                             const Eigen::MatrixXd& gamma_true,
                                                             const Eigen::VectorXd& maf) {
  const Eigen::Index p = gamma_true.rows(), d = gamma_true.cols();
  if (maf.size() != p) throw invalid_argument("maf length must equal the number of covariates");
  for (Eigen::Index s = 0; s < p; ++s)
    if (!(maf[s] > 0.0 && maf[s] < 1.0)) throw invalid_argument("maf entries must lie in (0, 1)");
  if (!(spec.target_pve > 0.0 && spec.target_pve < 1.0)) throw invalid_argument("target_pve must lie in (0, 1)");

  Rng rng(derive_seed(spec.seed, effect_stream));
  Eigen::MatrixXd pve = Eigen::MatrixXd::Zero(p, d);
  double total = 0.0;
  std::size_t count = 0;
  for (Eigen::Index t = 0; t < d; ++t)
    for (Eigen::Index s = 0; s < p; ++s) {
      if (gamma_true(s, t) == 0.0) continue;
      const LogBetaDraw draw = log_beta_variate(spec.effect_shape.first, spec.effect_shape.second, rng);
      pve(s, t) = std::exp(draw.log_p);
      total += pve(s, t);
      ++count;
    }

  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(p, d);
  Eigen::VectorXd residual_sd = Eigen::VectorXd::Ones(d);
  if (count == 0) return {beta, residual_sd};
  pve *= spec.target_pve * static_cast<double>(count) / total;

  for (Eigen::Index t = 0; t < d; ++t) {
    const double genetic = pve.col(t).sum();
    if (genetic >= kMaxGeneticFraction)
      throw invalid_argument("response " + std::to_string(t + 1) + " would have " + std::to_string(genetic) +
                             " of its variance explained; use a smaller target_pve or a sparser pattern");
    residual_sd[t] = std::sqrt(1.0 - genetic);
  }

  std::bernoulli_distribution flip(0.5);
  for (Eigen::Index t = 0; t < d; ++t)
    for (Eigen::Index s = 0; s < p; ++s) {
      if (gamma_true(s, t) == 0.0) continue;
      const double m = maf[s];
      const double magnitude = std::sqrt(pve(s, t) / (2.0 * m * (1.0 - m)));
      beta(s, t) = flip(rng) ? -magnitude : magnitude;
    }
  return {beta, residual_sd};
}

SimulatedData generate_dataset(const SimulationSpec& spec) {
  spec.validate();
  SimulatedData out;
  std::tie(out.genotypes, out.maf) = simulate_genotypes(spec);
  out.gamma_true = assign_association_pattern(spec);
  std::tie(out.beta_true, out.residual_sd) = simulate_effects(spec, out.gamma_true, out.maf);

  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto d = static_cast<Eigen::Index>(spec.d);
  Eigen::MatrixXd noise(n, d);
  const std::vector<BlockSpec> blocks = blocks_or_default(spec.response_blocks, spec.d);
  Eigen::Index start = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    Rng rng(derive_seed(spec.seed, noise_stream, b));
    const auto k = static_cast<Eigen::Index>(blocks[b].size);
    noise.middleCols(start, k) = latent_block(blocks[b], spec.n, rng);
    start += k;
  }
  noise = noise * out.residual_sd.asDiagonal();

  Eigen::MatrixXd centered = out.genotypes;
  centered.rowwise() -= (2.0 * out.maf).transpose();
  out.Y_raw = centered * out.beta_true + noise;
  out.dataset = standardize_inputs(out.genotypes, out.Y_raw);
  return out;
}

}  // namespace mrvb
