#ifndef MRVB_SIMULATOR_HPP
#define MRVB_SIMULATOR_HPP

#include "mrvb/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace mrvb {

enum class Dependence { independent, autocorrelated, equicorrelated, empirical };

struct BlockSpec {
  std::size_t size = 0;
  Dependence structure = Dependence::independent;
  double rho = 0.0;                // autocorrelated / equicorrelated
  Eigen::MatrixXd correlation;     // empirical, size x size
  double padd_multiplier = 1.0;    // response blocks only; scales p_add for responses in this block
};

struct SimulationSpec {
  std::size_t n = 0, p = 0, d = 0;
  std::size_t p0 = 0;  // active covariates
  std::size_t d0 = 0;  // active responses
  std::pair<double, double> maf_range{0.05, 0.5};
  std::vector<BlockSpec> covariate_blocks;  // empty: one independent block of size p
  std::vector<BlockSpec> response_blocks;   // empty: one independent block of size d
  double p_add = 0.0;
  double target_pve = 0.1;  // mean pve over planted associations
  std::pair<double, double> effect_shape{2.0, 5.0};
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimulatedData {
  Dataset dataset;              // standardized
  Eigen::MatrixXd genotypes;    // n x p, entries in {0, 1, 2}
  Eigen::MatrixXd Y_raw;        // n x d, before centering
  Eigen::MatrixXd beta_true;    // p x d, per minor-allele copy
  Eigen::MatrixXd gamma_true;   // p x d, 0/1
  Eigen::VectorXd maf;          // p
  Eigen::VectorXd residual_sd;  // d
};

/// Nearest correlation matrix by alternating projections (with Dykstra's
/// correction) between the PSD cone and the unit-diagonal matrices. The
/// result is then floored at eigenvalue 1e-8 and rescaled to unit diagonal.
Eigen::MatrixXd nearest_positive_definite(const Eigen::MatrixXd& C);

/// Hardy-Weinberg genotypes with the block dependence of
/// spec.covariate_blocks induced through a latent Gaussian.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> simulate_genotypes(const SimulationSpec& spec);

Eigen::MatrixXd assign_association_pattern(const SimulationSpec& spec);

/// Returns (beta_true, residual_sd). |beta_st| = sqrt(pve_st / (2 m_s (1 - m_s))).
std::pair<Eigen::MatrixXd, Eigen::VectorXd> simulate_effects(const SimulationSpec& spec,
                                                             const Eigen::MatrixXd& gamma_true,
                                                             const Eigen::VectorXd& maf);

/// Y = (G - 2m) beta + E with E correlated within spec.response_blocks.
SimulatedData generate_dataset(const SimulationSpec& spec);

/// Correlation matrix implied by a block (before any repair).
Eigen::MatrixXd block_correlation(const BlockSpec& block);

double normal_cdf(double z);

}  // namespace mrvb

#endif  // MRVB_SIMULATOR_HPP
