#pragma once

#include "lpca/binary_matrix.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <variant>

namespace lpca {

/// μ = 0.
struct BalancedOffset {};

/// μ_j = logit(p_j) for user-supplied marginal probabilities.
struct MarginalOffset {
  Eigen::VectorXd probabilities;
};

/// p_j drawn uniformly on [p_lo, p_hi] from its own seed, so the offsets stay
/// fixed while the dataset seed varies.
struct SampledOffset {
  double p_lo = 0.01;
  double p_hi = 0.15;
  std::uint64_t seed = 0;
};

using OffsetSpec = std::variant<BalancedOffset, MarginalOffset, SampledOffset>;

struct SimulationConfig {
  Eigen::Index rows = 160;
  Eigen::Index cols = 410;
  Eigen::Index rank = 5;
  double snr = 1.0;
  OffsetSpec offset = BalancedOffset{};
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulatedDataset {
  BinaryMatrix X;
  Eigen::MatrixXd theta;
  Eigen::MatrixXd Z;
  Eigen::VectorXd mu;
  Eigen::MatrixXd Pi;
  Eigen::MatrixXd Xstar;
  Eigen::MatrixXd E;
  /// Orthonormal factors and singular values of Z.
  Eigen::MatrixXd U;
  Eigen::VectorXd D;
  Eigen::MatrixXd V;
  double realized_snr = 0.0;
};

/// Latent-variable simulation of a binary matrix with rank-R logit structure.
///
/// Draw order from the dataset seed: U (I×R, N(0,1)), V (J×R, N(0,1)), the
/// R entries of D_pre (|N(1, 0.5)|), then E (I×J standard logistic), then the
/// Bernoulli uniforms for X. Datasets sharing a seed therefore differ only in
/// the SNR scale c when only `snr` changes.
SimulatedDataset simulate(const SimulationConfig& cfg);

/// μ_j = log(p_j / (1 − p_j)). Throws unless every p_j lies in (0, 1).
Eigen::VectorXd offset_from_marginals(const Eigen::VectorXd& p);

/// Inverse-CDF draw from Logistic(0, 1); uniforms of exactly 0 or 1 are redrawn.
double sample_standard_logistic(std::mt19937_64& rng);

/// Orthonormalizes the columns of `m` in place by modified Gram–Schmidt.
void gram_schmidt(Eigen::MatrixXd& m);

}  // namespace lpca
