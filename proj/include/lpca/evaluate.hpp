#pragma once

#include "lpca/linalg.hpp"
#include "lpca/solver.hpp"

#include <Eigen/Dense>

#include <vector>

namespace lpca {

/// Known parameters of a simulated dataset.
struct GroundTruth {
  Eigen::MatrixXd theta;
  Eigen::MatrixXd Z;
  Eigen::VectorXd mu;
  Eigen::MatrixXd Pi;
};

struct MetricsReport {
  double rmse_theta = 0.0;
  double rmse_z = 0.0;
  double rmse_mu = 0.0;
  double mhd_pi = 0.0;
  Index estimated_rank = 0;
  std::vector<double> variation_explained;
};

/// ‖truth − estimate‖_F² / ‖truth‖_F². Throws when shapes differ or truth is 0.
double rmse(const Eigen::Ref<const Eigen::MatrixXd>& truth,
            const Eigen::Ref<const Eigen::MatrixXd>& estimate);

/// Hellinger distance between Bernoulli(p) and Bernoulli(p_hat).
double hellinger(double p, double p_hat);

/// Mean entrywise Hellinger distance.
double mean_hellinger(const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& Pi_hat);

Index estimated_rank(const LpcaModel& model);

/// S_r² / Σ_j S_j² per component. Rejects a spectrum that is not
/// nonincreasing; a rank-0 model yields an empty vector.
std::vector<double> variation_explained(const Eigen::VectorXd& S);
std::vector<double> variation_explained(const LpcaModel& model);

/// PCA with offset on the latent data: μ = column means of X*, Z = best
/// rank-R approximation of the centered X*.
struct FullInformationModel {
  Eigen::VectorXd mu;
  LowRankFactors factors;

  Eigen::MatrixXd Z() const { return factors.reconstruct(); }
  Eigen::MatrixXd theta() const;
};

FullInformationModel full_information_fit(const Eigen::MatrixXd& Xstar, Index rank);

/// Metrics of estimated (μ̂, Ẑ) against the truth. Π̂ uses `link`.
MetricsReport evaluate_estimate(const GroundTruth& truth, const Eigen::VectorXd& mu_hat,
                                const Eigen::MatrixXd& Z_hat, const Eigen::VectorXd& S_hat,
                                Link link);

MetricsReport evaluate_model(const GroundTruth& truth, const LpcaModel& model);
MetricsReport evaluate_full_information(const GroundTruth& truth,
                                        const FullInformationModel& model);

}  // namespace lpca
