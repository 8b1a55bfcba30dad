#include "lpca/evaluate.hpp"

#include "lpca/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace lpca {

double rmse(const Eigen::Ref<const Eigen::MatrixXd>& truth,
            const Eigen::Ref<const Eigen::MatrixXd>& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols()) {
    throw std::invalid_argument("rmse: shape mismatch");
  }
  const double denom = truth.squaredNorm();
  if (!(denom > 0.0)) throw std::invalid_argument("rmse: truth has zero norm");
  return (truth - estimate).squaredNorm() / denom;
}

double hellinger(double p, double p_hat) {
  const double a = std::sqrt(p) - std::sqrt(p_hat);
  const double b = std::sqrt(1.0 - p) - std::sqrt(1.0 - p_hat);
  return std::sqrt(a * a + b * b) / std::numbers::sqrt2;
}

double mean_hellinger(const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& Pi_hat) {
  if (Pi.rows() != Pi_hat.rows() || Pi.cols() != Pi_hat.cols()) {
    throw std::invalid_argument("mean_hellinger: shape mismatch");
  }
  if (Pi.size() == 0) throw std::invalid_argument("mean_hellinger: empty matrices");
  double total = 0.0;
  for (Index j = 0; j < Pi.cols(); ++j) {
    for (Index i = 0; i < Pi.rows(); ++i) total += hellinger(Pi(i, j), Pi_hat(i, j));
  }
  return total / static_cast<double>(Pi.size());
}

Index estimated_rank(const LpcaModel& model) { return model.S.size(); }

std::vector<double> variation_explained(const Eigen::VectorXd& S) {
  const SingularSpectrum spectrum(S);
  const double total = spectrum.values().squaredNorm();
  std::vector<double> ratios;
  if (!(total > 0.0)) return ratios;
  ratios.reserve(static_cast<std::size_t>(S.size()));
  for (Index r = 0; r < S.size(); ++r) ratios.push_back(S(r) * S(r) / total);
  return ratios;
}

std::vector<double> variation_explained(const LpcaModel& model) {
  return variation_explained(model.S);
}

Eigen::MatrixXd FullInformationModel::theta() const {
  Eigen::MatrixXd t = Z();
  t.rowwise() += mu.transpose();
  return t;
}

FullInformationModel full_information_fit(const Eigen::MatrixXd& Xstar, Index rank) {
  if (rank < 0 || rank > std::min(Xstar.rows() - 1, Xstar.cols())) {
    throw std::invalid_argument("full-information rank must lie in [0, min(I-1, J)]");
  }
  FullInformationModel m;
  m.mu = column_means(Xstar);
  m.factors = best_rank_approximation(column_centered(Xstar), rank);
  if (m.factors.U.rows() == 0 && Xstar.rows() > 0) m.factors.U.resize(Xstar.rows(), 0);
  return m;
}

MetricsReport evaluate_estimate(const GroundTruth& truth, const Eigen::VectorXd& mu_hat,
                                const Eigen::MatrixXd& Z_hat, const Eigen::VectorXd& S_hat,
                                Link link) {
  MetricsReport report;
  Eigen::MatrixXd theta_hat = Z_hat.rowwise() + mu_hat.transpose();
  report.rmse_theta = rmse(truth.theta, theta_hat);
  report.rmse_z = rmse(truth.Z, Z_hat);
  // Undefined for a zero offset (balanced simulations).
  report.rmse_mu = truth.mu.squaredNorm() > 0.0 ? rmse(truth.mu, mu_hat)
                                                : std::numeric_limits<double>::quiet_NaN();
  report.mhd_pi = mean_hellinger(truth.Pi, inverse_link(theta_hat, link));
  report.estimated_rank = S_hat.size();
  report.variation_explained = variation_explained(S_hat);
  return report;
}

MetricsReport evaluate_model(const GroundTruth& truth, const LpcaModel& model) {
  return evaluate_estimate(truth, model.mu, model.Z(), model.S, model.link);
}

MetricsReport evaluate_full_information(const GroundTruth& truth,
                                        const FullInformationModel& model) {
  return evaluate_estimate(truth, model.mu, model.Z(), model.factors.s, Link::Logit);
}

}  // namespace lpca
