#include "lpca/simulator.hpp"

#include "lpca/likelihood.hpp"
#include "lpca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace lpca {

void SimulationConfig::validate() const {
  if (rows < 2 || cols < 1) throw std::invalid_argument("simulation needs rows >= 2 and cols >= 1");
  if (rank < 1 || rank > std::min(rows - 1, cols)) {
    throw std::invalid_argument("rank must lie in [1, min(rows-1, cols)]");
  }
  if (!(snr > 0.0) || !std::isfinite(snr)) throw std::invalid_argument("snr must be > 0");
  if (const auto* m = std::get_if<MarginalOffset>(&offset)) {
    if (m->probabilities.size() != cols) {
      throw std::invalid_argument("marginal probability vector length must equal cols");
    }
    if (!((m->probabilities.array() > 0.0).all() && (m->probabilities.array() < 1.0).all())) {
      throw std::invalid_argument("marginal probabilities must lie in (0, 1)");
    }
  }
  if (const auto* s = std::get_if<SampledOffset>(&offset)) {
    if (!(s->p_lo > 0.0 && s->p_lo <= s->p_hi && s->p_hi < 1.0)) {
      throw std::invalid_argument("sampled offset range must satisfy 0 < p_lo <= p_hi < 1");
    }
  }
}

Eigen::VectorXd offset_from_marginals(const Eigen::VectorXd& p) {
  Eigen::VectorXd mu(p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (!(p(j) > 0.0 && p(j) < 1.0)) {
      throw std::invalid_argument("marginal probability " + std::to_string(p(j)) +
                                  " at index " + std::to_string(j) + " is not in (0, 1)");
    }
    mu(j) = std::log(p(j) / (1.0 - p(j)));
  }
  return mu;
}

double sample_standard_logistic(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  do {
    u = unif(rng);
  } while (u <= 0.0 || u >= 1.0);
  return std::log(u / (1.0 - u));
}

void gram_schmidt(Eigen::MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index p = 0; p < c; ++p) m.col(c) -= m.col(p).dot(m.col(c)) * m.col(p);
    const double norm = m.col(c).norm();
    if (!(norm > 0.0)) throw std::runtime_error("Gram-Schmidt hit a linearly dependent column");
    m.col(c) /= norm;
  }
}

SimulatedDataset simulate(const SimulationConfig& cfg) {
  cfg.validate();
  const Eigen::Index I = cfg.rows;
  const Eigen::Index J = cfg.cols;
  const Eigen::Index R = cfg.rank;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> standard(0.0, 1.0);

  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = standard(rng);
    }
    return m;
  };

  SimulatedDataset ds;
  Eigen::MatrixXd U_raw = gaussian(I, R);
  Eigen::MatrixXd V_raw = gaussian(J, R);

  ds.U = R > 0 ? thin_svd(column_centered(U_raw)).U : Eigen::MatrixXd(I, 0);
  ds.V = V_raw;
  gram_schmidt(ds.V);

  std::normal_distribution<double> scale_draw(1.0, 0.5);
  Eigen::VectorXd d_pre(R);
  for (Eigen::Index r = 0; r < R; ++r) {
    double v = 0.0;
    do {
      v = std::abs(scale_draw(rng));
    } while (v == 0.0);
    d_pre(r) = v;
  }
  std::sort(d_pre.data(), d_pre.data() + R, std::greater<>());

  ds.E.resize(I, J);
  for (Eigen::Index j = 0; j < J; ++j) {
    for (Eigen::Index i = 0; i < I; ++i) ds.E(i, j) = sample_standard_logistic(rng);
  }

  const Eigen::MatrixXd z_pre = ds.U * d_pre.asDiagonal() * ds.V.transpose();
  const double c = R > 0 ? std::sqrt(cfg.snr * ds.E.squaredNorm() / z_pre.squaredNorm()) : 0.0;
  ds.D = c * d_pre;
  ds.Z = ds.U * ds.D.asDiagonal() * ds.V.transpose();
  ds.realized_snr = ds.Z.squaredNorm() / ds.E.squaredNorm();

  if (std::holds_alternative<BalancedOffset>(cfg.offset)) {
    ds.mu = Eigen::VectorXd::Zero(J);
  } else if (const auto* m = std::get_if<MarginalOffset>(&cfg.offset)) {
    ds.mu = offset_from_marginals(m->probabilities);
  } else {
    const auto& s = std::get<SampledOffset>(cfg.offset);
    std::mt19937_64 offset_rng(s.seed);
    std::uniform_real_distribution<double> unif(s.p_lo, s.p_hi);
    Eigen::VectorXd p(J);
    for (Eigen::Index j = 0; j < J; ++j) p(j) = unif(offset_rng);
    ds.mu = offset_from_marginals(p);
  }

  ds.theta = ds.Z.rowwise() + ds.mu.transpose();
  ds.Pi = inverse_link(ds.theta, Link::Logit);
  ds.Xstar = ds.theta + ds.E;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd x(I, J);
  for (Eigen::Index j = 0; j < J; ++j) {
    for (Eigen::Index i = 0; i < I; ++i) x(i, j) = unif(rng) < ds.Pi(i, j) ? 1.0 : 0.0;
  }
  ds.X = BinaryMatrix::fully_observed(x);
  return ds;
}

}  // namespace lpca
