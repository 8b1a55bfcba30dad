#include "lpca/likelihood.hpp"
#include "lpca/linalg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lpca {

namespace {

constexpr double kLogSqrtTwoPi = 0.91893853320467274178;  // 0.5·log(2π)

double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

// Continued fraction z + 1/(z + 2/(z + 3/(z + …))) = φ(z)/Φ(−z), the
// reciprocal of the Mills ratio, used for z ≥ 5 where erfc loses relative
// accuracy.
double mills_reciprocal_tail(double z) {
  double cf = z;
  for (int k = 120; k >= 1; --k) cf = z + k / cf;
  return cf;
}

// φ(t)/Φ(t) for the standard normal.
double inverse_mills(double t) {
  if (t > -5.0) {
    const double pdf = std::exp(-0.5 * t * t - kLogSqrtTwoPi);
    return pdf / (0.5 * std::erfc(-t / std::numbers::sqrt2));
  }
  return mills_reciprocal_tail(-t);
}

double log_normal_cdf(double t) {
  if (t > 0.0) return std::log1p(-0.5 * std::erfc(t / std::numbers::sqrt2));
  if (t > -5.0) return std::log(0.5 * std::erfc(-t / std::numbers::sqrt2));
  return -0.5 * t * t - kLogSqrtTwoPi - std::log(mills_reciprocal_tail(-t));
}

}  // namespace

std::string to_string(Link link) { return link == Link::Logit ? "logit" : "probit"; }

Link parse_link(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "logit") return Link::Logit;
  if (lower == "probit") return Link::Probit;
  throw std::invalid_argument("unknown link '" + std::string(name) + "'");
}

Eigen::MatrixXd NaturalParams::theta() const {
  if (mu.size() != Z.cols()) throw std::invalid_argument("offset length does not match Z");
  return Z.rowwise() + mu.transpose();
}

bool NaturalParams::centered(double rel_tol) const {
  const double scale = Z.norm();
  return (Z.colwise().sum().cwiseAbs().array() <= rel_tol * scale + 1e-300).all();
}

double inverse_link(double theta, Link link) {
  if (link == Link::Logit) {
    if (theta >= 0.0) return 1.0 / (1.0 + std::exp(-theta));
    const double e = std::exp(theta);
    return e / (1.0 + e);
  }
  return 0.5 * std::erfc(-theta / std::numbers::sqrt2);
}

double log_inverse_link(double theta, Link link) {
  if (link == Link::Logit) return -softplus(-theta);
  return log_normal_cdf(theta);
}

Eigen::MatrixXd inverse_link(const Eigen::MatrixXd& theta, Link link) {
  return theta.unaryExpr([link](double t) { return inverse_link(t, link); });
}

double entry_nll(double x, double theta, Link link) {
  return x != 0.0 ? -log_inverse_link(theta, link) : -log_inverse_link(-theta, link);
}

double entry_nll_derivative(double x, double theta, Link link) {
  if (link == Link::Logit) return inverse_link(theta, Link::Logit) - x;
  return x != 0.0 ? -inverse_mills(theta) : inverse_mills(-theta);
}

namespace {

void require_same_shape(const BinaryMatrix& X, const Eigen::MatrixXd& theta) {
  if (X.rows() != theta.rows() || X.cols() != theta.cols()) {
    throw std::invalid_argument("shape mismatch: data is " + std::to_string(X.rows()) + "x" +
                                std::to_string(X.cols()) + ", parameters are " +
                                std::to_string(theta.rows()) + "x" +
                                std::to_string(theta.cols()));
  }
}

}  // namespace

double nll_and_masked_gradient(const BinaryMatrix& X, const Eigen::MatrixXd& theta, Link link,
                               Eigen::MatrixXd& masked_gradient) {
  require_same_shape(X, theta);
  masked_gradient.resize(theta.rows(), theta.cols());
  const Eigen::MatrixXd& x = X.values();
  const Eigen::MatrixXd& w = X.mask();
  double total = 0.0;
  for (Index j = 0; j < theta.cols(); ++j) {
    for (Index i = 0; i < theta.rows(); ++i) {
      if (w(i, j) == 0.0) {
        masked_gradient(i, j) = 0.0;
        continue;
      }
      const double t = theta(i, j);
      const double xv = x(i, j);
      if (link == Link::Logit) {
        const double e = std::exp(-std::abs(t));
        const double p = t >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
        total += std::max(xv != 0.0 ? -t : t, 0.0) + std::log1p(e);
        masked_gradient(i, j) = p - xv;
      } else {
        total += entry_nll(xv, t, link);
        masked_gradient(i, j) = entry_nll_derivative(xv, t, link);
      }
    }
  }
  return total;
}

double neg_log_likelihood(const BinaryMatrix& X, const Eigen::MatrixXd& theta, Link link) {
  require_same_shape(X, theta);
  double total = 0.0;
  for (Index j = 0; j < theta.cols(); ++j) {
    for (Index i = 0; i < theta.rows(); ++i) {
      if (X.observed(i, j)) total += entry_nll(X.value(i, j), theta(i, j), link);
    }
  }
  return total;
}

double neg_log_likelihood(const BinaryMatrix& X, const NaturalParams& params, Link link) {
  return neg_log_likelihood(X, params.theta(), link);
}

Eigen::MatrixXd nll_gradient(const BinaryMatrix& X, const Eigen::MatrixXd& theta, Link link) {
  require_same_shape(X, theta);
  Eigen::MatrixXd grad(theta.rows(), theta.cols());
  for (Index j = 0; j < theta.cols(); ++j) {
    for (Index i = 0; i < theta.rows(); ++i) {
      grad(i, j) = entry_nll_derivative(X.value(i, j), theta(i, j), link);
    }
  }
  return grad;
}

double lipschitz_bound(Link link) { return link == Link::Logit ? 0.25 : 1.0; }

}  // namespace lpca
