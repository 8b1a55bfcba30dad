#pragma once

// Reference computations that share no code with the library.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace oracle {

// Minimum of f over `points` equally spaced values in [lo, hi].
inline double grid_min(const std::function<double(double)>& f, double lo, double hi, int points) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < points; ++k) {
    const double x = lo + (hi - lo) * k / (points - 1);
    best = std::min(best, f(x));
  }
  return best;
}

// Argmin of f on a grid, refined by golden-section search on the bracketing cell.
inline double grid_argmin(const std::function<double(double)>& f, double lo, double hi, int points) {
  double best = std::numeric_limits<double>::infinity();
  int arg = 0;
  for (int k = 0; k < points; ++k) {
    const double v = f(lo + (hi - lo) * k / (points - 1));
    if (v < best) {
      best = v;
      arg = k;
    }
  }
  const double step = (hi - lo) / (points - 1);
  double a = std::max(lo, lo + step * (arg - 1));
  double b = std::min(hi, lo + step * (arg + 1));
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - phi * (b - a);
    const double d = a + phi * (b - a);
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  const double x = 0.5 * (a + b);
  return f(x) < best ? x : lo + step * arg;
}

// Bernoulli NLL written straight from the definition in long double.
inline double bernoulli_nll_logit(double x, double theta) {
  const long double t = theta;
  const long double p = 1.0L / (1.0L + std::exp(-t));
  const long double q = 1.0L / (1.0L + std::exp(t));
  return static_cast<double>(-(x * std::log(p) + (1.0L - x) * std::log(q)));
}

inline double bernoulli_nll_probit(double x, double theta) {
  const long double t = theta;
  const long double p = 0.5L * std::erfc(-t / std::sqrt(2.0L));
  const long double q = 0.5L * std::erfc(t / std::sqrt(2.0L));
  return static_cast<double>(-(x * std::log(p) + (1.0L - x) * std::log(q)));
}

// Central finite-difference gradient of f at every entry of `x`.
inline Eigen::MatrixXd central_difference(const std::function<double(const Eigen::MatrixXd&)>& f,
                                          const Eigen::MatrixXd& x, double h) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  Eigen::MatrixXd probe = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      probe(i, j) = x(i, j) + h;
      const double up = f(probe);
      probe(i, j) = x(i, j) - h;
      const double down = f(probe);
      probe(i, j) = x(i, j);
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

// Second derivative by a five-point stencil.
inline double second_derivative(const std::function<double(double)>& f, double x, double h) {
  return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h);
}

// Singular values by one-sided (Hestenes) Jacobi: rotate column pairs until
// mutually orthogonal, then read off the column norms. Accurate for tiny values.
inline Eigen::VectorXd jacobi_singular_values(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd a = m.rows() >= m.cols() ? Eigen::MatrixXd(m) : Eigen::MatrixXd(m.transpose());
  const Eigen::Index n = a.cols();
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = a.col(p).squaredNorm(), beta = a.col(q).squaredNorm();
        const double gamma = a.col(p).dot(a.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const Eigen::VectorXd cp = a.col(p);
        a.col(p) = c * cp - s * a.col(q);
        a.col(q) = s * cp + c * a.col(q);
      }
    }
    if (!rotated) break;
  }
  Eigen::VectorXd s(n);
  for (Eigen::Index r = 0; r < n; ++r) s(r) = a.col(r).norm();
  std::sort(s.data(), s.data() + s.size(), std::greater<double>());
  return s;
}

inline Eigen::MatrixXd random_normal(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  }
  return m;
}

// 0/1 matrix with P(1) = φ(θ); entries are set missing with probability `missing`.
inline Eigen::MatrixXd random_binary(const Eigen::MatrixXd& theta, std::mt19937_64& rng, double missing = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(theta.rows(), theta.cols());
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-theta(i, j)));
      x(i, j) = u(rng) < p ? 1.0 : 0.0;
      if (missing > 0.0 && u(rng) < missing) x(i, j) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return x;
}

}  // namespace oracle
