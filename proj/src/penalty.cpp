#include "lpca/penalty.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lpca {

std::string to_string(PenaltyFamily family) {
  switch (family) {
    case PenaltyFamily::GDP: return "gdp";
    case PenaltyFamily::Nuclear: return "nuclear";
    case PenaltyFamily::SCAD: return "scad";
    case PenaltyFamily::Lq: return "lq";
    case PenaltyFamily::ExactRank: return "exact";
  }
  return "unknown";
}

PenaltyFamily parse_penalty_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "gdp") return PenaltyFamily::GDP;
  if (lower == "nuclear") return PenaltyFamily::Nuclear;
  if (lower == "scad") return PenaltyFamily::SCAD;
  if (lower == "lq") return PenaltyFamily::Lq;
  if (lower == "exact" || lower == "exact-rank" || lower == "exactrank") {
    return PenaltyFamily::ExactRank;
  }
  throw std::invalid_argument("unknown penalty family '" + std::string(name) + "'");
}

void PenaltySpec::validate() const {
  if (family == PenaltyFamily::ExactRank) {
    if (rank < 0) throw std::invalid_argument("exact-rank penalty needs rank >= 0");
    return;
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and >= 0");
  }
  switch (family) {
    case PenaltyFamily::GDP:
      if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("GDP gamma must be finite and > 0");
      }
      break;
    case PenaltyFamily::SCAD:
      if (!(a > 2.0) || !std::isfinite(a)) throw std::invalid_argument("SCAD a must be > 2");
      break;
    case PenaltyFamily::Lq:
      if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("L_q exponent must lie in (0, 1]");
      break;
    default:
      break;
  }
}

PenaltySpec PenaltySpec::gdp(double lambda, double gamma) {
  PenaltySpec s;
  s.family = PenaltyFamily::GDP;
  s.lambda = lambda;
  s.gamma = gamma;
  return s;
}

PenaltySpec PenaltySpec::nuclear(double lambda) {
  PenaltySpec s;
  s.family = PenaltyFamily::Nuclear;
  s.lambda = lambda;
  return s;
}

PenaltySpec PenaltySpec::scad(double lambda, double a) {
  PenaltySpec s;
  s.family = PenaltyFamily::SCAD;
  s.lambda = lambda;
  s.a = a;
  return s;
}

PenaltySpec PenaltySpec::lq(double lambda, double q) {
  PenaltySpec s;
  s.family = PenaltyFamily::Lq;
  s.lambda = lambda;
  s.q = q;
  return s;
}

PenaltySpec PenaltySpec::exact_rank(int rank) {
  PenaltySpec s;
  s.family = PenaltyFamily::ExactRank;
  s.rank = rank;
  return s;
}

SingularSpectrum::SingularSpectrum(Eigen::VectorXd values) : values_(std::move(values)) {
  for (Index r = 0; r < values_.size(); ++r) {
    const double v = values_(r);
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("singular values must be finite and nonnegative");
    }
    if (r > 0 && v > values_(r - 1)) {
      throw std::invalid_argument("singular values must be sorted nonincreasing");
    }
  }
}

SingularSpectrum SingularSpectrum::padded(const Eigen::VectorXd& values, Index length) {
  if (values.size() > length) {
    throw std::invalid_argument("spectrum longer than requested padded length");
  }
  Eigen::VectorXd full = Eigen::VectorXd::Zero(length);
  full.head(values.size()) = values;
  return SingularSpectrum(std::move(full));
}

namespace {

double scad_value(double sigma, double lambda, double a) {
  if (sigma <= lambda) return lambda * sigma;
  if (sigma <= a * lambda) {
    return (2.0 * a * lambda * sigma - sigma * sigma - lambda * lambda) / (2.0 * (a - 1.0));
  }
  return lambda * lambda * (a + 1.0) / 2.0;
}

double scalar_value(const PenaltySpec& spec, double sigma) {
  switch (spec.family) {
    case PenaltyFamily::GDP: return std::log1p(sigma / spec.gamma);
    case PenaltyFamily::Nuclear: return sigma;
    case PenaltyFamily::Lq: return std::pow(sigma, spec.q);
    case PenaltyFamily::SCAD: return scad_value(sigma, spec.lambda, spec.a);
    case PenaltyFamily::ExactRank: break;
  }
  throw std::invalid_argument("penalty value undefined for hard rank constraint");
}

double scalar_weight(const PenaltySpec& spec, double sigma) {
  switch (spec.family) {
    case PenaltyFamily::GDP: return 1.0 / (spec.gamma + sigma);
    case PenaltyFamily::Nuclear: return 1.0;
    case PenaltyFamily::Lq: return spec.q * std::pow(std::max(sigma, kLqSmoothing), spec.q - 1.0);
    case PenaltyFamily::SCAD: {
      const double lambda = spec.lambda;
      if (sigma <= lambda) return 1.0;
      if (sigma <= spec.a * lambda) return (spec.a * lambda - sigma) / ((spec.a - 1.0) * lambda);
      return 0.0;
    }
    case PenaltyFamily::ExactRank: break;
  }
  throw std::invalid_argument("supergradient undefined for hard rank constraint");
}

// Objective of the scalar proximal problem.
double scalar_prox_objective(const PenaltySpec& spec, double z, double sigma, double L) {
  const double outer = spec.family == PenaltyFamily::SCAD ? 1.0 : spec.lambda;
  return 0.5 * L * (z - sigma) * (z - sigma) + outer * scalar_value(spec, z);
}

double lq_threshold(const PenaltySpec& spec, double sigma, double L) {
  const double lambda = spec.lambda;
  const double q = spec.q;
  if (q == 1.0) return std::max(0.0, sigma - lambda / L);
  auto slope = [&](double z) { return L * (z - sigma) + lambda * q * std::pow(z, q - 1.0); };
  // Convex for z above the inflection point; any interior minimizer lives there.
  const double inflection = std::pow(lambda * q * (1.0 - q) / L, 1.0 / (2.0 - q));
  if (inflection >= sigma || slope(inflection) >= 0.0) return 0.0;
  double lo = inflection;
  double hi = sigma;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) < 0.0 ? lo : hi) = mid;
  }
  const double z = 0.5 * (lo + hi);
  return scalar_prox_objective(spec, z, sigma, L) < scalar_prox_objective(spec, 0.0, sigma, L)
             ? z
             : 0.0;
}

double scad_threshold(const PenaltySpec& spec, double sigma, double L) {
  const double lambda = spec.lambda;
  const double a = spec.a;
  std::vector<double> candidates{0.0, lambda, a * lambda, std::max(sigma, a * lambda),
                                 std::clamp(sigma - lambda / L, 0.0, lambda)};
  const double curvature = L - 1.0 / (a - 1.0);
  if (curvature > 0.0) {
    const double z = (L * sigma - a * lambda / (a - 1.0)) / curvature;
    candidates.push_back(std::clamp(z, lambda, a * lambda));
  }
  double best = 0.0;
  double best_value = std::numeric_limits<double>::infinity();
  for (double z : candidates) {
    const double v = scalar_prox_objective(spec, z, sigma, L);
    if (v < best_value) {
      best_value = v;
      best = z;
    }
  }
  return best;
}

double gdp_threshold(const PenaltySpec& spec, double sigma, double L) {
  const double gamma = spec.gamma;
  const double disc = (sigma + gamma) * (sigma + gamma) - 4.0 * spec.lambda / L;
  if (disc < 0.0) return 0.0;
  const double z = 0.5 * ((sigma - gamma) + std::sqrt(disc));
  if (z <= 0.0) return 0.0;
  return scalar_prox_objective(spec, z, sigma, L) < scalar_prox_objective(spec, 0.0, sigma, L)
             ? z
             : 0.0;
}

}  // namespace

double penalty_value(const PenaltySpec& spec, const SingularSpectrum& sigma) {
  spec.validate();
  double total = 0.0;
  if (spec.family == PenaltyFamily::ExactRank) {
    throw std::invalid_argument("penalty value undefined for hard rank constraint");
  }
  for (Index r = 0; r < sigma.size(); ++r) total += scalar_value(spec, sigma.values()(r));
  return total;
}

double penalty_term(const PenaltySpec& spec, const SingularSpectrum& sigma) {
  switch (spec.family) {
    case PenaltyFamily::ExactRank: return 0.0;
    case PenaltyFamily::SCAD: return penalty_value(spec, sigma);
    default: return spec.lambda * penalty_value(spec, sigma);
  }
}

Eigen::VectorXd supergradient_weights(const PenaltySpec& spec, const SingularSpectrum& sigma_k) {
  spec.validate();
  if (spec.family == PenaltyFamily::ExactRank) {
    throw std::invalid_argument("supergradient undefined for hard rank constraint");
  }
  Eigen::VectorXd w(sigma_k.size());
  for (Index r = 0; r < w.size(); ++r) w(r) = scalar_weight(spec, sigma_k.values()(r));
  return w;
}

LowRankFactors weighted_sv_threshold_factors(const Eigen::MatrixXd& M,
                                             const Eigen::VectorXd& weights, double lambda,
                                             double L) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and >= 0");
  }
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("L must be finite and > 0");
  const Index n = std::min(M.rows(), M.cols());
  if (weights.size() != n) {
    throw std::invalid_argument("expected " + std::to_string(n) + " weights, got " +
                                std::to_string(weights.size()));
  }
  for (Index r = 0; r < n; ++r) {
    if (!std::isfinite(weights(r)) || weights(r) < 0.0) {
      throw std::invalid_argument("weights must be finite and nonnegative");
    }
    if (r > 0 && weights(r) < weights(r - 1) - 1e-12 * std::max(1.0, weights(r - 1))) {
      throw std::invalid_argument("weights must be nondecreasing along the spectrum");
    }
  }

  Eigen::VectorXd shrunk;
  auto count = [&](const Eigen::VectorXd& s) {
    shrunk = (s - (lambda / L) * weights).cwiseMax(0.0);
    const double floor = s.size() > 0 ? kSnapRelative * s(0) : 0.0;
    Index k = 0;
    while (k < shrunk.size() && shrunk(k) > floor) ++k;
    return k;
  };
  ThinSvd svd;
  try {
    svd = leading_svd(M, count);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string("singular value thresholding: ") + e.what());
  }
  const Index k = svd.U.cols();
  return LowRankFactors{std::move(svd.U), shrunk.head(k), std::move(svd.V)};
}

Eigen::MatrixXd weighted_sv_threshold(const Eigen::MatrixXd& M, const Eigen::VectorXd& weights,
                                      double lambda, double L) {
  return weighted_sv_threshold_factors(M, weights, lambda, L).reconstruct();
}

double scalar_threshold(const PenaltySpec& spec, double sigma, double L) {
  spec.validate();
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!(L > 0.0)) throw std::invalid_argument("L must be > 0");
  switch (spec.family) {
    case PenaltyFamily::GDP: return gdp_threshold(spec, sigma, L);
    case PenaltyFamily::Nuclear: return std::max(0.0, sigma - spec.lambda / L);
    case PenaltyFamily::SCAD: return scad_threshold(spec, sigma, L);
    case PenaltyFamily::Lq: return lq_threshold(spec, sigma, L);
    case PenaltyFamily::ExactRank: break;
  }
  throw std::invalid_argument("no scalar threshold for the hard rank constraint");
}

std::vector<std::pair<double, double>> threshold_curve(const PenaltySpec& spec, double sigma_max,
                                                       int points, double L) {
  if (points < 2) throw std::invalid_argument("threshold curve needs at least 2 points");
  if (!(sigma_max > 0.0)) throw std::invalid_argument("sigma-max must be > 0");
  std::vector<std::pair<double, double>> curve;
  curve.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double sigma = sigma_max * static_cast<double>(i) / static_cast<double>(points - 1);
    curve.emplace_back(sigma, scalar_threshold(spec, sigma, L));
  }
  return curve;
}

}  // namespace lpca
