#pragma once

#include "lpca/linalg.hpp"

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lpca {

enum class PenaltyFamily { GDP, Nuclear, SCAD, Lq, ExactRank };

std::string to_string(PenaltyFamily family);

/// Accepts "gdp", "nuclear", "scad", "lq" and "exact" (case-insensitive).
PenaltyFamily parse_penalty_family(std::string_view name);

/// Penalty family plus its hyper-parameters. ExactRank uses only `rank`; every
/// other family ignores it.
struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::GDP;
  double lambda = 0.0;
  double gamma = 1.0;  // GDP scale
  double a = 3.7;      // SCAD shape
  double q = 0.5;      // L_q exponent
  int rank = 0;        // ExactRank target rank

  /// Throws std::invalid_argument when a parameter violates its range.
  void validate() const;

  PenaltySpec with_lambda(double value) const {
    PenaltySpec copy = *this;
    copy.lambda = value;
    return copy;
  }

  static PenaltySpec gdp(double lambda, double gamma = 1.0);
  static PenaltySpec nuclear(double lambda);
  static PenaltySpec scad(double lambda, double a = 3.7);
  static PenaltySpec lq(double lambda, double q);
  static PenaltySpec exact_rank(int rank);
};

/// Smoothing floor for the L_q supergradient at zero.
inline constexpr double kLqSmoothing = 1e-8;

/// Thresholded singular values below this fraction of s_1 are set to zero.
inline constexpr double kSnapRelative = 1e-12;

/// Nonincreasing vector of nonnegative reals.
class SingularSpectrum {
 public:
  SingularSpectrum() = default;
  /// Throws std::invalid_argument if an entry is negative, non-finite or out
  /// of order.
  explicit SingularSpectrum(Eigen::VectorXd values);

  /// `values` followed by zeros up to `length` entries.
  static SingularSpectrum padded(const Eigen::VectorXd& values, Index length);

  const Eigen::VectorXd& values() const { return values_; }
  Index size() const { return values_.size(); }

 private:
  Eigen::VectorXd values_;
};

/// Σ_r g(σ_r). GDP, Nuclear and L_q exclude the outer λ; SCAD returns P_λ with
/// λ inside. Throws for ExactRank.
double penalty_value(const PenaltySpec& spec, const SingularSpectrum& sigma);

/// λ-scaled penalty as it enters the objective (λ·g for GDP/Nuclear/L_q, P_λ
/// for SCAD, 0 for ExactRank).
double penalty_term(const PenaltySpec& spec, const SingularSpectrum& sigma);

/// Weights w_r of the linearized penalty λ·Σ_r w_r σ_r at `sigma_k`.
/// Nondecreasing in r because every supported g has a nonincreasing
/// derivative.
Eigen::VectorXd supergradient_weights(const PenaltySpec& spec, const SingularSpectrum& sigma_k);

/// Solution of min_Z (L/2)‖Z − M‖_F² + λ Σ_r w_r σ_r(Z) as factors; only the
/// components with a positive thresholded value are kept.
///
/// `weights` must have min(rows, cols) entries and be nondecreasing, which is
/// the ordering under which the singular-value shrinkage
/// max(0, s_r − λ w_r / L) is the global minimizer.
LowRankFactors weighted_sv_threshold_factors(const Eigen::MatrixXd& M,
                                             const Eigen::VectorXd& weights, double lambda,
                                             double L);

Eigen::MatrixXd weighted_sv_threshold(const Eigen::MatrixXd& M, const Eigen::VectorXd& weights,
                                      double lambda, double L);

/// Exact scalar proximal map argmin_{z ≥ 0} (L/2)(z − σ)² + λ g(z) (P_λ(z)
/// for SCAD). This is the thresholding function plotted as η against σ.
double scalar_threshold(const PenaltySpec& spec, double sigma, double L = 1.0);

/// `points` evenly spaced σ in [0, sigma_max] paired with their thresholded η.
std::vector<std::pair<double, double>> threshold_curve(const PenaltySpec& spec, double sigma_max,
                                                       int points, double L = 1.0);

}  // namespace lpca
