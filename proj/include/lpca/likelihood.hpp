#pragma once

#include "lpca/binary_matrix.hpp"

#include <Eigen/Dense>

#include <string>
#include <string_view>

namespace lpca {

enum class Link { Logit, Probit };

std::string to_string(Link link);
Link parse_link(std::string_view name);

/// Natural parameters split as Θ = 1μᵀ + Z with column-centered Z.
struct NaturalParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Z;

  Eigen::MatrixXd theta() const;
  /// True when every column sum of Z is within `rel_tol`·‖Z‖_F of zero.
  bool centered(double rel_tol = 1e-8) const;
};

/// φ(θ) for one entry.
double inverse_link(double theta, Link link);
/// log φ(θ), accurate in both tails.
double log_inverse_link(double theta, Link link);

/// Elementwise φ(Θ).
Eigen::MatrixXd inverse_link(const Eigen::MatrixXd& theta, Link link);

/// −log p(x | θ) for one observed entry.
double entry_nll(double x, double theta, Link link);
/// d/dθ of `entry_nll`.
double entry_nll_derivative(double x, double theta, Link link);

/// −Σ w_ij [x_ij log φ(θ_ij) + (1 − x_ij) log(1 − φ(θ_ij))].
double neg_log_likelihood(const BinaryMatrix& X, const Eigen::MatrixXd& theta, Link link);
double neg_log_likelihood(const BinaryMatrix& X, const NaturalParams& params, Link link);

/// Unmasked gradient ∇f(Θ) (φ(Θ) − X for the logit link). Missing entries use
/// their stored value 0; apply W⊙ before use.
Eigen::MatrixXd nll_gradient(const BinaryMatrix& X, const Eigen::MatrixXd& theta, Link link);

/// NLL together with the masked gradient W⊙∇f(Θ), sharing one pass.
double nll_and_masked_gradient(const BinaryMatrix& X, const Eigen::MatrixXd& theta, Link link,
                               Eigen::MatrixXd& masked_gradient);

/// Uniform bound on the per-entry NLL second derivative: 0.25 for logit,
/// 1.0 for probit.
double lipschitz_bound(Link link);

}  // namespace lpca
