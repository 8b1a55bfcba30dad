#pragma once

#include "lpca/binary_matrix.hpp"
#include "lpca/likelihood.hpp"
#include "lpca/linalg.hpp"
#include "lpca/penalty.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace lpca {

struct FitDiagnostics {
  /// f⁰ (initial point) followed by the objective after every MM update.
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  double final_objective = 0.0;
  /// Set when the exact-rank divergence guard clipped a singular value.
  bool capped = false;
};

/// Fitted model: offset μ and Z = U·diag(S)·Vᵀ with U, V orthonormal and S
/// strictly positive, nonincreasing.
struct LpcaModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd U;
  Eigen::VectorXd S;
  Eigen::MatrixXd V;
  Link link = Link::Logit;
  PenaltySpec penalty;
  FitDiagnostics diagnostics;

  Index rows() const { return U.rows(); }
  Index cols() const { return V.rows(); }
  Index rank() const { return S.size(); }

  Eigen::MatrixXd Z() const;
  Eigen::MatrixXd theta() const;
  /// θ̂_ij without forming the full matrix.
  double theta_at(Index i, Index j) const;
};

struct RandomInit {
  std::uint64_t seed = 0;
};

struct WarmInit {
  std::shared_ptr<const LpcaModel> model;
};

struct UserInit {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Z;
};

using Initialization = std::variant<RandomInit, WarmInit, UserInit>;

struct FitConfig {
  double eps_f = 1e-6;
  int max_iter = 500;
  Link link = Link::Logit;
  Initialization init = RandomInit{};

  void validate() const;
};

/// Singular values of Ẑ are clipped here for the exact-rank baseline.
inline constexpr double kExactRankCap = 1e6;

/// Monotone MM fit of the penalized logistic (or probit) PCA model.
///
/// Every iteration forms H = Θ − (1/L)·W⊙∇f(Θ), sets μ to the column means of
/// H and Z to the weighted singular value thresholding of the centered H with
/// weights linearized at the previous spectrum. ExactRank replaces the
/// thresholding by a rank-R truncated SVD. Iteration stops once
/// (f^{k−1} − f^k)/(|f^{k−1}| + 1e−10) ≤ eps_f or after max_iter updates.
///
/// Throws std::invalid_argument for invalid inputs and std::runtime_error if
/// the objective becomes non-finite.
LpcaModel fit(const BinaryMatrix& X, const PenaltySpec& spec, const FitConfig& cfg);

/// Runs one trajectory and snapshots the model at the first iteration where
/// each tolerance in `tolerances` is met; element t equals what
/// `fit` would return with eps_f = tolerances[t]. `cfg.eps_f` is ignored.
std::vector<LpcaModel> fit_tolerance_ladder(const BinaryMatrix& X, const PenaltySpec& spec,
                                            const FitConfig& cfg,
                                            const std::vector<double>& tolerances);

/// NLL + penalty term at the model's parameters, using `model.link`.
double objective(const BinaryMatrix& X, const LpcaModel& model, const PenaltySpec& spec);

struct Decomposition {
  Eigen::MatrixXd scores;    // A = U
  Eigen::MatrixXd loadings;  // B = V·diag(S)
};

Decomposition decompose(const LpcaModel& model);

}  // namespace lpca
