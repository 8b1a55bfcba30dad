#pragma once

#include <Eigen/Dense>

#include <functional>

namespace lpca {

using Index = Eigen::Index;

/// Rank-k factorization U·diag(s)·Vᵀ with orthonormal U (m×k) and V (n×k).
struct LowRankFactors {
  Eigen::MatrixXd U;
  Eigen::VectorXd s;
  Eigen::MatrixXd V;

  Index rank() const { return s.size(); }
  Eigen::MatrixXd reconstruct() const;
};

/// Thin SVD result. `s` holds all min(m, n) singular values in nonincreasing
/// order; U and V may hold fewer columns than `s` has entries when only a
/// leading block of singular vectors was requested.
struct ThinSvd {
  Eigen::MatrixXd U;
  Eigen::VectorXd s;
  Eigen::MatrixXd V;
};

/// Dense thin SVD. Each left singular vector is sign-normalized so that its
/// largest-magnitude entry is positive (the matching right vector is flipped
/// with it). Throws std::invalid_argument on non-finite input and
/// std::runtime_error if the decomposition fails.
ThinSvd thin_svd(const Eigen::MatrixXd& m);

/// Singular values of `m` together with the singular vectors of the first
/// `count_kept(s)` components.
///
/// For matrices whose smaller side is at least 24 the spectrum comes from the
/// symmetric eigendecomposition of the smaller Gram matrix, which is several
/// times cheaper than a full SVD. Squaring the matrix loses accuracy on small
/// singular values, so whenever a kept component has s_r < 1e-3·s_1 the
/// routine recomputes everything with `thin_svd`.
ThinSvd leading_svd(const Eigen::MatrixXd& m,
                    const std::function<Index(const Eigen::VectorXd&)>& count_kept);

/// Best rank-`rank` approximation (Eckart–Young) as factors. Components with a
/// zero singular value are dropped, so the result may have lower rank.
LowRankFactors best_rank_approximation(const Eigen::MatrixXd& m, Index rank);

Eigen::VectorXd column_means(const Eigen::MatrixXd& m);

/// J·m with J = I − (1/I)·11ᵀ, i.e. every column shifted to zero mean.
Eigen::MatrixXd column_centered(const Eigen::MatrixXd& m);

/// Singular values of `m` only (nonincreasing).
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m);

}  // namespace lpca
