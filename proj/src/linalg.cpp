#include "lpca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lpca {

namespace {

constexpr Index kGramMinSide = 24;
constexpr double kGramRelativeFloor = 1e-3;

void normalize_signs(Eigen::MatrixXd& U, Eigen::MatrixXd& V) {
  for (Index r = 0; r < U.cols(); ++r) {
    Index arg = 0;
    U.col(r).cwiseAbs().maxCoeff(&arg);
    if (U(arg, r) < 0.0) {
      U.col(r) *= -1.0;
      V.col(r) *= -1.0;
    }
  }
}

void require_finite(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw std::invalid_argument("SVD input contains non-finite entries");
}

}  // namespace

Eigen::MatrixXd LowRankFactors::reconstruct() const {
  if (s.size() == 0) return Eigen::MatrixXd::Zero(U.rows(), V.rows());
  return U * s.asDiagonal() * V.transpose();
}

ThinSvd thin_svd(const Eigen::MatrixXd& m) {
  require_finite(m);
  ThinSvd out;
  const Index k = std::min(m.rows(), m.cols());
  if (k == 0) {
    out.U.resize(m.rows(), 0);
    out.V.resize(m.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw std::runtime_error("SVD failed on a " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + " matrix");
  }
  out.U = svd.matrixU();
  out.s = svd.singularValues();
  out.V = svd.matrixV();
  normalize_signs(out.U, out.V);
  return out;
}

ThinSvd leading_svd(const Eigen::MatrixXd& m,
                    const std::function<Index(const Eigen::VectorXd&)>& count_kept) {
  require_finite(m);
  const Index small_side = std::min(m.rows(), m.cols());
  auto exact = [&] {
    ThinSvd full = thin_svd(m);
    const Index k = std::clamp<Index>(count_kept(full.s), 0, full.s.size());
    full.U.conservativeResize(Eigen::NoChange, k);
    full.V.conservativeResize(Eigen::NoChange, k);
    return full;
  };
  if (small_side < kGramMinSide) return exact();

  const bool wide = m.rows() <= m.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(small_side, small_side);
  if (wide) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m);
  } else {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) return exact();

  ThinSvd out;
  out.s.resize(small_side);
  for (Index r = 0; r < small_side; ++r) {
    out.s(r) = std::sqrt(std::max(0.0, eig.eigenvalues()(small_side - 1 - r)));
  }
  const Index k = std::clamp<Index>(count_kept(out.s), 0, small_side);
  if (k > 0 && (out.s(k - 1) <= 0.0 || !(out.s(k - 1) >= kGramRelativeFloor * out.s(0)))) {
    return exact();
  }

  Eigen::MatrixXd basis(small_side, k);
  for (Index r = 0; r < k; ++r) basis.col(r) = eig.eigenvectors().col(small_side - 1 - r);
  const Eigen::VectorXd inv = out.s.head(k).cwiseInverse();
  if (wide) {
    out.U = std::move(basis);
    out.V = (m.transpose() * out.U) * inv.asDiagonal();
  } else {
    out.V = std::move(basis);
    out.U = (m * out.V) * inv.asDiagonal();
  }
  normalize_signs(out.U, out.V);
  return out;
}

LowRankFactors best_rank_approximation(const Eigen::MatrixXd& m, Index rank) {
  if (rank < 0) throw std::invalid_argument("rank must be nonnegative");
  if (rank == 0) {
    require_finite(m);
    return LowRankFactors{Eigen::MatrixXd(m.rows(), 0), Eigen::VectorXd(0),
                          Eigen::MatrixXd(m.cols(), 0)};
  }
  ThinSvd svd = leading_svd(m, [&](const Eigen::VectorXd& s) {
    Index k = std::min<Index>(rank, s.size());
    while (k > 0 && s(k - 1) <= 0.0) --k;
    return k;
  });
  const Index k = svd.U.cols();
  return LowRankFactors{std::move(svd.U), svd.s.head(k), std::move(svd.V)};
}

Eigen::VectorXd column_means(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return Eigen::VectorXd::Zero(m.cols());
  return m.colwise().mean().transpose();
}

Eigen::MatrixXd column_centered(const Eigen::MatrixXd& m) {
  return m.rowwise() - column_means(m).transpose();
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  require_finite(m);
  if (std::min(m.rows(), m.cols()) == 0) return {};
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues();
}

}  // namespace lpca
