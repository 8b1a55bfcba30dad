#pragma once

#include <Eigen/Dense>

namespace lpca {

/// Binary observations with a missing-value mask. Observed entries are exactly
/// 0 or 1; missing entries carry mask 0 and a stored value of 0.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;

  /// All entries missing.
  BinaryMatrix(Eigen::Index rows, Eigen::Index cols);

  /// `values` with NaN marking missing entries; every other entry must be 0 or 1.
  static BinaryMatrix from_dense(const Eigen::MatrixXd& values);

  /// Fully observed 0/1 matrix.
  static BinaryMatrix fully_observed(const Eigen::MatrixXd& values);

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }

  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::MatrixXd& mask() const { return mask_; }

  bool observed(Eigen::Index i, Eigen::Index j) const { return mask_(i, j) != 0.0; }
  double value(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

  void set(Eigen::Index i, Eigen::Index j, double value);
  void set_missing(Eigen::Index i, Eigen::Index j);

  Eigen::Index observed_count() const;
  Eigen::Index ones_count() const;

  /// NaN for missing entries.
  Eigen::MatrixXd to_dense() const;

  /// Throws std::invalid_argument naming the first column without any
  /// observed entry.
  void require_observed_columns() const;

 private:
  Eigen::MatrixXd values_;
  Eigen::MatrixXd mask_;
};

}  // namespace lpca
