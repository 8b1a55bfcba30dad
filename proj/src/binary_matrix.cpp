#include "lpca/binary_matrix.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lpca {

BinaryMatrix::BinaryMatrix(Eigen::Index rows, Eigen::Index cols)
    : values_(Eigen::MatrixXd::Zero(rows, cols)), mask_(Eigen::MatrixXd::Zero(rows, cols)) {}

BinaryMatrix BinaryMatrix::from_dense(const Eigen::MatrixXd& values) {
  BinaryMatrix out(values.rows(), values.cols());
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      const double v = values(i, j);
      if (std::isnan(v)) continue;
      out.set(i, j, v);
    }
  }
  return out;
}

BinaryMatrix BinaryMatrix::fully_observed(const Eigen::MatrixXd& values) {
  if (values.hasNaN()) throw std::invalid_argument("fully observed matrix contains NaN");
  return from_dense(values);
}

void BinaryMatrix::set(Eigen::Index i, Eigen::Index j, double value) {
  if (value != 0.0 && value != 1.0) {
    throw std::invalid_argument("binary entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                ") is " + std::to_string(value) + ", expected 0 or 1");
  }
  values_(i, j) = value;
  mask_(i, j) = 1.0;
}

void BinaryMatrix::set_missing(Eigen::Index i, Eigen::Index j) {
  values_(i, j) = 0.0;
  mask_(i, j) = 0.0;
}

Eigen::Index BinaryMatrix::observed_count() const {
  return static_cast<Eigen::Index>(mask_.sum());
}

Eigen::Index BinaryMatrix::ones_count() const {
  return static_cast<Eigen::Index>(values_.cwiseProduct(mask_).sum());
}

Eigen::MatrixXd BinaryMatrix::to_dense() const {
  Eigen::MatrixXd out = values_;
  for (Eigen::Index j = 0; j < cols(); ++j) {
    for (Eigen::Index i = 0; i < rows(); ++i) {
      if (!observed(i, j)) out(i, j) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

void BinaryMatrix::require_observed_columns() const {
  for (Eigen::Index j = 0; j < cols(); ++j) {
    if (mask_.col(j).sum() == 0.0) {
      throw std::invalid_argument("column " + std::to_string(j) +
                                  " has no observed entries; its offset is unidentifiable");
    }
  }
}

}  // namespace lpca
