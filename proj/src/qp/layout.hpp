#pragma once

#include <Eigen/Dense>

#include "common.hpp"

namespace mpadnn::qp {

// Stacked decision variable layout. Each period contributes a block
// [generation (n_g), charge (n_e), discharge (n_e)] of width p; periods are
// stacked t = 0..T-1 (column-wise stacking of the p x T matrix).
struct DecisionLayout {
  int n_g = 0;
  int n_e = 0;
  int T = 0;

  int p() const { return n_g + 2 * n_e; }
  int size() const { return p() * T; }

  int gen_index(int t, int g) const { return t * p() + g; }
  int charge_index(int t, int e) const { return t * p() + n_g + e; }
  int discharge_index(int t, int e) const { return t * p() + n_g + n_e + e; }
};

inline Eigen::VectorXd vectorize(const Eigen::MatrixXd& x, const DecisionLayout& layout) {
  if (x.rows() != layout.p() || x.cols() != layout.T)
    throw dimension_error("vectorize: expected " + std::to_string(layout.p()) + "x" +
                          std::to_string(layout.T) + " decision, got " + std::to_string(x.rows()) +
                          "x" + std::to_string(x.cols()));
  return Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
}

inline Eigen::MatrixXd devectorize(const Eigen::VectorXd& v, const DecisionLayout& layout) {
  if (v.size() != layout.size())
    throw dimension_error("devectorize: expected length " + std::to_string(layout.size()) +
                          ", got " + std::to_string(v.size()));
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), layout.p(), layout.T);
}

}  // namespace mpadnn::qp
