#pragma once

#include <Eigen/Dense>
#include <optional>

#include "grid/case.hpp"
#include "nn/mlp.hpp"
#include "qp/builder.hpp"

namespace testsupport {

// Central finite differences of the projection map z -> P(z), column by
// column. Independent of the analytic sensitivity path.
Eigen::MatrixXd fd_projection_jacobian(const mpadnn::qp::QpData& data, const Eigen::VectorXd& z,
                                       double step);

// Flows on a tree network from depth-first subtree accounting: the flow on a
// line (from -> to positive) equals the total injection hanging off its
// from-side when the line is cut. Requires n_l == n_b - 1 and sum(inj) == 0.
Eigen::VectorXd tree_flows(const mpadnn::grid::GridCase& c, const Eigen::VectorXd& injections);

struct VertexSolution {
  double objective = 0.0;
  Eigen::VectorXd x;
  double runner_up_gap = 0.0;  // objective margin to the best distinct vertex
  long vertices_checked = 0;
};

// Brute-force vertex enumeration for min cost'x s.t. Ax = b, Gx <= h on small
// dense instances. Every choice of (n - rank A) inequality rows is tried as an
// active set. Returns nullopt when no feasible vertex exists.
std::optional<VertexSolution> enumerate_vertices(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                                 const Eigen::MatrixXd& g, const Eigen::VectorXd& h,
                                                 const Eigen::VectorXd& cost);

// Straight-line reference forward pass (loops, no Eigen expressions) for
// cross-checking the production implementation.
Eigen::VectorXd naive_mlp_forward(const mpadnn::nn::MlpParams& params,
                                  const Eigen::VectorXd& input);

}  // namespace testsupport
