#pragma once

#include <Eigen/Dense>

#include "grid/case.hpp"

namespace mpadnn::grid {

// Generation shift factor (PTDF) matrix: flows = phi * (net nodal injections),
// flow sign positive in the from->to direction. Slack column is all zeros.
struct GsfMatrix {
  Eigen::MatrixXd phi;  // n_l x n_b
};

// 0/1 maps from device index to bus: column j of m_g is the unit vector of
// generator j's bus, and likewise for loads and ESS units.
struct IncidenceMaps {
  Eigen::MatrixXd m_g;  // n_b x n_g
  Eigen::MatrixXd m_d;  // n_b x n_d
  Eigen::MatrixXd m_e;  // n_b x n_e
};

GsfMatrix compute_gsf(const GridCase& c);
IncidenceMaps build_incidence(const GridCase& c);

}  // namespace mpadnn::grid
