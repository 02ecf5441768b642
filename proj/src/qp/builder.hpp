#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "grid/case.hpp"
#include "grid/network.hpp"
#include "qp/layout.hpp"

namespace mpadnn::qp {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// One demand scenario: MW per (load, period).
struct DemandScenario {
  Eigen::MatrixXd p_d;  // n_d x T

  int horizon() const { return static_cast<int>(p_d.cols()); }
  double total_at(int t) const { return p_d.col(t).sum(); }
};

// Block selectors and time-coupling matrices used by the constraint builder.
struct SelectionMatrices {
  SpMat u_g, u_ch, u_dis;     // block selectors on one period (width p)
  SpMat v_g, v_ch, v_dis;     // time-replicated: I_T kron U
  SpMat d;                    // (T-1) x T forward difference
  SpMat s;                    // T x T unit lower-triangular ones

  static SelectionMatrices build(const DecisionLayout& layout);
};

enum class RowFamily {
  GenUpper,
  GenLower,
  ChargeUpper,
  ChargeLower,
  DischargeUpper,
  DischargeLower,
  RampUp,
  RampDown,
  SocUpper,
  SocLower,
  LineUpper,
  LineLower,
};

enum class EqFamily {
  Balance,
  TerminalSoc,
};

const char* family_name(RowFamily f);
const char* family_name(EqFamily f);

struct RowRange {
  int begin = 0;
  int end = 0;  // half-open
  int count() const { return end - begin; }
  bool contains(int r) const { return r >= begin && r < end; }
};

struct BuildOptions {
  bool line_limits = true;    // enforce line-flow rows
  bool soc_coupling = true;   // SoC bounds + terminal SoC (off for single-period sets)
};

// Demand-independent part of the feasible region; shared across scenarios.
struct StaticConstraints {
  DecisionLayout layout;
  BuildOptions opts;
  SpMat a_mat;                                  // n_eq x pT
  SpMat g_mat;                                  // q x pT
  Eigen::VectorXd h_static;                     // q; line rows hold only the limit part
  std::array<RowRange, 12> row_labels;          // indexed by RowFamily
  std::array<RowRange, 2> eq_labels;            // indexed by EqFamily
  Eigen::MatrixXd line_to_load;                 // n_l x n_d = phi * m_d (demand -> flow offset)
  int n_eq = 0;
  int q = 0;

  const RowRange& range(RowFamily f) const { return row_labels[static_cast<std::size_t>(f)]; }
  const RowRange& range(EqFamily f) const { return eq_labels[static_cast<std::size_t>(f)]; }
};

// Feasible-region matrices for one scenario. The sparse matrices live in the
// shared static part; b and h are per-scenario.
struct QpData {
  std::shared_ptr<const StaticConstraints> statics;
  Eigen::VectorXd b_vec;  // n_eq
  Eigen::VectorXd h_vec;  // q

  const SpMat& a_mat() const { return statics->a_mat; }
  const SpMat& g_mat() const { return statics->g_mat; }
  const DecisionLayout& layout() const { return statics->layout; }
  const std::array<RowRange, 12>& row_labels() const { return statics->row_labels; }
  int n_eq() const { return statics->n_eq; }
  int q() const { return statics->q; }
  int n() const { return statics->layout.size(); }

  void dump(std::ostream& os) const;  // sparse triplets + labeled ranges
};

// Assembles the static structure once, then stamps per-scenario right-hand
// sides. Immutable after construction; safe to share across threads.
class QpBuilder {
 public:
  QpBuilder(const grid::GridCase& c, const grid::GsfMatrix& gsf, const grid::IncidenceMaps& maps,
            int horizon, BuildOptions opts = {});

  QpData build(const DemandScenario& demand) const;
  const StaticConstraints& statics() const { return *statics_; }
  const DecisionLayout& layout() const { return statics_->layout; }
  const grid::GridCase& grid_case() const { return *case_ref_; }

 private:
  std::shared_ptr<const grid::GridCase> case_ref_;
  std::shared_ptr<const StaticConstraints> statics_;
};

// Spec-level entry points; each assembles from scratch.
std::pair<SpMat, Eigen::VectorXd> build_equalities(const grid::GridCase& c,
                                                   const DemandScenario& demand,
                                                   BuildOptions opts = {});
std::tuple<SpMat, Eigen::VectorXd, std::array<RowRange, 12>> build_inequalities(
    const grid::GridCase& c, const DemandScenario& demand, const grid::GsfMatrix& gsf,
    const grid::IncidenceMaps& maps, BuildOptions opts = {});

// SoC trajectory e (n_e x T) from a decision matrix: e_t = e_{t-1}
// + eta_ch .* ch_t - dis_t ./ eta_dis, starting at e_init.
Eigen::MatrixXd soc_trajectory(const Eigen::MatrixXd& x, const grid::GridCase& c,
                               const DecisionLayout& layout);

}  // namespace mpadnn::qp
