#pragma once

#include <string>
#include <vector>

namespace mpadnn::grid {

struct GeneratorSpec {
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp_up = 0.0;
  double ramp_down = 0.0;
  // Linear cost coefficients, currency/MWh. Either one entry (constant in
  // time) or one per period; cost_at() broadcasts.
  std::vector<double> cost;

  double cost_at(int t) const {
    return cost.size() == 1 ? cost[0] : cost[static_cast<std::size_t>(t)];
  }
};

struct LineSpec {
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;  // p.u.
  double flow_limit = 0.0; // MW
};

struct LoadSpec {
  int bus = 0;
  double p_nominal = 0.0;  // MW, used to anchor demand profiles
};

struct EssSpec {
  int bus = 0;
  double p_ch_max = 0.0;
  double p_dis_max = 0.0;
  double eta_ch = 1.0;
  double eta_dis = 1.0;
  double e_min = 0.0;
  double e_max = 0.0;
  double e_init_frac = 0.5;

  double e_init() const { return e_init_frac * e_max; }
};

// Static network description. Immutable after load; safe to share across
// threads. Bus indices are 0-based internally (case files use 1-based ids).
struct GridCase {
  std::string name;
  double base_mva = 100.0;
  int n_b = 0;
  int slack_bus = 0;
  std::vector<GeneratorSpec> generators;
  std::vector<LineSpec> lines;
  std::vector<LoadSpec> loads;
  std::vector<EssSpec> ess_units;
  std::string fingerprint;  // hash of the source file bytes

  int n_g() const { return static_cast<int>(generators.size()); }
  int n_d() const { return static_cast<int>(loads.size()); }
  int n_l() const { return static_cast<int>(lines.size()); }
  int n_e() const { return static_cast<int>(ess_units.size()); }

  double total_nominal_load() const;
  double total_p_max() const;
};

GridCase load_case(const std::string& path);
GridCase parse_case(const std::string& text, const std::string& origin);
void validate_case(const GridCase& c);

}  // namespace mpadnn::grid
