#include "grid/case.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "common.hpp"

namespace mpadnn::grid {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

struct LineCtx {
  const std::string& origin;
  int line_no;
  std::string at() const { return origin + ":" + std::to_string(line_no); }
};

double parse_num(const std::string& tok, const LineCtx& ctx, const char* field) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw parse_error(ctx.at() + ": field '" + std::string(field) + "': not a number: '" + tok + "'");
  }
  if (pos != tok.size() || !std::isfinite(v))
    throw parse_error(ctx.at() + ": field '" + std::string(field) + "': not a finite number: '" + tok + "'");
  return v;
}

int parse_bus(const std::string& tok, const LineCtx& ctx, const char* field) {
  double v = parse_num(tok, ctx, field);
  int b = static_cast<int>(v);
  if (static_cast<double>(b) != v || b < 1)
    throw parse_error(ctx.at() + ": field '" + std::string(field) + "': expected 1-based bus id, got '" + tok + "'");
  return b - 1;  // to 0-based
}

}  // namespace

double GridCase::total_nominal_load() const {
  double s = 0.0;
  for (const auto& l : loads) s += l.p_nominal;
  return s;
}

double GridCase::total_p_max() const {
  double s = 0.0;
  for (const auto& g : generators) s += g.p_max;
  return s;
}

GridCase parse_case(const std::string& text, const std::string& origin) {
  GridCase c;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  bool have_count = false;

  while (std::getline(in, raw)) {
    ++line_no;
    LineCtx ctx{origin, line_no};
    std::string line = raw;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw parse_error(ctx.at() + ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "case" && section != "buses" && section != "generators" &&
          section != "lines" && section != "loads" && section != "ess")
        throw parse_error(ctx.at() + ": unknown section '" + section + "'");
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string::npos) throw parse_error(ctx.at() + ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::vector<std::string> val = tokens(trim(line.substr(eq + 1)));
    if (section.empty()) throw parse_error(ctx.at() + ": key '" + key + "' outside any section");
    if (val.empty()) throw parse_error(ctx.at() + ": key '" + key + "' has no value");

    if (section == "case") {
      if (key == "name") {
        c.name = val[0];
      } else if (key == "base_mva") {
        c.base_mva = parse_num(val[0], ctx, "base_mva");
      } else {
        throw parse_error(ctx.at() + ": unknown key '" + key + "' in [case]");
      }
    } else if (section == "buses") {
      if (key == "count") {
        c.n_b = static_cast<int>(parse_num(val[0], ctx, "count"));
        have_count = true;
      } else if (key == "slack") {
        c.slack_bus = parse_bus(val[0], ctx, "slack");
      } else {
        throw parse_error(ctx.at() + ": unknown key '" + key + "' in [buses]");
      }
    } else if (section == "generators") {
      if (key != "gen") throw parse_error(ctx.at() + ": unknown key '" + key + "' in [generators]");
      if (val.size() < 6)
        throw parse_error(ctx.at() + ": gen needs 'bus p_min p_max ramp_up ramp_down cost...', got " +
                          std::to_string(val.size()) + " fields");
      GeneratorSpec g;
      g.bus = parse_bus(val[0], ctx, "gen.bus");
      g.p_min = parse_num(val[1], ctx, "gen.p_min");
      g.p_max = parse_num(val[2], ctx, "gen.p_max");
      g.ramp_up = parse_num(val[3], ctx, "gen.ramp_up");
      g.ramp_down = parse_num(val[4], ctx, "gen.ramp_down");
      for (std::size_t i = 5; i < val.size(); ++i) g.cost.push_back(parse_num(val[i], ctx, "gen.cost"));
      c.generators.push_back(std::move(g));
    } else if (section == "lines") {
      if (key != "line") throw parse_error(ctx.at() + ": unknown key '" + key + "' in [lines]");
      if (val.size() != 4)
        throw parse_error(ctx.at() + ": line needs 'from to reactance flow_limit'");
      LineSpec l;
      l.from_bus = parse_bus(val[0], ctx, "line.from");
      l.to_bus = parse_bus(val[1], ctx, "line.to");
      l.reactance = parse_num(val[2], ctx, "line.reactance");
      l.flow_limit = parse_num(val[3], ctx, "line.flow_limit");
      c.lines.push_back(l);
    } else if (section == "loads") {
      if (key != "load") throw parse_error(ctx.at() + ": unknown key '" + key + "' in [loads]");
      if (val.size() != 2) throw parse_error(ctx.at() + ": load needs 'bus p_nominal'");
      LoadSpec l;
      l.bus = parse_bus(val[0], ctx, "load.bus");
      l.p_nominal = parse_num(val[1], ctx, "load.p_nominal");
      c.loads.push_back(l);
    } else if (section == "ess") {
      if (key != "ess") throw parse_error(ctx.at() + ": unknown key '" + key + "' in [ess]");
      if (val.size() != 8)
        throw parse_error(ctx.at() +
                          ": ess needs 'bus p_ch_max p_dis_max eta_ch eta_dis e_min e_max e_init_frac'");
      EssSpec e;
      e.bus = parse_bus(val[0], ctx, "ess.bus");
      e.p_ch_max = parse_num(val[1], ctx, "ess.p_ch_max");
      e.p_dis_max = parse_num(val[2], ctx, "ess.p_dis_max");
      e.eta_ch = parse_num(val[3], ctx, "ess.eta_ch");
      e.eta_dis = parse_num(val[4], ctx, "ess.eta_dis");
      e.e_min = parse_num(val[5], ctx, "ess.e_min");
      e.e_max = parse_num(val[6], ctx, "ess.e_max");
      e.e_init_frac = parse_num(val[7], ctx, "ess.e_init_frac");
      c.ess_units.push_back(e);
    }
  }

  if (!have_count) throw parse_error(origin + ": missing [buses] count");
  validate_case(c);
  return c;
}

GridCase load_case(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open case file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  std::string text = ss.str();
  GridCase c = parse_case(text, path);
  c.fingerprint = fnv1a64_hex(text.data(), text.size());
  return c;
}

void validate_case(const GridCase& c) {
  auto fail = [](const std::string& what) { throw validation_error("case validation: " + what); };

  if (c.n_b < 1) fail("bus count must be >= 1");
  if (c.generators.empty()) fail("at least one generator required (n_g >= 1)");
  if (c.loads.empty()) fail("at least one load required (n_d >= 1)");
  if (c.slack_bus < 0 || c.slack_bus >= c.n_b) fail("slack bus out of range");

  auto check_bus = [&](int bus, const std::string& who) {
    if (bus < 0 || bus >= c.n_b) fail(who + ": bus index out of range [0, n_b)");
  };

  for (std::size_t i = 0; i < c.generators.size(); ++i) {
    const auto& g = c.generators[i];
    std::string who = "generator " + std::to_string(i + 1);
    check_bus(g.bus, who);
    if (g.p_min < 0.0 || g.p_min > g.p_max) fail(who + ": requires 0 <= p_min <= p_max");
    if (g.ramp_up < 0.0 || g.ramp_down < 0.0) fail(who + ": ramp limits must be >= 0");
    if (g.cost.empty()) fail(who + ": missing cost coefficients");
    for (double cv : g.cost)
      if (cv < 0.0) fail(who + ": cost entries must be >= 0");
  }
  for (std::size_t i = 0; i < c.lines.size(); ++i) {
    const auto& l = c.lines[i];
    std::string who = "line " + std::to_string(i + 1);
    check_bus(l.from_bus, who);
    check_bus(l.to_bus, who);
    if (l.from_bus == l.to_bus) fail(who + ": from_bus must differ from to_bus");
    if (!(l.reactance > 0.0)) fail(who + ": reactance must be > 0");
    if (!(l.flow_limit > 0.0)) fail(who + ": flow_limit must be > 0");
  }
  for (std::size_t i = 0; i < c.loads.size(); ++i) {
    check_bus(c.loads[i].bus, "load " + std::to_string(i + 1));
    if (c.loads[i].p_nominal < 0.0) fail("load " + std::to_string(i + 1) + ": p_nominal must be >= 0");
  }
  for (std::size_t i = 0; i < c.ess_units.size(); ++i) {
    const auto& e = c.ess_units[i];
    std::string who = "ess " + std::to_string(i + 1);
    check_bus(e.bus, who);
    if (!(e.eta_ch > 0.0 && e.eta_ch <= 1.0)) fail(who + ": eta_ch must be in (0, 1]");
    if (!(e.eta_dis > 0.0 && e.eta_dis <= 1.0)) fail(who + ": eta_dis must be in (0, 1]");
    if (e.e_min < 0.0 || !(e.e_min < e.e_max)) fail(who + ": requires 0 <= e_min < e_max");
    if (e.p_ch_max < 0.0 || e.p_dis_max < 0.0) fail(who + ": power limits must be >= 0");
    if (e.e_init_frac < 0.0 || e.e_init_frac > 1.0) fail(who + ": e_init_frac must be in [0, 1]");
    double e0 = e.e_init();
    if (e0 < e.e_min || e0 > e.e_max) fail(who + ": initial energy outside [e_min, e_max]");
  }
}

}  // namespace mpadnn::grid
