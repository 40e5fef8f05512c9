#include "flexbc/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace flexbc {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double x = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size())
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  int x = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

ExperimentKind to_kind(const std::string& v) {
  const std::string t = trim(v);
  if (t == "point_force") return ExperimentKind::point_force;
  if (t == "microcrack") return ExperimentKind::microcrack;
  if (t == "fig5") return ExperimentKind::fig5;
  throw ConfigError("key 'kind': unknown experiment kind '" + v + "'");
}

// "microcrack", "none" or "i,j; i,j; ..."
void apply_defect(ExperimentSpec& s, const std::string& v) {
  const std::string t = trim(v);
  s.defect.vacancies.clear();
  if (t == "microcrack") {
    s.default_defect = true;
    return;
  }
  s.default_defect = false;
  if (t == "none") return;
  for (const auto& pair : split(t, ';')) {
    const auto ij = split(pair, ',');
    if (ij.size() != 2) throw ConfigError("key 'geometry.defect': bad site '" + pair + "'");
    s.defect.vacancies.push_back({to_int("geometry.defect", ij[0]), to_int("geometry.defect", ij[1])});
  }
}

void apply_key(ExperimentSpec& s, const std::string& key, const std::string& v) {
  if (key == "kind") return;  // handled first
  if (key == "geometry.r_a") s.r_a = to_double(key, v);
  else if (key == "geometry.r") s.r = to_double(key, v);
  else if (key == "geometry.defect") apply_defect(s, v);
  else if (key == "model.D") s.morse.D = to_double(key, v);
  else if (key == "model.a") s.morse.a = to_double(key, v);
  else if (key == "model.r0") s.morse.r0 = to_double(key, v);
  else if (key == "model.ell") s.ell = to_double(key, v);
  else if (key == "model.shells") s.shells = to_int(key, v);
  else if (key == "load") s.load = to_double(key, v);
  else if (key == "boundary") {
    const std::string t = trim(v);
    if (t == "zero") s.boundary = OuterBoundary::zero;
    else if (t == "lattice_gf") s.boundary = OuterBoundary::lattice_gf;
    else if (t == "continuum_log") s.boundary = OuterBoundary::continuum_log;
    else throw ConfigError("key 'boundary': unknown value '" + v + "'");
  } else if (key == "solver.variants") s.variants = split(v, ',');
  else if (key == "solver.schedule") s.opts.schedule = parse_schedule(v);
  else if (key == "solver.max_iter") s.opts.max_iter = to_int(key, v);
  else if (key == "solver.initial_guess") s.opts.use_initial_guess = to_bool(key, v);
  else if (key == "solver.predictor") s.opts.predictor = to_bool(key, v);
  else if (key == "solver.fit_stages") s.opts.fit_stages = to_int(key, v);
  else if (key == "solver.fit_skip") s.opts.fit_skip = to_int(key, v);
  else if (key == "solver.divergence_window") s.opts.divergence_window = to_int(key, v);
  else if (key == "solver.inner") {
    const std::string t = trim(v);
    if (t == "newton") s.opts.inner.method = MinimizerKind::newton;
    else if (t == "cg") s.opts.inner.method = MinimizerKind::cg;
    else throw ConfigError("key 'solver.inner': unknown minimiser '" + v + "'");
  } else if (key == "reference.enabled") s.reference = to_bool(key, v);
  else if (key == "reference.r") s.r_ref = to_double(key, v);
  else if (key == "reference.tol") s.ref_tol = to_double(key, v);
  else if (key == "scan.M") s.scan_M = to_int(key, v);
  else if (key == "scan.points") s.scan_points = to_int(key, v);
  else if (key == "scan.k1") s.scan_k1 = to_double(key, v);
  else if (key == "scan.lo") s.scan_lo = to_double(key, v);
  else if (key == "scan.hi") s.scan_hi = to_double(key, v);
  else if (key == "green.grid") s.gf.grid = to_int(key, v);
  else if (key == "green.cache") s.gf.use_cache = to_bool(key, v);
  else if (key == "seed") s.seed = static_cast<unsigned>(to_int(key, v));
  else throw ConfigError("unknown key '" + key + "'");
}

void validate(const ExperimentSpec& s) {
  auto need = [&](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("experiment '" + s.name + "', key '" + key + "': " + what);
  };
  need(s.r_a > 0, "geometry.r_a", "must be positive");
  if (s.kind == ExperimentKind::point_force) need(s.r > s.r_a, "geometry.r", "must exceed geometry.r_a");
  need(s.morse.D > 0, "model.D", "must be positive");
  need(s.morse.a > 0, "model.a", "must be positive");
  need(s.morse.r0 > 0, "model.r0", "must be positive");
  need(s.ell > 0, "model.ell", "must be positive");
  need(s.shells >= 1, "model.shells", "must be at least 1");
  need(s.opts.max_iter >= 1, "solver.max_iter", "must be at least 1");
  need(s.opts.fit_stages >= 1, "solver.fit_stages", "must be at least 1");
  need(s.r_ref > s.r_a, "reference.r", "must exceed geometry.r_a");
  need(s.ref_tol > 0, "reference.tol", "must be positive");
  need(s.scan_M >= 1, "scan.M", "must be at least 1");
  need(s.scan_points >= 1, "scan.points", "must be at least 1");
  need(s.scan_k1 > 0, "scan.k1", "must be positive");
  need(s.scan_lo < s.scan_hi, "scan.hi", "must exceed scan.lo");
  need(s.gf.grid >= 8, "green.grid", "must be at least 8");
  if (s.kind == ExperimentKind::point_force)
    need(s.default_defect || s.defect.vacancies.empty(), "geometry.defect",
         "vacancies are not supported with the linearised point-force model");
  for (const auto& v : s.variants) {
    const bool ok = s.kind == ExperimentKind::point_force ? (v == "sinc" || v == "relax")
                  : s.kind == ExperimentKind::microcrack  ? (v == "sinc" || v == "dyn1" || v == "dyn2")
                                                          : false;
    need(ok, "solver.variants", "unknown variant '" + v + "'");
  }
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "kind",           "geometry.r_a",       "geometry.r",         "geometry.defect",
      "model.D",        "model.a",            "model.r0",           "model.ell",
      "model.shells",   "load",               "boundary",           "solver.variants",
      "solver.schedule", "solver.max_iter",   "solver.initial_guess", "solver.predictor",
      "solver.fit_stages", "solver.fit_skip", "solver.divergence_window", "solver.inner",
      "reference.enabled", "reference.r",     "reference.tol",      "scan.M",
      "scan.points",    "scan.k1",            "scan.lo",            "scan.hi",
      "green.grid",     "green.cache",        "seed"};
  return keys;
}

ToleranceSchedule parse_schedule(const std::string& s) {
  if (trim(s) == "default") return default_schedule();
  ToleranceSchedule out;
  for (const auto& item : split(s, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw ConfigError("key 'solver.schedule': bad pair '" + item + "'");
    out.emplace_back(to_double("solver.schedule", parts[0]), to_double("solver.schedule", parts[1]));
  }
  if (out.empty()) throw ConfigError("key 'solver.schedule': empty schedule");
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!(out[k].first > 0 && out[k].second > 0))
      throw ConfigError("key 'solver.schedule': tolerances must be positive");
    if (k > 0 && !(out[k].first < out[k - 1].first && out[k].second < out[k - 1].second))
      throw ConfigError("key 'solver.schedule': must be strictly decreasing");
  }
  return out;
}

ExperimentSpec default_spec(ExperimentKind kind) {
  ExperimentSpec s;
  s.kind = kind;
  switch (kind) {
    case ExperimentKind::point_force:
      s.r_a = 5.0;
      s.r = 50.0;
      s.default_defect = false;
      // Linear problem: one stage straight to the final tolerance.
      s.opts.schedule = {{1e-12, 1e-14}};
      break;
    case ExperimentKind::microcrack:
      s.r_a = 4.0;
      s.default_defect = true;
      s.opts.schedule = default_schedule();
      break;
    case ExperimentKind::fig5:
      s.default_defect = false;
      break;
  }
  s.opts.fit_stages = 1;
  return s;
}

std::vector<ExperimentSpec> parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  // The INI reader drops sections without keys, so collect the headers separately.
  std::vector<std::string> headers;
  {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      const std::string t = trim(line);
      if (t.size() > 1 && t.front() == '[' && t.back() == ']') headers.push_back(trim(t.substr(1, t.size() - 2)));
    }
  }
  for (const auto& [key, body] : tree)
    if (std::find(headers.begin(), headers.end(), key) == headers.end())
      throw ConfigError("key '" + key + "' outside an [experiment NAME] section");

  std::vector<ExperimentSpec> specs;
  std::set<std::string> names;
  const std::set<std::string> known(config_keys().begin(), config_keys().end());
  const pt::ptree no_keys;
  for (const auto& section : headers) {
    const auto child = tree.get_child_optional(pt::ptree::path_type(section, '\0'));
    const pt::ptree& body = child ? *child : no_keys;
    const std::string head = trim(section);
    if (head.rfind("experiment", 0) != 0)
      throw ConfigError("unknown section [" + section + "]; expected [experiment NAME]");
    const std::string name = trim(head.substr(std::string("experiment").size()));
    if (name.empty()) throw ConfigError("section [" + section + "] has no experiment name");
    if (!names.insert(name).second) throw ConfigError("duplicate experiment name '" + name + "'");

    for (const auto& [key, val] : body)
      if (!known.count(key)) throw ConfigError("experiment '" + name + "': unknown key '" + key + "'");
    const auto kind_it = body.find("kind");
    const ExperimentKind kind =
        kind_it == body.not_found() ? ExperimentKind::point_force : to_kind(kind_it->second.data());
    ExperimentSpec s = default_spec(kind);
    s.name = name;
    for (const auto& [key, val] : body) {
      try {
        apply_key(s, key, val.data());
      } catch (const ConfigError& e) {
        throw ConfigError("experiment '" + name + "': " + e.what());
      }
    }
    validate(s);
    specs.push_back(std::move(s));
  }
  if (specs.empty()) throw ConfigError("no experiments");
  return specs;
}

std::vector<ExperimentSpec> load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace flexbc
