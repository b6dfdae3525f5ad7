#include "mmrelay/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace mmrelay {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

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
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "name",        "seed",       "K",          "N",
      "T",           "tau",        "p_max_dbm",  "pr_max_dbm",
      "eta_db",      "pc_dbm",     "p_rho_dbm",  "sigma_n2_db",
      "sigma_nr2_db", "lir_db",    "ui_db",      "du",
      "dd",          "zf_dof",     "sweep",      "grid",
      "series",      "series_grid", "schemes",   "modes",
      "trials",      "ls_compare", "half_duplex", "qos_rate",
      "max_outer",   "plot_metric"};
  return keys;
}

// Maps a SystemConfig field named in a validation message to its key.
std::string key_for_field(const std::string& field) {
  static const std::map<std::string, std::string> m = {
      {"P_max", "p_max_dbm"},     {"PR_max", "pr_max_dbm"},
      {"Pt_max", "eta_db"},       {"Pc", "pc_dbm"},
      {"P_rho", "p_rho_dbm"},     {"sigma_n2", "sigma_n2_db"},
      {"sigma_nr2", "sigma_nr2_db"}, {"sigma_LIR2", "lir_db"},
      {"sigma_UI", "ui_db"},      {"Du", "du"},
      {"Dd", "dd"}};
  const auto it = m.find(field);
  return it == m.end() ? field : it->second;
}

class Reader {
 public:
  Reader(std::map<std::string, Entry> e, std::string origin)
      : entries_(std::move(e)), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    const auto it = entries_.find(key);
    const int line = it == entries_.end() ? 0 : it->second.line;
    std::string where = origin_;
    if (line > 0) where += ":" + std::to_string(line);
    throw ConfigError(where + ": key '" + key + "': " + why, key, line);
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::string& raw(const std::string& key) const {
    return entries_.at(key).value;
  }

  double number(const std::string& key, const std::string& text) const {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
      fail(key, "expected a number, got '" + text + "'");
    return v;
  }

  double num(const std::string& key, double def) const {
    return has(key) ? number(key, raw(key)) : def;
  }

  long integer(const std::string& key, long def) const {
    if (!has(key)) return def;
    const double v = number(key, raw(key));
    if (v != std::floor(v)) fail(key, "expected an integer");
    return static_cast<long>(v);
  }

  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string& v = raw(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(key, "expected true or false");
  }

  // "a, b, c" or "start:step:stop".
  std::vector<double> list(const std::string& key) const {
    const std::string& v = raw(key);
    std::vector<double> out;
    if (v.find(':') != std::string::npos) {
      const auto parts = split(v, ':');
      if (parts.size() != 3) fail(key, "range must be start:step:stop");
      const double a = number(key, parts[0]), st = number(key, parts[1]),
                   b = number(key, parts[2]);
      if (!(st > 0) || b < a) fail(key, "range needs step > 0 and stop >= start");
      const long n = std::lround(std::floor((b - a) / st + 1e-9));
      for (long i = 0; i <= n; ++i) out.push_back(a + i * st);
      return out;
    }
    for (const auto& p : split(v, ',')) out.push_back(number(key, p));
    if (out.empty()) fail(key, "empty list");
    return out;
  }

 private:
  std::map<std::string, Entry> entries_;
  std::string origin_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Scenario parse_config(const std::string& text, const std::string& origin) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  const auto& keys = known_keys();
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(no);
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key = value", "", no);
    const std::string key = trim(line.substr(0, eq));
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError(where + ": key '" + key + "': unknown key", key, no);
    if (entries.count(key))
      throw ConfigError(where + ": key '" + key + "': duplicate key", key, no);
    entries[key] = {trim(line.substr(eq + 1)), no};
  }
  const Reader r(std::move(entries), origin);

  Scenario s;
  if (!r.has("seed")) r.fail("seed", "required");
  {
    const std::string& v = r.raw("seed");
    char* end = nullptr;
    errno = 0;
    const unsigned long long seed = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0' || errno == ERANGE || v[0] == '-')
      r.fail("seed", "expected a non-negative integer");
    s.seed = seed;
  }
  s.name = r.has("name") ? r.raw("name") : "scenario";
  if (s.name.empty() || s.name.find_first_of("/\\ ,") != std::string::npos)
    r.fail("name", "must be a plain identifier");

  SystemConfig c = reference_config();
  c.K = static_cast<int>(r.integer("K", 5));
  c.N = static_cast<int>(r.integer("N", 128));
  c.T = static_cast<int>(r.integer("T", 200));
  c.tau = static_cast<int>(r.integer("tau", 2L * c.K));
  if (c.K < 1) r.fail("K", "need at least one user pair");
  c.P_max = dbm_to_mw(r.num("p_max_dbm", 10));
  c.PR_max = dbm_to_mw(r.num("pr_max_dbm", 23));
  c.Pt_max = db_to_lin(r.num("eta_db", 10));
  c.Pc = dbm_to_mw(r.num("pc_dbm", 30));
  c.P_rho = dbm_to_mw(r.num("p_rho_dbm", 20));
  c.sigma_n2 = db_to_lin(r.num("sigma_n2_db", 0));
  c.sigma_nr2 = db_to_lin(r.num("sigma_nr2_db", 0));
  c.sigma_LIR2 = db_to_lin(r.num("lir_db", 0));
  c.sigma_UI = uniform_ui(c.K, db_to_lin(r.num("ui_db", 0)));
  const int U = c.users();
  for (const char* key : {"du", "dd"}) {
    Eigen::VectorXd& d = std::string(key) == "du" ? c.Du : c.Dd;
    if (r.has(key)) {
      const auto v = r.list(key);
      if (static_cast<int>(v.size()) != U)
        r.fail(key, "expected " + std::to_string(U) + " entries");
      d = to_vec(v);
    } else if (U != 10) {
      d = Eigen::VectorXd::Ones(U);
    }
  }
  if (r.has("zf_dof")) {
    const std::string& v = r.raw("zf_dof");
    if (v == "complex") c.zf_dof = WishartDof::kComplex;
    else if (v == "real") c.zf_dof = WishartDof::kReal;
    else r.fail("zf_dof", "expected complex or real");
  }
  s.base = c;

  auto sweep_of = [&](const std::string& key) {
    try {
      return parse_sweep_var(r.raw(key));
    } catch (const std::invalid_argument& e) {
      r.fail(key, e.what());
    }
  };
  if (!r.has("sweep")) r.fail("sweep", "required");
  s.sweep = sweep_of("sweep");
  if (!r.has("grid")) r.fail("grid", "required");
  s.grid = r.list("grid");
  if (r.has("series")) {
    s.has_series = true;
    s.series = sweep_of("series");
    if (!r.has("series_grid")) r.fail("series_grid", "required with series");
    s.series_grid = r.list("series_grid");
  } else if (r.has("series_grid")) {
    r.fail("series_grid", "given without series");
  }

  const std::string schemes = r.has("schemes") ? r.raw("schemes") : "mrc, zf";
  for (const auto& p : split(schemes, ',')) {
    try {
      s.schemes.push_back(parse_scheme(p));
    } catch (const std::invalid_argument& e) {
      r.fail("schemes", e.what());
    }
  }
  const std::string modes = r.has("modes") ? r.raw("modes") : "ee";
  for (const auto& p : split(modes, ',')) {
    try {
      s.modes.push_back(parse_mode(p));
    } catch (const std::invalid_argument& e) {
      r.fail("modes", e.what());
    }
  }
  s.trials = static_cast<int>(r.integer("trials", 0));
  s.ls_compare = r.boolean("ls_compare", false);
  s.half_duplex = r.boolean("half_duplex", false);
  s.qos_rate = r.num("qos_rate", 0);
  s.max_outer = static_cast<int>(r.integer("max_outer", 100));
  if (r.has("plot_metric")) s.plot_metric = r.raw("plot_metric");

  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    std::string key = colon == std::string::npos ? "" : msg.substr(0, colon);
    key = key_for_field(key);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) key = "sweep";
    r.fail(key, colon == std::string::npos ? msg : trim(msg.substr(colon + 1)));
  }
  return s;
}

Scenario load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open file", "", 0);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

std::string to_config_text(const Scenario& s) {
  const SystemConfig& c = s.base;
  std::string o;
  auto put = [&](const std::string& k, const std::string& v) {
    o += k + " = " + v + "\n";
  };
  put("name", s.name);
  put("seed", std::to_string(s.seed));
  put("K", std::to_string(c.K));
  put("N", std::to_string(c.N));
  put("T", std::to_string(c.T));
  put("tau", std::to_string(c.tau));
  put("p_max_dbm", fmt(lin_to_db(c.P_max)));
  put("pr_max_dbm", fmt(lin_to_db(c.PR_max)));
  put("eta_db", fmt(lin_to_db(c.Pt_max)));
  put("pc_dbm", fmt(lin_to_db(c.Pc)));
  put("p_rho_dbm", fmt(lin_to_db(c.P_rho)));
  put("sigma_n2_db", fmt(lin_to_db(c.sigma_n2)));
  put("sigma_nr2_db", fmt(lin_to_db(c.sigma_nr2)));
  put("lir_db", fmt(lin_to_db(c.sigma_LIR2)));
  put("ui_db", fmt(lin_to_db(c.sigma_UI.maxCoeff())));
  put("du", join({c.Du.data(), c.Du.data() + c.Du.size()}));
  put("dd", join({c.Dd.data(), c.Dd.data() + c.Dd.size()}));
  put("zf_dof", c.zf_dof == WishartDof::kComplex ? "complex" : "real");
  put("sweep", sweep_var_name(s.sweep));
  put("grid", join(s.grid));
  if (s.has_series) {
    put("series", sweep_var_name(s.series));
    put("series_grid", join(s.series_grid));
  }
  std::string sch, md;
  for (size_t i = 0; i < s.schemes.size(); ++i)
    sch += (i ? ", " : "") + scheme_name(s.schemes[i]);
  for (size_t i = 0; i < s.modes.size(); ++i)
    md += (i ? ", " : "") + mode_name(s.modes[i]);
  put("schemes", sch);
  put("modes", md);
  put("trials", std::to_string(s.trials));
  put("ls_compare", s.ls_compare ? "true" : "false");
  put("half_duplex", s.half_duplex ? "true" : "false");
  put("qos_rate", fmt(s.qos_rate));
  put("max_outer", std::to_string(s.max_outer));
  put("plot_metric", s.plot_metric);
  return o;
}

}  // namespace mmrelay
