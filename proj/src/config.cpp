#include "relstable/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "relstable/errors.hpp"

namespace relstable {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (trim(v.substr(used)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw InvalidParameter("config key '" + key + "' expects a number, got '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (trim(v.substr(used)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw InvalidParameter("config key '" + key + "' expects an integer, got '" + v + "'");
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x < 0) throw InvalidParameter("config key '" + key + "' must be >= 0");
  return static_cast<std::size_t>(x);
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::string list_text(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += num(xs[i]);
  }
  return s;
}

}  // namespace

RunOptions ExperimentConfig::run_options() const {
  RunOptions o;
  o.workers = workers;
  o.levels = levels;
  o.richardson_order = richardson_order;
  return o;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  return {
      {"alpha", num(alpha)},
      {"m", num(m)},
      {"d", std::to_string(d)},
      {"domain", domain},
      {"t_grid", list_text(t_grid)},
      {"r_grid", list_text(r_grid)},
      {"n_paths", std::to_string(n_paths)},
      {"n_x", std::to_string(n_x)},
      {"dt", num(dt)},
      {"levels", std::to_string(levels)},
      {"richardson_order", num(richardson_order)},
      {"profile_paths", std::to_string(profile_paths)},
      {"profile_per_decade", std::to_string(profile_per_decade)},
      {"seed", std::to_string(seed)},
      {"workers", std::to_string(workers)},
      {"format", format},
      {"z", num(z)},
      {"budget_scale", num(budget_scale)},
      {"subordinator_rel_tol", num(subordinator_rel_tol)},
  };
}

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = trim(raw_value);
  if (key == "alpha") alpha = to_double(key, v);
  else if (key == "m") m = to_double(key, v);
  else if (key == "d") d = static_cast<int>(to_int(key, v));
  else if (key == "domain") domain = v;
  else if (key == "t_grid") t_grid = to_list(key, v);
  else if (key == "r_grid") r_grid = to_list(key, v);
  else if (key == "n_paths") n_paths = to_count(key, v);
  else if (key == "n_x") n_x = to_count(key, v);
  else if (key == "dt") dt = to_double(key, v);
  else if (key == "levels") levels = static_cast<int>(to_int(key, v));
  else if (key == "richardson_order") richardson_order = to_double(key, v);
  else if (key == "profile_paths") profile_paths = to_count(key, v);
  else if (key == "profile_per_decade") profile_per_decade = static_cast<int>(to_int(key, v));
  else if (key == "seed") {
    const long long s = to_int(key, v);
    if (s < 0) throw InvalidParameter("seed must be >= 0");
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "workers") workers = static_cast<int>(to_int(key, v));
  else if (key == "out") out = v;
  else if (key == "format") format = v;
  else if (key == "z") z = to_double(key, v);
  else if (key == "budget_scale") budget_scale = to_double(key, v);
  else if (key == "subordinator_rel_tol") subordinator_rel_tol = to_double(key, v);
  else throw InvalidParameter("unknown config key '" + key + "'");
}

void ExperimentConfig::validate() const {
  (void)params();
  (void)make_domain();
  if (format != "csv" && format != "json") {
    throw InvalidParameter("format must be csv or json, got '" + format + "'");
  }
  if (workers < 1) throw InvalidParameter("workers must be >= 1");
  if (levels < 1 || levels > 3) throw InvalidParameter("levels must be 1, 2 or 3");
  if (!(dt >= 0.0)) throw InvalidParameter("dt must be >= 0");
  if (!(z > 0.0)) throw InvalidParameter("z must be positive");
  if (!(budget_scale > 0.0)) throw InvalidParameter("budget_scale must be positive");
  if (!(subordinator_rel_tol > 0.0)) throw InvalidParameter("subordinator_rel_tol must be positive");
  if (profile_per_decade < 1) throw InvalidParameter("profile_per_decade must be >= 1");
  for (double t : t_grid) {
    if (!(t > 0.0)) throw InvalidParameter("t_grid entries must be positive");
  }
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidParameter("config line " + std::to_string(lineno) + " has no '=': " + line);
    }
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg;
  apply_config_text(cfg, buf.str());
  return cfg;
}

std::string config_text(const ExperimentConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : cfg.entries()) s += k + "=" + v + "\n";
  return s;
}

}  // namespace relstable
