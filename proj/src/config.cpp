#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "delm/errors.hpp"
#include "delm/experiment.hpp"
#include "delm/rng.hpp"
#include "delm/util.hpp"

namespace delm {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join17(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += fmt17(values[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    if (!std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigParseError("expected a finite number, got '" + v + "'", line);
  }
}

std::int64_t parse_int(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const std::int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigParseError("expected an integer, got '" + v + "'", line);
  }
}

std::uint64_t parse_u64(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const std::uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigParseError("expected an unsigned integer, got '" + v + "'", line);
  }
}

std::vector<double> parse_list(const std::string& v, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigParseError("empty list element", line);
    out.push_back(parse_double(item, line));
  }
  if (out.empty()) throw ConfigParseError("expected a non-empty list", line);
  return out;
}

void require(bool ok, const std::string& what, int line) {
  if (!ok) throw ConfigParseError(what, line);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, int)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"sim.pool_size",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.sim.pool_size = parse_int(v, ln);
         require(c.sim.pool_size >= 1, "sim.pool_size must be >= 1", ln);
       }},
      {"sim.n_classes",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.sim.n_classes = static_cast<int>(parse_int(v, ln));
         require(c.sim.n_classes >= 2, "sim.n_classes must be >= 2", ln);
       }},
      {"sim.p_max",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.sim.p_max = parse_double(v, ln);
         require(c.sim.p_max > 0.0 && c.sim.p_max <= 1.0, "sim.p_max must be in (0, 1]", ln);
       }},
      {"sim.kappa",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.sim.kappa = parse_double(v, ln);
         require(c.sim.kappa > 0.0, "sim.kappa must be > 0", ln);
       }},
      {"sim.difficulty_alpha",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.sim.difficulty_alpha = parse_double(v, ln);
         require(c.sim.difficulty_alpha > 0.0, "sim.difficulty_alpha must be > 0", ln);
       }},
      {"sim.difficulty_beta",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.sim.difficulty_beta = parse_double(v, ln);
         require(c.sim.difficulty_beta > 0.0, "sim.difficulty_beta must be > 0", ln);
       }},
      {"sim.trials",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.sim.trials = static_cast<int>(parse_int(v, ln));
         require(c.sim.trials >= 1, "sim.trials must be >= 1", ln);
       }},
      {"sim.seed",
       [](ExperimentConfig& c, const std::string& v, int ln) { c.sim.seed = parse_u64(v, ln); }},
      {"server.gamma",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.server.gamma = parse_double(v, ln);
         require(c.server.gamma >= 0.0, "server.gamma must be >= 0", ln);
       }},
      {"server.d_max",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.server.d_max = parse_double(v, ln);
         require(c.server.d_max >= 1.0, "server.d_max must be >= 1", ln);
       }},
      {"server.convergence_tol",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.server.convergence_tol = parse_double(v, ln);
         require(c.server.convergence_tol > 0.0 && c.server.convergence_tol < 1.0,
                 "server.convergence_tol must be in (0, 1)", ln);
       }},
      {"server.max_iterations",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.server.max_iterations = static_cast<int>(parse_int(v, ln));
         require(c.server.max_iterations >= 1, "server.max_iterations must be >= 1", ln);
       }},
      {"server.seed",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.server.seed = parse_u64(v, ln);
       }},
      {"population.n",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.population.n = static_cast<int>(parse_int(v, ln));
         require(c.population.n >= 1, "population.n must be >= 1", ln);
       }},
      {"population.cost_low",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.population.cost_low = parse_double(v, ln);
         require(c.population.cost_low > 0.0, "population.cost_low must be > 0", ln);
       }},
      {"population.cost_high",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.population.cost_high = parse_double(v, ln);
         require(c.population.cost_high > 0.0, "population.cost_high must be > 0", ln);
       }},
      {"population.alpha_fraction",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.population.alpha_fraction = parse_double(v, ln);
         require(c.population.alpha_fraction > 0.0 && c.population.alpha_fraction < 1.0,
                 "population.alpha_fraction must be in (0, 1)", ln);
       }},
      {"sweep.parameter",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.sweep.parameter = v;
         require(v == "gamma", "sweep.parameter must be 'gamma'", ln);
       }},
      {"sweep.values",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.sweep.values = parse_list(v, ln);
         for (double x : c.sweep.values) require(x >= 0.0, "sweep.values must be >= 0", ln);
       }},
      {"accuracy.n_values",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.accuracy.n_values = parse_list(v, ln);
         for (double x : c.accuracy.n_values) {
           require(x >= 1.0 && x == std::floor(x), "accuracy.n_values must be integers >= 1", ln);
         }
       }},
      {"accuracy.d_values",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.accuracy.d_values = parse_list(v, ln);
         for (double x : c.accuracy.d_values) require(x > 0.0, "accuracy.d_values must be > 0", ln);
       }},
      {"convergence.seeds",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.convergence.seeds = static_cast<int>(parse_int(v, ln));
         require(c.convergence.seeds >= 1, "convergence.seeds must be >= 1", ln);
       }},
      {"convergence.gammas",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.convergence.gammas = parse_list(v, ln);
         for (double x : c.convergence.gammas) {
           require(x >= 0.0, "convergence.gammas must be >= 0", ln);
         }
       }},
      {"oracle.instances",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.oracle.instances = static_cast<int>(parse_int(v, ln));
         require(c.oracle.instances >= 1, "oracle.instances must be >= 1", ln);
       }},
      {"oracle.n_learners",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.oracle.n_learners = parse_list(v, ln);
         for (double x : c.oracle.n_learners) {
           require(x >= 1.0 && x <= 6.0 && x == std::floor(x),
                   "oracle.n_learners must be integers in [1, 6]", ln);
         }
       }},
      {"oracle.d_grid",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.oracle.d_grid = parse_list(v, ln);
         require(c.oracle.d_grid.size() <= 12, "oracle.d_grid supports at most 12 values", ln);
         for (double x : c.oracle.d_grid) {
           require(x >= 0.0 && x == std::floor(x),
                   "oracle.d_grid must be non-negative integers", ln);
         }
       }},
      {"oracle.gamma_low",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.oracle.gamma_low = parse_double(v, ln);
         require(c.oracle.gamma_low > 0.0, "oracle.gamma_low must be > 0", ln);
       }},
      {"oracle.gamma_high",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.oracle.gamma_high = parse_double(v, ln);
         require(c.oracle.gamma_high > 0.0, "oracle.gamma_high must be > 0", ln);
       }},
      {"output.dir",
       [](ExperimentConfig& c, const std::string& v, int) { c.output_dir = v; }},
  };
  return table;
}

}  // namespace

std::vector<double> ExperimentConfig::sweep_gammas() const {
  if (!sweep.values.empty()) return sweep.values;
  std::vector<double> out;
  const double lo = std::log(500.0), hi = std::log(8000.0);
  for (int k = 0; k < 16; ++k) {
    out.push_back(std::exp(lo + (hi - lo) * k / 15.0));
  }
  return out;
}

void ExperimentConfig::validate() const {
  sim.validate();
  server.validate();
  if (population.cost_low > population.cost_high) {
    throw ConfigParseError("population.cost_low must be <= population.cost_high");
  }
  if (oracle.gamma_low > oracle.gamma_high) {
    throw ConfigParseError("oracle.gamma_low must be <= oracle.gamma_high");
  }
  if (accuracy.n_values.empty() || accuracy.d_values.empty()) {
    throw ConfigParseError("accuracy grid must be non-empty");
  }
  if (convergence.gammas.empty()) {
    throw ConfigParseError("convergence.gammas must be non-empty");
  }
  if (oracle.d_grid.empty()) {
    throw ConfigParseError("oracle.d_grid must be non-empty");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::vector<std::string> unknown;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigParseError("expected 'key = value', got '" + line + "'", line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigParseError("missing key", line_no);
    const auto it = setters().find(key);
    if (it == setters().end()) {
      unknown.push_back(key + " (line " + std::to_string(line_no) + ")");
      continue;
    }
    it->second(config, value, line_no);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigParseError(msg);
  }
  config.validate();
  return config;
}

ExperimentConfig parse_config(const std::string& path) {
  return parse_config_text(read_text_file(path));
}

std::string config_echo(const ExperimentConfig& c) {
  KeyValueRecord rec;
  rec.put("sim.pool_size", static_cast<std::int64_t>(c.sim.pool_size));
  rec.put("sim.n_classes", static_cast<std::int64_t>(c.sim.n_classes));
  rec.put("sim.p_max", fmt17(c.sim.p_max));
  rec.put("sim.kappa", fmt17(c.sim.kappa));
  rec.put("sim.difficulty_alpha", fmt17(c.sim.difficulty_alpha));
  rec.put("sim.difficulty_beta", fmt17(c.sim.difficulty_beta));
  rec.put("sim.trials", static_cast<std::int64_t>(c.sim.trials));
  rec.put("sim.seed", std::to_string(c.sim.seed));
  rec.put("server.gamma", fmt17(c.server.gamma));
  rec.put("server.d_max", fmt17(c.server.d_max));
  rec.put("server.convergence_tol", fmt17(c.server.convergence_tol));
  rec.put("server.max_iterations", static_cast<std::int64_t>(c.server.max_iterations));
  rec.put("server.seed", std::to_string(c.server.seed));
  rec.put("population.n", static_cast<std::int64_t>(c.population.n));
  rec.put("population.cost_low", fmt17(c.population.cost_low));
  rec.put("population.cost_high", fmt17(c.population.cost_high));
  rec.put("population.alpha_fraction", fmt17(c.population.alpha_fraction));
  rec.put("sweep.parameter", c.sweep.parameter);
  if (!c.sweep.values.empty()) rec.put("sweep.values", join17(c.sweep.values));
  rec.put("accuracy.n_values", join17(c.accuracy.n_values));
  rec.put("accuracy.d_values", join17(c.accuracy.d_values));
  rec.put("convergence.seeds", static_cast<std::int64_t>(c.convergence.seeds));
  rec.put("convergence.gammas", join17(c.convergence.gammas));
  rec.put("oracle.instances", static_cast<std::int64_t>(c.oracle.instances));
  rec.put("oracle.n_learners", join17(c.oracle.n_learners));
  rec.put("oracle.d_grid", join17(c.oracle.d_grid));
  rec.put("oracle.gamma_low", fmt17(c.oracle.gamma_low));
  rec.put("oracle.gamma_high", fmt17(c.oracle.gamma_high));
  rec.put("output.dir", c.output_dir);
  return rec.to_string();
}

std::vector<LearnerProfile> draw_population(const PopulationConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LearnerProfile> out;
  out.reserve(static_cast<std::size_t>(config.n));
  for (int i = 0; i < config.n; ++i) {
    const double total = rng.next_range(config.cost_low, config.cost_high);
    LearnerProfile p;
    p.id = i;
    p.alpha = config.alpha_fraction * total;
    p.beta = total - p.alpha;
    out.push_back(p);
  }
  return out;
}

}  // namespace delm
