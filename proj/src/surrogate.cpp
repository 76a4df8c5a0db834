#include "delm/surrogate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "delm/errors.hpp"

namespace delm {

void EnsembleOutcome::validate() const {
  if (static_cast<std::int64_t>(fault_counts.size()) != union_size) {
    throw std::invalid_argument("fault_counts length must equal union_size");
  }
  if (n_participants < 0) throw std::invalid_argument("n_participants must be >= 0");
  for (int l : fault_counts) {
    if (l < 0 || l > n_participants) {
      throw std::invalid_argument("fault count outside [0, n_participants]");
    }
  }
}

double diversity_term(const EnsembleOutcome& outcome) {
  if (outcome.n_participants < 2) {
    throw DegenerateEnsembleError("diversity_term needs at least 2 participants");
  }
  if (outcome.union_size < 1) {
    throw DegenerateEnsembleError("diversity_term needs a non-empty union dataset");
  }
  double sum_sq = 0.0;
  for (int l : outcome.fault_counts) sum_sq += static_cast<double>(l) * static_cast<double>(l);
  const double np = outcome.n_participants;
  return sum_sq / (static_cast<double>(outcome.union_size) * np * (np - 1.0));
}

double precision_term(const EnsembleOutcome& outcome) {
  if (outcome.n_participants < 2) {
    throw DegenerateEnsembleError("precision_term needs at least 2 participants");
  }
  return (outcome.mean_precision - 1.0) / (outcome.n_participants - 1.0);
}

double surrogate_f(const EnsembleOutcome& outcome) {
  if (outcome.n_participants == 0) return 0.0;
  if (outcome.n_participants == 1) return outcome.mean_precision;
  return diversity_term(outcome) + precision_term(outcome);
}

bool FittedAccuracyModel::domain_ok(int n_max, double total_data_max) const {
  // First log argument is linear in N: checking both ends of [1, n_max]
  // covers the interval. Second argument is linear in S at fixed N and
  // monotone in N at fixed S, so the four corners cover the rectangle.
  if (n_max < 1) return false;
  const double lo_n = b * 1.0 + c;
  const double hi_n = b * static_cast<double>(n_max) + c;
  if (!(lo_n > 0.0) || !(hi_n > 0.0)) return false;
  for (int n : {1, n_max}) {
    for (double s : {0.0, total_data_max}) {
      if (!((f / n) * s + g > 0.0)) return false;
    }
  }
  return true;
}

double fitted_f(const FittedAccuracyModel& model, int n_participants, double total_data) {
  if (n_participants < 1) {
    throw std::invalid_argument("fitted_f needs n_participants >= 1");
  }
  const double n = n_participants;
  const double arg1 = model.b * n + model.c;
  const double arg2 = (model.f / n) * total_data + model.g;
  if (!(arg1 > 0.0) || !(arg2 > 0.0)) {
    throw ModelDomainError("non-positive log argument in fitted model");
  }
  return (model.a * std::log(arg1) + model.d) * (model.e * std::log(arg2) + model.h);
}

void FittedAccuracyModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  const auto put = [&out](const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << key << " = " << buf << "\n";
  };
  put("a", a);
  put("b", b);
  put("c", c);
  put("d", d);
  put("e", e);
  put("f", f);
  put("g", g);
  put("h", h);
  put("rmse", rmse);
}

FittedAccuracyModel FittedAccuracyModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model file: " + path);
  std::map<std::string, double> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    key.erase(0, key.find_first_not_of(" \t"));
    kv[key] = std::stod(line.substr(eq + 1));
  }
  FittedAccuracyModel m;
  for (const char* key : {"a", "b", "c", "d", "e", "f", "g", "h"}) {
    if (!kv.count(key)) {
      throw std::runtime_error("model file " + path + " missing key '" + key + "'");
    }
  }
  m.a = kv["a"];
  m.b = kv["b"];
  m.c = kv["c"];
  m.d = kv["d"];
  m.e = kv["e"];
  m.f = kv["f"];
  m.g = kv["g"];
  m.h = kv["h"];
  if (kv.count("rmse")) m.rmse = kv["rmse"];
  return m;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw std::invalid_argument("pearson: zero variance");
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace delm
