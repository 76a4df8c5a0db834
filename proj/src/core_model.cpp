#include "delm/core_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace delm {

namespace {

void require_nonnegative(double v, const char* name) {
  if (!(v >= 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be >= 0, got " + std::to_string(v));
  }
}

}  // namespace

void LearnerProfile::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (!(model_size >= 0.0)) throw std::invalid_argument("model_size must be >= 0");
}

void MechanismState::validate(double d_max) const {
  if (rewards.size() != data_sizes.size()) {
    throw std::invalid_argument("rewards and data_sizes must have equal length");
  }
  if (iteration < 0) throw std::invalid_argument("iteration must be >= 0");
  for (double r : rewards) require_nonnegative(r, "reward");
  for (double d : data_sizes) {
    require_nonnegative(d, "data_size");
    if (d > d_max) throw std::invalid_argument("data_size exceeds d_max");
  }
}

void ServerConfig::validate() const {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(d_max >= 1.0)) throw std::invalid_argument("d_max must be >= 1");
  if (!(convergence_tol > 0.0 && convergence_tol < 1.0)) {
    throw std::invalid_argument("convergence_tol must be in (0, 1)");
  }
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
}

double computation_cost(const LearnerProfile& p, double data_size) {
  require_nonnegative(data_size, "data_size");
  return p.alpha * data_size;
}

double communication_cost(const LearnerProfile& p, double data_size) {
  require_nonnegative(data_size, "data_size");
  return p.beta * (data_size + p.model_size);
}

double learner_payoff(const LearnerProfile& p, bool participate, double reward, double data_size) {
  require_nonnegative(reward, "reward");
  require_nonnegative(data_size, "data_size");
  if (!participate) return 0.0;
  return reward - computation_cost(p, data_size) - communication_cost(p, data_size);
}

bool optimal_participation(const LearnerProfile& p, double reward, double data_size) {
  require_nonnegative(reward, "reward");
  require_nonnegative(data_size, "data_size");
  return reward >= p.unit_cost() * data_size + p.beta * p.model_size;
}

bool is_active(const LearnerProfile& p, double reward, double data_size) {
  return data_size > 0.0 && optimal_participation(p, reward, data_size);
}

}  // namespace delm
