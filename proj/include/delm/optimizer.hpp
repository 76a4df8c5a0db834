#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "delm/core_model.hpp"
#include "delm/surrogate.hpp"

namespace delm {

/// Result of one alternating-optimization run. payoff_trace holds the server
/// payoff after each pass that changed the state, so its length equals
/// iterations_used; a final unchanged pass confirms convergence without
/// being counted.
struct OptimizerReport {
  MechanismState final_state;
  double server_payoff = 0.0;
  int n_participants = 0;
  int iterations_used = 0;
  std::vector<double> payoff_trace;
  bool converged = false;
  double wall_time = 0.0;  // seconds
  std::vector<int> processing_order;
};

/// gamma * F(N^P, sum of active data sizes) - sum of all rewards.
/// With no active learners the accuracy term is 0.
double server_payoff(const FittedAccuracyModel& model, std::span<const LearnerProfile> profiles,
                     const MechanismState& state, double gamma);

/// Threshold reward (alpha+beta)*D_i when the weighted accuracy gain of
/// learner i's participation covers it, else 0. Other learners'
/// participation is held at its current status.
double optimal_reward(const FittedAccuracyModel& model, std::span<const LearnerProfile> profiles,
                      const MechanismState& state, int learner, double gamma);

/// Maximizer of gamma * F(D_i) - (alpha_i+beta_i) * D_i over [0, d_max],
/// treating learner i as participating. Golden-section search with a
/// derivative sign check and a grid-scan fallback; accurate to 1e-3 samples
/// of a stationary point or returns a boundary.
double optimal_data_size_relaxed(const FittedAccuracyModel& model,
                                 std::span<const LearnerProfile> profiles,
                                 const MechanismState& state, int learner, double gamma,
                                 double d_max);

/// Rounds a relaxed data size to the better of floor/ceil under the
/// integer-constrained per-learner objective; ties pick the smaller value.
double round_data_size(const FittedAccuracyModel& model, std::span<const LearnerProfile> profiles,
                       const MechanismState& state, int learner, double gamma, double d);

struct AlternateOptions {
  std::optional<MechanismState> init;  // default: rewards 0, data sizes min(500, d_max)
  std::vector<double> round_grid;      // final rounding targets; empty = integers
  bool randomize_order = false;        // process learners in shuffled order instead of sorted
  std::uint64_t order_seed = 0;
  bool keep_continuous = false;        // skip final rounding
};

/// Alternating reward / data-size optimization: learners sorted ascending by
/// alpha+beta (ties by index), round-robin data-size then reward updates,
/// until the max relative change of (R, D) drops below the tolerance.
/// Data sizes stay continuous during iterations and are rounded once at the
/// end, after which rewards are recomputed.
OptimizerReport alternate_optimize(const FittedAccuracyModel& model,
                                   std::span<const LearnerProfile> profiles,
                                   const ServerConfig& config, const AlternateOptions& options = {});

struct OracleResult {
  MechanismState best_state;
  double best_payoff = 0.0;
  std::int64_t states_evaluated = 0;
};

/// Exhaustive search over D_i in d_grid and R_i in {0, (alpha_i+beta_i)D_i}.
/// Guarded to N <= 6 learners and at most 12 grid values; deterministic
/// lexicographic tie-break.
OracleResult brute_force_oracle(const FittedAccuracyModel& model,
                                std::span<const LearnerProfile> profiles, double gamma,
                                std::span<const double> d_grid);

}  // namespace delm
