#include "delm/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "delm/errors.hpp"
#include "delm/rng.hpp"

namespace delm {

namespace {

// Accuracy surface with the empty-ensemble convention.
double accuracy_at(const FittedAccuracyModel& model, int n_participants, double total_data) {
  if (n_participants <= 0) return 0.0;
  return fitted_f(model, n_participants, total_data);
}

// Active learners other than the one being updated.
struct Environment {
  int n_others = 0;
  double data_others = 0.0;
};

Environment environment_without(std::span<const LearnerProfile> profiles,
                                const MechanismState& state, int exclude) {
  Environment env;
  for (std::size_t j = 0; j < profiles.size(); ++j) {
    if (static_cast<int>(j) == exclude) continue;
    if (is_active(profiles[j], state.rewards[j], state.data_sizes[j])) {
      ++env.n_others;
      env.data_others += state.data_sizes[j];
    }
  }
  return env;
}

// Per-learner relaxed objective: gamma * F(n_others+1, data_others + d) - cost * d.
struct DataSizeObjective {
  const FittedAccuracyModel& model;
  Environment env;
  double unit_cost;
  double gamma;

  double operator()(double d) const {
    return gamma * accuracy_at(model, env.n_others + 1, env.data_others + d) - unit_cost * d;
  }
};

// Golden-section maximization to an absolute x tolerance.
double golden_max(const std::function<double(double)>& f, double lo, double hi, double x_tol,
                  int max_evals) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  int evals = 2;
  while (b - a > x_tol && evals < max_evals) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
    ++evals;
  }
  return f1 >= f2 ? x1 : x2;
}

double solve_data_size(const DataSizeObjective& obj, double d_max) {
  constexpr double x_tol = 1e-3;
  double best = golden_max([&](double x) { return obj(x); }, 0.0, d_max, x_tol, 200);

  // Two-sided derivative sign check; golden section assumed unimodality,
  // so an inconsistent sign pattern sends us to a grid scan instead.
  const double step = std::max(x_tol, d_max * 1e-7);
  bool suspicious = false;
  if (best > step && best < d_max - step) {
    const double left = obj(best) - obj(best - step);
    const double right = obj(best + step) - obj(best);
    suspicious = left < 0.0 && right > 0.0;
  }
  if (suspicious) {
    constexpr int grid_points = 64;
    int best_k = 0;
    double best_val = obj(0.0);
    for (int k = 1; k <= grid_points; ++k) {
      const double v = obj(d_max * k / grid_points);
      if (v > best_val) {
        best_val = v;
        best_k = k;
      }
    }
    const double lo = d_max * std::max(0, best_k - 1) / grid_points;
    const double hi = d_max * std::min(grid_points, best_k + 1) / grid_points;
    best = golden_max([&](double x) { return obj(x); }, lo, hi, x_tol, 200);
  }

  // Boundaries are always candidates; prefer the smaller size on ties.
  double arg = best, val = obj(best);
  for (double cand : {0.0, d_max}) {
    const double v = obj(cand);
    if (v > val || (v == val && cand < arg)) {
      arg = cand;
      val = v;
    }
  }
  return arg;
}

double reward_for(const FittedAccuracyModel& model, const Environment& env, double unit_cost,
                  double d, double gamma) {
  if (d <= 0.0) return 0.0;
  const double gain = accuracy_at(model, env.n_others + 1, env.data_others + d) -
                      accuracy_at(model, env.n_others, env.data_others);
  const double cost = unit_cost * d;
  return gamma * gain >= cost ? cost : 0.0;
}

double round_on_grid(const DataSizeObjective& obj, double d, std::span<const double> grid) {
  // grid is sorted ascending; pick the better of the bracketing values.
  auto it = std::lower_bound(grid.begin(), grid.end(), d);
  const double hi = it == grid.end() ? grid.back() : *it;
  const double lo = it == grid.begin() ? grid.front() : *(it - 1);
  if (lo == hi) return lo;
  return obj(hi) > obj(lo) ? hi : lo;
}

double round_to_integer(const DataSizeObjective& obj, double d) {
  const double lo = std::floor(d);
  const double hi = std::ceil(d);
  if (lo == hi) return lo;
  return obj(hi) > obj(lo) ? hi : lo;
}

bool entry_changed(double before, double after, double tol, double d_max) {
  if (before == 0.0) return std::abs(after) >= tol * d_max;
  return std::abs(after - before) >= tol * std::abs(before);
}

}  // namespace

double server_payoff(const FittedAccuracyModel& model, std::span<const LearnerProfile> profiles,
                     const MechanismState& state, double gamma) {
  if (state.size() != profiles.size()) {
    throw std::invalid_argument("state size must match profile count");
  }
  const Environment env = environment_without(profiles, state, -1);
  double reward_sum = 0.0;
  for (double r : state.rewards) reward_sum += r;
  return gamma * accuracy_at(model, env.n_others, env.data_others) - reward_sum;
}

double optimal_reward(const FittedAccuracyModel& model, std::span<const LearnerProfile> profiles,
                      const MechanismState& state, int learner, double gamma) {
  const Environment env = environment_without(profiles, state, learner);
  return reward_for(model, env, profiles[learner].unit_cost(), state.data_sizes[learner], gamma);
}

double optimal_data_size_relaxed(const FittedAccuracyModel& model,
                                 std::span<const LearnerProfile> profiles,
                                 const MechanismState& state, int learner, double gamma,
                                 double d_max) {
  const Environment env = environment_without(profiles, state, learner);
  if (!model.domain_ok(env.n_others + 1, env.data_others + d_max)) {
    throw SolverError("fitted model domain invalid over [0, d_max]");
  }
  return solve_data_size({model, env, profiles[learner].unit_cost(), gamma}, d_max);
}

double round_data_size(const FittedAccuracyModel& model, std::span<const LearnerProfile> profiles,
                       const MechanismState& state, int learner, double gamma, double d) {
  const double lo = std::floor(d);
  const double hi = std::ceil(d);
  if (lo == hi) return lo;
  const Environment env = environment_without(profiles, state, learner);
  const DataSizeObjective obj{model, env, profiles[learner].unit_cost(), gamma};
  return obj(hi) > obj(lo) ? hi : lo;
}

OptimizerReport alternate_optimize(const FittedAccuracyModel& model,
                                   std::span<const LearnerProfile> profiles,
                                   const ServerConfig& config, const AlternateOptions& options) {
  if (profiles.empty()) throw std::invalid_argument("alternate_optimize needs learners");
  config.validate();
  for (const auto& p : profiles) p.validate();

  const auto t_start = std::chrono::steady_clock::now();
  OptimizerReport report;

  std::vector<int> order(profiles.size());
  std::iota(order.begin(), order.end(), 0);
  if (options.randomize_order) {
    Rng rng(options.order_seed);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.next_below(static_cast<std::int64_t>(i))]);
    }
  } else {
    std::sort(order.begin(), order.end(), [&](int l, int r) {
      const double cl = profiles[l].unit_cost();
      const double cr = profiles[r].unit_cost();
      return cl != cr ? cl < cr : l < r;
    });
  }
  report.processing_order = order;

  MechanismState state;
  if (options.init) {
    state = *options.init;
    state.validate(config.d_max);
    if (state.size() != profiles.size()) {
      throw std::invalid_argument("init state size must match profile count");
    }
  } else {
    state.rewards.assign(profiles.size(), 0.0);
    state.data_sizes.assign(profiles.size(), std::min(500.0, config.d_max));
  }
  state.iteration = 0;

  std::vector<double> grid(options.round_grid);
  std::sort(grid.begin(), grid.end());

  const std::size_t n = profiles.size();
  std::vector<std::uint8_t> active(n);
  int n_active = 0;
  double data_active = 0.0;
  const auto rebuild_totals = [&] {
    n_active = 0;
    data_active = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      active[j] = is_active(profiles[j], state.rewards[j], state.data_sizes[j]);
      if (active[j]) {
        ++n_active;
        data_active += state.data_sizes[j];
      }
    }
  };

  // One full pass of per-learner data-size + reward updates. Totals are
  // maintained incrementally so each update is O(1) in N.
  const auto run_pass = [&](bool rounding, std::span<const double> round_grid) {
    for (int k : order) {
      if (active[k]) {
        --n_active;
        data_active -= state.data_sizes[k];
      }
      const Environment env{n_active, data_active};
      const DataSizeObjective obj{model, env, profiles[k].unit_cost(), config.gamma};
      if (rounding) {
        state.data_sizes[k] = round_grid.empty()
                                  ? round_to_integer(obj, state.data_sizes[k])
                                  : round_on_grid(obj, state.data_sizes[k], round_grid);
      } else {
        if (!model.domain_ok(env.n_others + 1, env.data_others + config.d_max)) {
          throw SolverError("fitted model domain invalid over [0, d_max]");
        }
        const double d_new = solve_data_size(obj, config.d_max);
        // Never move to a worse point than the current one; this keeps
        // every pass an exact block ascent of the server payoff.
        if (obj(d_new) >= obj(state.data_sizes[k])) state.data_sizes[k] = d_new;
      }
      state.rewards[k] =
          reward_for(model, env, profiles[k].unit_cost(), state.data_sizes[k], config.gamma);
      active[k] = is_active(profiles[k], state.rewards[k], state.data_sizes[k]);
      if (active[k]) {
        ++n_active;
        data_active += state.data_sizes[k];
      }
    }
  };

  for (int pass = 1; pass <= config.max_iterations; ++pass) {
    const MechanismState before = state;
    rebuild_totals();
    run_pass(false, {});
    state.iteration = pass;

    bool changed = false;
    for (std::size_t i = 0; i < state.size() && !changed; ++i) {
      changed = entry_changed(before.rewards[i], state.rewards[i], config.convergence_tol,
                              config.d_max) ||
                entry_changed(before.data_sizes[i], state.data_sizes[i], config.convergence_tol,
                              config.d_max);
    }
    if (!changed) {
      report.converged = true;
      break;
    }
    report.payoff_trace.push_back(server_payoff(model, profiles, state, config.gamma));
    report.iterations_used = pass;
  }

  if (!options.keep_continuous) {
    rebuild_totals();
    run_pass(true, grid);
  }

  report.final_state = state;
  report.server_payoff = server_payoff(model, profiles, state, config.gamma);
  report.n_participants = environment_without(profiles, state, -1).n_others;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

OracleResult brute_force_oracle(const FittedAccuracyModel& model,
                                std::span<const LearnerProfile> profiles, double gamma,
                                std::span<const double> d_grid) {
  const std::size_t n = profiles.size();
  if (n == 0 || n > 6) throw OracleSizeError("oracle supports 1..6 learners");
  if (d_grid.empty() || d_grid.size() > 12) {
    throw OracleSizeError("oracle grid must have 1..12 values");
  }
  for (double v : d_grid) {
    if (v < 0.0 || v != std::floor(v)) {
      throw OracleSizeError("oracle grid values must be non-negative integers");
    }
  }

  OracleResult res;
  res.best_payoff = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(n, 0);
  MechanismState state;
  state.rewards.assign(n, 0.0);
  state.data_sizes.assign(n, 0.0);

  for (;;) {
    for (std::size_t i = 0; i < n; ++i) state.data_sizes[i] = d_grid[idx[i]];
    // Rewards reduce to {0, threshold}: enumerate participation subsets.
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      for (std::size_t i = 0; i < n; ++i) {
        state.rewards[i] = (mask >> i) & 1u ? profiles[i].unit_cost() * state.data_sizes[i] : 0.0;
      }
      const double payoff = server_payoff(model, profiles, state, gamma);
      ++res.states_evaluated;
      if (payoff > res.best_payoff) {
        res.best_payoff = payoff;
        res.best_state = state;
      }
    }
    // Odometer over grid indices, last learner fastest.
    std::size_t digit = n;
    for (;;) {
      if (digit == 0) return res;
      --digit;
      if (++idx[digit] < d_grid.size()) break;
      idx[digit] = 0;
    }
  }
}

}  // namespace delm
