// Acceptance suite: one pass/fail line per criterion, covering formulas,
// oracle soundness, convergence, monotonicity properties, the surrogate
// correlation, shape checks, sweep behavior, complexity, and determinism.
// Artifacts land in ./acceptance_out.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "delm/bagging_sim.hpp"
#include "delm/core_model.hpp"
#include "delm/experiment.hpp"
#include "delm/optimizer.hpp"
#include "delm/rng.hpp"
#include "delm/surrogate.hpp"
#include "delm/util.hpp"

using namespace delm;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  if (!pass) ++g_failures;
}

void report_info(int criterion, const std::string& detail) {
  std::printf("[REPORT] criterion %2d: %s\n", criterion, detail.c_str());
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool rel_ok(double expected, double actual, double tol = 1e-9) {
  return std::abs(actual - expected) <= tol * std::max(1.0, std::abs(expected));
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

LearnerProfile profile_of(double alpha, double beta, double model_size = 0.0) {
  LearnerProfile p;
  p.alpha = alpha;
  p.beta = beta;
  p.model_size = model_size;
  return p;
}

EnsembleOutcome outcome_of(std::vector<int> faults, int np, double pbar) {
  EnsembleOutcome o;
  o.union_size = static_cast<std::int64_t>(faults.size());
  o.fault_counts = std::move(faults);
  o.n_participants = np;
  o.mean_precision = pbar;
  return o;
}

// --------------------------------------------------------------------------
// Criterion 1: formula unit suite at 1e-9 relative tolerance.
// --------------------------------------------------------------------------
void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  const auto expect = [&](bool cond, const char* what) {
    if (!cond) {
      ok = false;
      std::printf("  criterion 1 mismatch: %s\n", what);
    }
  };

  // computation cost
  expect(rel_ok(0.0, computation_cost(profile_of(0.5, 0.1), 0.0)), "comp zero data");
  expect(rel_ok(0.5, computation_cost(profile_of(1e-3, 0.1), 500.0)), "comp 1e-3 * 500");
  expect(rel_ok(6.0, computation_cost(profile_of(2.0, 0.1), 3.0)), "comp 2 * 3");
  // communication cost
  expect(rel_ok(0.0, communication_cost(profile_of(0.1, 0.2), 0.0)), "comm zero data");
  expect(rel_ok(0.1, communication_cost(profile_of(0.1, 1e-4), 1000.0)), "comm 1e-4 * 1000");
  expect(rel_ok(5.0, communication_cost(profile_of(0.5, 0.1, 10.0), 40.0)), "comm with model size");
  // learner payoff
  expect(learner_payoff(profile_of(0.02, 0.03), false, 9.0, 50.0) == 0.0, "payoff out");
  expect(rel_ok(5.0, learner_payoff(profile_of(0.02, 0.03), true, 10.0, 100.0)), "payoff in");
  expect(rel_ok(0.0, learner_payoff(profile_of(0.02, 0.03), true, 5.0, 100.0)), "payoff binding");
  // participation threshold
  expect(optimal_participation(profile_of(0.02, 0.03), 5.0, 100.0), "participation boundary");
  expect(!optimal_participation(profile_of(0.02, 0.03), 4.99, 100.0), "participation below");
  expect(optimal_participation(profile_of(0.02, 0.03), 0.0, 0.0), "participation zero-cost");
  // surrogate terms
  expect(rel_ok(0.0, diversity_term(outcome_of({0, 0, 0}, 4, 1.0))), "diversity zero");
  expect(rel_ok(1.25, diversity_term(outcome_of({1, 2}, 2, 0.5))), "diversity 1.25");
  expect(rel_ok(1.5, diversity_term(outcome_of({3, 3, 3, 3, 3}, 3, 0.0))), "diversity saturated");
  expect(rel_ok(0.0, precision_term(outcome_of({0, 0}, 5, 1.0))), "precision zero");
  expect(rel_ok(-0.5, precision_term(outcome_of({0, 0}, 2, 0.5))), "precision -0.5");
  expect(rel_ok(-0.01, precision_term(outcome_of({0, 0}, 11, 0.9))), "precision -0.01");
  expect(rel_ok(0.5, surrogate_f(outcome_of({1, 2}, 2, 0.25))), "surrogate 0.5");
  expect(rel_ok(0.73, surrogate_f(outcome_of({9}, 1, 0.73))), "surrogate single learner");
  expect(rel_ok(0.0, surrogate_f(outcome_of({}, 0, 0.0))), "surrogate empty");
  // server payoff
  FittedAccuracyModel constant;
  constant.h = 0.9;
  const auto one = std::vector<LearnerProfile>{profile_of(0.05, 0.05)};
  MechanismState s;
  s.rewards = {0.0};
  s.data_sizes = {0.0};
  expect(rel_ok(0.0, server_payoff(constant, one, s, 100.0)), "payoff empty mechanism");
  s.rewards = {3.0};
  s.data_sizes = {10.0};
  expect(rel_ok(-3.0, server_payoff(constant, one, s, 0.0)), "payoff gamma zero");
  s.rewards = {1.0};
  expect(rel_ok(89.0, server_payoff(constant, one, s, 100.0)), "payoff 90 - 1");
  // optimal reward
  expect(optimal_reward(constant, one, s, 0, 0.0) == 0.0, "reward gamma zero");
  s.data_sizes = {0.0};
  expect(optimal_reward(constant, one, s, 0, 1000.0) == 0.0, "reward zero data");
  const auto two = std::vector<LearnerProfile>{profile_of(0.05, 0.05), profile_of(0.05, 0.05)};
  MechanismState both;
  both.rewards = {0.0, 2.0};
  both.data_sizes = {10.0, 10.0};
  expect(optimal_reward(constant, two, both, 0, 1000.0) == 0.0, "reward zero gain");

  const double secs = seconds_since(t0);
  report(1, ok && secs < 1.0, fmt("formula unit suite at 1e-9 relative tolerance (%.3fs)", secs));
}

// --------------------------------------------------------------------------
// Criterion 5: monotone relaxed solutions on random concave models.
// --------------------------------------------------------------------------
void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20250808);
  int violations = 0;
  const double slack = 2e-3;  // two endpoints at the 1e-3 solver tolerance
  for (int rep = 0; rep < 100; ++rep) {
    FittedAccuracyModel m;
    m.a = rng.next_range(0.02, 0.4);
    m.b = rng.next_range(0.1, 2.0);
    m.c = rng.next_range(0.5, 4.0);
    m.d = rng.next_range(0.3, 1.2);
    m.e = rng.next_range(0.02, 0.4);
    m.f = rng.next_range(5e-4, 5e-2);
    m.g = rng.next_range(0.5, 4.0);
    m.h = rng.next_range(0.1, 1.0);
    const double base_cost = rng.next_range(1e-4, 5e-2);
    std::vector<LearnerProfile> profiles = {profile_of(base_cost / 2, base_cost / 2),
                                            profile_of(5e-10, 5e-10)};
    MechanismState state;
    state.rewards = {0.0, 1.0};
    state.data_sizes = {0.0, rng.next_range(100.0, 800.0)};

    double prev = -1e9;
    double gamma = rng.next_range(1.0, 20.0);
    for (int k = 0; k < 10; ++k) {
      const double d = optimal_data_size_relaxed(m, profiles, state, 0, gamma, 1000.0);
      if (d < prev - slack) ++violations;
      prev = d;
      gamma *= rng.next_range(1.3, 2.5);
    }

    const double gamma_fixed = rng.next_range(20.0, 200.0);
    double prev_alpha = 1e9;
    double alpha = rng.next_range(1e-5, 1e-3);
    for (int k = 0; k < 10; ++k) {
      profiles[0].alpha = alpha;
      profiles[0].beta = base_cost / 2;
      const double d = optimal_data_size_relaxed(m, profiles, state, 0, gamma_fixed, 1000.0);
      if (d > prev_alpha + slack) ++violations;
      prev_alpha = d;
      alpha *= rng.next_range(1.4, 2.2);
    }

    double prev_beta = 1e9;
    double beta = rng.next_range(1e-5, 1e-3);
    for (int k = 0; k < 10; ++k) {
      profiles[0].alpha = base_cost / 2;
      profiles[0].beta = beta;
      const double d = optimal_data_size_relaxed(m, profiles, state, 0, gamma_fixed, 1000.0);
      if (d > prev_beta + slack) ++violations;
      prev_beta = d;
      beta *= rng.next_range(1.4, 2.2);
    }
  }
  const double secs = seconds_since(t0);
  report(5, violations == 0 && secs < 30.0,
         fmt("relaxed size monotone in gamma / costs on 100 concave models, "
             "%d violations beyond solver tolerance (%.1fs)",
             violations, secs));
}

// --------------------------------------------------------------------------
// Criterion 2: alternating optimizer vs brute-force oracle.
// --------------------------------------------------------------------------
void criterion_2(const ExperimentConfig& config, const FittedAccuracyModel& model,
                 const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<OracleInstance> instances = run_oracle_compare(config, model);
  write_oracle_compare(out_dir + "/oracle", config, instances);

  int within = 0;
  int exceeded = 0;
  double worst_gap = 0.0;
  for (const OracleInstance& inst : instances) {
    const double gap = inst.oracle_payoff - inst.alternating_payoff;
    if (inst.alternating_payoff > inst.oracle_payoff + 1e-9) ++exceeded;
    if (gap <= 0.1 * std::max(inst.oracle_payoff, 0.0) + 1e-9) ++within;
    worst_gap = std::max(worst_gap, gap);
  }
  const double secs = seconds_since(t0);
  const double frac = static_cast<double>(within) / instances.size();
  report(2, exceeded == 0 && frac >= 0.8 && secs < 120.0,
         fmt("oracle soundness on %zu instances: oracle exceeded %d times, >=90%% of oracle "
             "payoff on %.0f%%, worst gap %.4g (%.1fs)",
             instances.size(), exceeded, 100.0 * frac, worst_gap, secs));
}

// --------------------------------------------------------------------------
// Criteria 3 and 4: convergence study and block ascent.
// --------------------------------------------------------------------------
void criteria_3_4(const ExperimentConfig& config, const FittedAccuracyModel& model,
                  const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const ConvergenceStudyResult study = run_convergence_study(config, model);
  write_convergence_study(out_dir + "/convergence", config, study);
  const double secs = seconds_since(t0);

  report(3, study.converged_fraction == 1.0 && study.mean_iterations <= 10.0 && secs < 60.0,
         fmt("convergence on %zu runs (N=%d, %d seeds x %zu gammas): %.0f%% converged, "
             "mean %.2f iterations, max %d (%.1fs)",
             study.runs.size(), config.population.n, config.convergence.seeds,
             config.convergence.gammas.size(), 100.0 * study.converged_fraction,
             study.mean_iterations, study.max_iterations, secs));

  int ascent_violations = 0;
  for (const ConvergenceRun& run : study.runs) {
    const auto& trace = run.report.payoff_trace;
    for (std::size_t i = 1; i < trace.size(); ++i) {
      if (trace[i] < trace[i - 1] - 1e-9 * std::max(1.0, std::abs(trace[i - 1]))) {
        ++ascent_violations;
      }
    }
  }
  report(4, ascent_violations == 0,
         fmt("block ascent: payoff traces non-decreasing on all %zu runs (%d violations)",
             study.runs.size(), ascent_violations));
}

// --------------------------------------------------------------------------
// Criteria 6 and 7: surrogate correlation and shape checks.
// --------------------------------------------------------------------------
void criterion_6(const ExperimentConfig& config, const AccuracySweepResult& sweep,
                 double sweep_secs) {
  const double r = sweep.pearson_surrogate_true.value_or(0.0);
  const bool pass = sweep.pearson_surrogate_true.has_value() && r >= 0.5 && sweep_secs < 300.0;
  report(6, pass,
         fmt("surrogate correlation: pearson(realized surrogate, true accuracy) = %.4f, "
             "required >= 0.5 (sweep %.1fs, trials=%d)",
             r, sweep_secs, config.sim.trials));
  if (!pass) {
    std::printf(
        "  note: under this synthetic learner model the realized surrogate reduces, in\n"
        "  expectation, to the mean squared per-sample error rate: the own-dataset precision\n"
        "  term cancels the fault-count term's dependence on the participant count, leaving a\n"
        "  quantity that is flat in N, decreasing in data size, and therefore anti-correlated\n"
        "  with true accuracy. See README (Known behavior) for the derivation sketch.\n");
  }
}

void criterion_7(const ExperimentConfig& config, const AccuracySweepResult& sweep) {
  const std::size_t n_count = config.accuracy.n_values.size();
  const std::size_t d_count = config.accuracy.d_values.size();
  const auto acc = [&](std::size_t ni, std::size_t di) {
    return sweep.cells[ni * d_count + di].summary.true_accuracy;
  };
  const auto se = [&](std::size_t ni, std::size_t di) {
    return sweep.cells[ni * d_count + di].summary.true_accuracy_se;
  };

  int mono_violations = 0;
  int concavity_violations = 0;
  // along N at fixed D
  for (std::size_t di = 0; di < d_count; ++di) {
    for (std::size_t ni = 1; ni < n_count; ++ni) {
      const double tol = 2.0 * std::hypot(se(ni, di), se(ni - 1, di));
      if (acc(ni, di) < acc(ni - 1, di) - tol) ++mono_violations;
    }
    for (std::size_t ni = 1; ni + 1 < n_count; ++ni) {
      const double second = acc(ni + 1, di) - 2.0 * acc(ni, di) + acc(ni - 1, di);
      const double tol =
          2.0 * std::sqrt(se(ni + 1, di) * se(ni + 1, di) + 4.0 * se(ni, di) * se(ni, di) +
                          se(ni - 1, di) * se(ni - 1, di));
      if (second > tol) ++concavity_violations;
    }
  }
  // along D at fixed N
  for (std::size_t ni = 0; ni < n_count; ++ni) {
    for (std::size_t di = 1; di < d_count; ++di) {
      const double tol = 2.0 * std::hypot(se(ni, di), se(ni, di - 1));
      if (acc(ni, di) < acc(ni, di - 1) - tol) ++mono_violations;
    }
    for (std::size_t di = 1; di + 1 < d_count; ++di) {
      const double second = acc(ni, di + 1) - 2.0 * acc(ni, di) + acc(ni, di - 1);
      const double tol =
          2.0 * std::sqrt(se(ni, di + 1) * se(ni, di + 1) + 4.0 * se(ni, di) * se(ni, di) +
                          se(ni, di - 1) * se(ni, di - 1));
      if (second > tol) ++concavity_violations;
    }
  }
  report(7, mono_violations == 0 && concavity_violations == 0,
         fmt("true accuracy concavely increasing over the grid: %d monotonicity and %d "
             "concavity violations beyond 2 stderr",
             mono_violations, concavity_violations));
}

// --------------------------------------------------------------------------
// Criteria 8 and 9: gamma sweep monotonicity and the diversity pattern.
// --------------------------------------------------------------------------
void criteria_8_9(const ExperimentConfig& config, const FittedAccuracyModel& model,
                  const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<GammaSweepPoint> points = run_gamma_sweep(config, model);
  write_gamma_sweep(out_dir + "/gamma_sweep", config, points);
  std::sort(points.begin(), points.end(),
            [](const GammaSweepPoint& a, const GammaSweepPoint& b) { return a.gamma < b.gamma; });

  int participant_violations = 0;
  int accuracy_violations = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].report.n_participants < points[i - 1].report.n_participants) {
      ++participant_violations;
    }
    const double tol = 2.0 * std::hypot(points[i].evaluation.true_accuracy_se,
                                        points[i - 1].evaluation.true_accuracy_se);
    if (points[i].evaluation.true_accuracy < points[i - 1].evaluation.true_accuracy - tol) {
      ++accuracy_violations;
    }
  }
  const double secs = seconds_since(t0);
  report(8, participant_violations == 0 && accuracy_violations == 0,
         fmt("gamma sweep over %zu points: participants non-decreasing (%d violations, exact), "
             "accuracy non-decreasing within 2 stderr (%d violations) (%.1fs)",
             points.size(), participant_violations, accuracy_violations, secs));

  const std::optional<std::string> witness = diversity_rise_fall_witness(points);
  report_info(9, witness ? "diversity rise-then-fall pattern present at gammas " + *witness
                         : "no diversity rise-then-fall pattern beyond stderr (report-only)");
}

// --------------------------------------------------------------------------
// Criterion 10: complexity trend (soft).
// --------------------------------------------------------------------------
void criterion_10(const FittedAccuracyModel& model) {
  const std::vector<int> sizes = {100, 200, 400, 800};
  std::vector<double> log_n, log_t;
  for (int n : sizes) {
    PopulationConfig pop;
    pop.n = n;
    const auto profiles = draw_population(pop, derive_seed(1, 0xC0, n));
    ServerConfig server;
    server.gamma = 3000.0;
    server.convergence_tol = 1e-9;  // keeps every run at exactly max_iterations passes
    server.max_iterations = 10;
    double best = 1e100;
    for (int rep = 0; rep < 7; ++rep) {
      const OptimizerReport report = alternate_optimize(model, profiles, server);
      best = std::min(best, report.wall_time);
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_t.push_back(std::log(std::max(best, 1e-9)));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    mx += log_n[i];
    my += log_t[i];
  }
  mx /= log_n.size();
  my /= log_t.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sxx += (log_n[i] - mx) * (log_n[i] - mx);
    sxy += (log_n[i] - mx) * (log_t[i] - my);
  }
  const double slope = sxy / sxx;
  const bool in_band = slope >= 0.8 && slope <= 1.3;
  report(10, true,
         fmt("wall-time scaling across N in {100,200,400,800} at fixed L=10: log-log slope %.2f%s",
             slope, in_band ? "" : " [WARN: outside [0.8, 1.3], reported softly]"));
}

// --------------------------------------------------------------------------
// Criterion 11: byte-identical reruns.
// --------------------------------------------------------------------------
void criterion_11(const FittedAccuracyModel& model, const std::string& out_dir) {
  namespace fs = std::filesystem;
  ExperimentConfig small;
  small.sim.pool_size = 3000;
  small.sim.trials = 4;
  small.sim.seed = 31;
  small.server.seed = 31;
  small.population.n = 12;
  small.accuracy.n_values = {3, 8};
  small.accuracy.d_values = {150, 600};
  small.sweep.values = {300, 3000};
  small.convergence.seeds = 2;
  small.convergence.gammas = {400, 4000};
  small.oracle.instances = 4;

  const auto run_all = [&](const std::string& dir) {
    write_accuracy_sweep(dir + "/sweep", small, run_accuracy_sweep(small));
    write_convergence_study(dir + "/convergence", small, run_convergence_study(small, model));
    write_gamma_sweep(dir + "/gamma", small, run_gamma_sweep(small, model));
    write_oracle_compare(dir + "/oracle", small, run_oracle_compare(small, model));
  };
  const std::string dir_a = out_dir + "/determinism_a";
  const std::string dir_b = out_dir + "/determinism_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  run_all(dir_a);
  run_all(dir_b);

  int compared = 0;
  int mismatched = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir_a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir_a);
    ++compared;
    if (read_text_file(entry.path().string()) !=
        read_text_file((fs::path(dir_b) / rel).string())) {
      ++mismatched;
      std::printf("  determinism mismatch: %s\n", rel.string().c_str());
    }
  }
  report(11, compared >= 12 && mismatched == 0,
         fmt("repeated runs byte-identical across %d output files (%d mismatches)", compared,
             mismatched));
}

}  // namespace

int main() {
  const auto t_start = std::chrono::steady_clock::now();
  const std::string out_dir = "acceptance_out";
  ensure_directory(out_dir);

  criterion_1();
  criterion_5();

  // Shared default-configuration sweep (trials=200): powers criteria 6 and 7
  // and produces the fitted models used by the optimizer criteria.
  ExperimentConfig defaults;
  defaults.sim.trials = 200;
  std::printf("running the default accuracy sweep (%zu cells, trials=%d)...\n",
              defaults.accuracy.n_values.size() * defaults.accuracy.d_values.size(),
              defaults.sim.trials);
  const auto t_sweep = std::chrono::steady_clock::now();
  const AccuracySweepResult sweep = run_accuracy_sweep(defaults);
  const double sweep_secs = seconds_since(t_sweep);
  write_accuracy_sweep(out_dir + "/accuracy_sweep", defaults, sweep);
  if (!sweep.accuracy_model) {
    std::printf("[FAIL] accuracy sweep produced no fitted model (%s); aborting\n",
                sweep.fit_status.c_str());
    return 1;
  }
  // The optimizer criteria run on the fitted true-accuracy surface. The
  // surface fitted to the realized surrogate is decreasing in data size here
  // (see criterion 6), which would drive every data-size update to zero and
  // make the mechanism criteria vacuous.
  const FittedAccuracyModel model = *sweep.accuracy_model;
  std::printf("fitted accuracy surface rmse = %.4f; fitted surrogate surface rmse = %.4f\n",
              model.rmse, sweep.surrogate_model ? sweep.surrogate_model->rmse : -1.0);

  criterion_2(defaults, model, out_dir);
  criteria_3_4(defaults, model, out_dir);
  criterion_6(defaults, sweep, sweep_secs);
  criterion_7(defaults, sweep);
  criteria_8_9(defaults, model, out_dir);
  criterion_10(model);
  criterion_11(model, out_dir);

  std::printf("acceptance finished in %.1fs with %d failing criteria\n", seconds_since(t_start),
              g_failures);
  return g_failures;
}
