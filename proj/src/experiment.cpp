#include "delm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "delm/errors.hpp"
#include "delm/rng.hpp"
#include "delm/util.hpp"

namespace delm {

namespace {

constexpr std::uint64_t kPopulationStream = 0x706f70756cULL;
constexpr std::uint64_t kAccuracyStream = 0x61636375ULL;
constexpr std::uint64_t kGammaStream = 0x67616d6dULL;
constexpr std::uint64_t kOracleStream = 0x6f7261636cULL;
constexpr std::uint64_t kFitStream = 0x666974ULL;

struct ActiveStats {
  int count = 0;
  double total_data = 0.0;
};

ActiveStats active_stats(std::span<const LearnerProfile> profiles, const MechanismState& state) {
  ActiveStats s;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (is_active(profiles[i], state.rewards[i], state.data_sizes[i])) {
      ++s.count;
      s.total_data += state.data_sizes[i];
    }
  }
  return s;
}

}  // namespace

AccuracySweepResult run_accuracy_sweep(const ExperimentConfig& config) {
  config.validate();
  AccuracySweepResult result;

  int max_n = 0;
  for (double n : config.accuracy.n_values) max_n = std::max(max_n, static_cast<int>(n));
  PopulationConfig pop = config.population;
  pop.n = max_n;
  const std::vector<LearnerProfile> profiles =
      draw_population(pop, derive_seed(config.server.seed, kPopulationStream, 0));

  result.cells.resize(config.accuracy.n_values.size() * config.accuracy.d_values.size());
  parallel_for(result.cells.size(), [&](std::size_t cell) {
    const std::size_t ni = cell / config.accuracy.d_values.size();
    const std::size_t di = cell % config.accuracy.d_values.size();
    const int n = static_cast<int>(config.accuracy.n_values[ni]);
    const double d = config.accuracy.d_values[di];

    std::span<const LearnerProfile> sub(profiles.data(), static_cast<std::size_t>(n));
    MechanismState state;
    state.rewards.resize(static_cast<std::size_t>(n));
    state.data_sizes.assign(static_cast<std::size_t>(n), d);
    for (int i = 0; i < n; ++i) state.rewards[i] = sub[i].unit_cost() * d;

    SimConfig sim = config.sim;
    sim.seed = derive_seed(config.sim.seed, kAccuracyStream, cell);
    AccuracyCell& out = result.cells[cell];
    out.n_learners = n;
    out.data_per_learner = d;
    out.summary = simulate_ensemble(sub, state, sim);
  });

  std::vector<FitSample> surrogate_samples, accuracy_samples;
  std::vector<double> surrogate_col, accuracy_col;
  for (const AccuracyCell& cell : result.cells) {
    surrogate_samples.push_back({cell.n_learners, cell.summary.total_data, cell.summary.surrogate});
    accuracy_samples.push_back({cell.n_learners, cell.summary.total_data, cell.summary.true_accuracy});
    surrogate_col.push_back(cell.summary.surrogate);
    accuracy_col.push_back(cell.summary.true_accuracy);
  }

  try {
    FitOptions opts;
    opts.seed = derive_seed(config.server.seed, kFitStream, 0);
    result.surrogate_model = fit_accuracy_model(surrogate_samples, opts);
    opts.seed = derive_seed(config.server.seed, kFitStream, 1);
    result.accuracy_model = fit_accuracy_model(accuracy_samples, opts);
    result.fit_status = "ok";
  } catch (const std::exception& ex) {
    result.fit_status = ex.what();
  }

  try {
    result.pearson_surrogate_true = pearson(surrogate_col, accuracy_col);
  } catch (const std::exception&) {
    result.pearson_surrogate_true = std::nullopt;
  }
  return result;
}

ConvergenceStudyResult run_convergence_study(const ExperimentConfig& config,
                                             const FittedAccuracyModel& model) {
  config.validate();
  ConvergenceStudyResult result;
  const int n_gammas = static_cast<int>(config.convergence.gammas.size());
  result.runs.resize(static_cast<std::size_t>(config.convergence.seeds) * n_gammas);

  parallel_for(result.runs.size(), [&](std::size_t run) {
    const int seed_idx = static_cast<int>(run) / n_gammas;
    const int gamma_idx = static_cast<int>(run) % n_gammas;
    const std::uint64_t pop_seed = derive_seed(config.server.seed, kPopulationStream, seed_idx);
    const std::vector<LearnerProfile> profiles = draw_population(config.population, pop_seed);

    ServerConfig server = config.server;
    server.gamma = config.convergence.gammas[static_cast<std::size_t>(gamma_idx)];
    ConvergenceRun& out = result.runs[run];
    out.seed = pop_seed;
    out.gamma = server.gamma;
    out.report = alternate_optimize(model, profiles, server);
    const ActiveStats stats = active_stats(profiles, out.report.final_state);
    out.total_data = stats.total_data;
    out.mean_data_size = stats.count > 0 ? stats.total_data / stats.count : 0.0;
  });

  double iter_sum = 0.0;
  int converged = 0;
  for (const ConvergenceRun& run : result.runs) {
    iter_sum += run.report.iterations_used;
    result.max_iterations = std::max(result.max_iterations, run.report.iterations_used);
    converged += run.report.converged ? 1 : 0;
  }
  result.mean_iterations = result.runs.empty() ? 0.0 : iter_sum / result.runs.size();
  result.converged_fraction =
      result.runs.empty() ? 0.0 : static_cast<double>(converged) / result.runs.size();
  return result;
}

std::vector<GammaSweepPoint> run_gamma_sweep(const ExperimentConfig& config,
                                             const FittedAccuracyModel& model) {
  config.validate();
  const std::vector<LearnerProfile> profiles =
      draw_population(config.population, derive_seed(config.server.seed, kPopulationStream, 0));
  const std::vector<double> gammas = config.sweep_gammas();

  std::vector<GammaSweepPoint> points(gammas.size());
  parallel_for(points.size(), [&](std::size_t i) {
    ServerConfig server = config.server;
    server.gamma = gammas[i];
    GammaSweepPoint& point = points[i];
    point.gamma = gammas[i];
    point.report = alternate_optimize(model, profiles, server);

    SimConfig sim = config.sim;
    sim.seed = derive_seed(config.sim.seed, kGammaStream, i);
    point.evaluation = simulate_ensemble(profiles, point.report.final_state, sim);
  });
  return points;
}

std::optional<std::string> diversity_rise_fall_witness(
    const std::vector<GammaSweepPoint>& points) {
  bool found = false;
  double best_margin = 0.0;
  std::string witness;
  for (std::size_t j = 1; j + 1 < points.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      for (std::size_t k = j + 1; k < points.size(); ++k) {
        const auto& a = points[i].evaluation;
        const auto& b = points[j].evaluation;
        const auto& c = points[k].evaluation;
        const double up = b.diversity - a.diversity;
        const double down = b.diversity - c.diversity;
        const double up_se =
            std::sqrt(a.diversity_se * a.diversity_se + b.diversity_se * b.diversity_se);
        const double down_se =
            std::sqrt(b.diversity_se * b.diversity_se + c.diversity_se * c.diversity_se);
        if (up > up_se && down > down_se) {
          const double margin = std::min(up - up_se, down - down_se);
          if (!found || margin > best_margin) {
            best_margin = margin;
            witness = fmt_double(points[i].gamma) + " < " + fmt_double(points[j].gamma) + " > " +
                      fmt_double(points[k].gamma);
          }
          found = true;
        }
      }
    }
  }
  if (!found) return std::nullopt;
  return witness;
}

std::vector<OracleInstance> run_oracle_compare(const ExperimentConfig& config,
                                               const FittedAccuracyModel& model) {
  config.validate();
  std::vector<OracleInstance> instances(static_cast<std::size_t>(config.oracle.instances));
  const double d_top = *std::max_element(config.oracle.d_grid.begin(), config.oracle.d_grid.end());

  parallel_for(instances.size(), [&](std::size_t i) {
    Rng rng(derive_seed(config.server.seed, kOracleStream, i));
    OracleInstance& inst = instances[i];
    inst.index = static_cast<int>(i);
    inst.n_learners =
        static_cast<int>(config.oracle.n_learners[i % config.oracle.n_learners.size()]);
    inst.gamma = std::exp(
        rng.next_range(std::log(config.oracle.gamma_low), std::log(config.oracle.gamma_high)));

    std::vector<LearnerProfile> profiles;
    for (int k = 0; k < inst.n_learners; ++k) {
      const double total = rng.next_range(config.population.cost_low, config.population.cost_high);
      LearnerProfile p;
      p.id = k;
      p.alpha = config.population.alpha_fraction * total;
      p.beta = total - p.alpha;
      profiles.push_back(p);
    }

    const OracleResult oracle =
        brute_force_oracle(model, profiles, inst.gamma, config.oracle.d_grid);
    inst.oracle_payoff = oracle.best_payoff;
    inst.oracle_states = oracle.states_evaluated;

    ServerConfig server = config.server;
    server.gamma = inst.gamma;
    server.d_max = std::max(1.0, d_top);
    AlternateOptions options;
    options.round_grid = config.oracle.d_grid;
    inst.alternating_payoff = alternate_optimize(model, profiles, server, options).server_payoff;
  });
  return instances;
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

namespace {

void write_config_echo(const std::string& dir, const ExperimentConfig& config) {
  write_text_file(dir + "/config_echo.cfg", config_echo(config));
}

std::vector<double> summary_row(const EnsembleSummary& s) {
  return {static_cast<double>(s.n_participants),
          s.n_participants > 0 ? s.total_data / s.n_participants : 0.0,
          s.total_data,
          s.surrogate,
          s.surrogate_se,
          s.true_accuracy,
          s.true_accuracy_se,
          s.diversity,
          s.diversity_se,
          s.precision_term,
          s.precision_term_se,
          s.mean_union_size,
          s.mean_precision};
}

const std::vector<std::string> kSummaryColumns = {
    "n_participants",  "mean_data_size",   "total_data",
    "surrogate_f",     "surrogate_f_se",   "true_accuracy",
    "true_accuracy_se", "diversity_term",  "diversity_term_se",
    "precision_term",  "precision_term_se", "mean_union_size",
    "mean_precision"};

}  // namespace

void write_accuracy_sweep(const std::string& dir, const ExperimentConfig& config,
                          const AccuracySweepResult& result) {
  ensure_directory(dir);
  write_config_echo(dir, config);

  CsvTable table(kSummaryColumns);
  for (const AccuracyCell& cell : result.cells) table.add_row(summary_row(cell.summary));
  table.save(dir + "/accuracy_sweep.csv");

  if (result.surrogate_model) result.surrogate_model->save(dir + "/fitted_surrogate.model");
  if (result.accuracy_model) result.accuracy_model->save(dir + "/fitted_accuracy.model");

  KeyValueRecord summary;
  summary.put("cells", static_cast<std::int64_t>(result.cells.size()));
  summary.put("trials", static_cast<std::int64_t>(config.sim.trials));
  summary.put("seed", std::to_string(config.sim.seed));
  summary.put("fit_status", result.fit_status);
  if (result.surrogate_model) summary.put("surrogate_fit_rmse", result.surrogate_model->rmse);
  if (result.accuracy_model) summary.put("accuracy_fit_rmse", result.accuracy_model->rmse);
  if (result.pearson_surrogate_true) {
    summary.put("pearson_surrogate_true", *result.pearson_surrogate_true);
  } else {
    summary.put("pearson_surrogate_true", "undefined");
  }
  summary.save(dir + "/summary.txt");
}

void write_convergence_study(const std::string& dir, const ExperimentConfig& config,
                             const ConvergenceStudyResult& result) {
  ensure_directory(dir);
  write_config_echo(dir, config);

  CsvTable runs({"seed", "gamma", "iterations_used", "converged", "n_participants",
                 "mean_data_size", "total_data", "server_payoff"});
  CsvTable traces({"seed", "gamma", "pass", "payoff"});
  for (const ConvergenceRun& run : result.runs) {
    runs.add_row({std::to_string(run.seed), fmt_double(run.gamma),
                  std::to_string(run.report.iterations_used),
                  run.report.converged ? "1" : "0",
                  std::to_string(run.report.n_participants), fmt_double(run.mean_data_size),
                  fmt_double(run.total_data), fmt_double(run.report.server_payoff)});
    for (std::size_t pass = 0; pass < run.report.payoff_trace.size(); ++pass) {
      traces.add_row({std::to_string(run.seed), fmt_double(run.gamma),
                      std::to_string(pass + 1), fmt_double(run.report.payoff_trace[pass])});
    }
  }
  runs.save(dir + "/convergence.csv");
  traces.save(dir + "/traces.csv");

  KeyValueRecord summary;
  summary.put("runs", static_cast<std::int64_t>(result.runs.size()));
  summary.put("converged_fraction", result.converged_fraction);
  summary.put("mean_iterations", result.mean_iterations);
  summary.put("max_iterations", static_cast<std::int64_t>(result.max_iterations));
  summary.save(dir + "/summary.txt");
}

void write_gamma_sweep(const std::string& dir, const ExperimentConfig& config,
                       const std::vector<GammaSweepPoint>& points) {
  ensure_directory(dir);
  write_config_echo(dir, config);

  std::vector<std::string> cols = {"gamma"};
  cols.insert(cols.end(), kSummaryColumns.begin(), kSummaryColumns.end());
  cols.insert(cols.end(), {"iterations_used", "converged", "server_payoff"});
  CsvTable table(cols);
  for (const GammaSweepPoint& p : points) {
    std::vector<std::string> row = {fmt_double(p.gamma)};
    for (double v : summary_row(p.evaluation)) row.push_back(fmt_double(v));
    row.push_back(std::to_string(p.report.iterations_used));
    row.push_back(p.report.converged ? "1" : "0");
    row.push_back(fmt_double(p.report.server_payoff));
    table.add_row(row);
  }
  table.save(dir + "/gamma_sweep.csv");

  const std::optional<std::string> witness = diversity_rise_fall_witness(points);
  KeyValueRecord summary;
  summary.put("points", static_cast<std::int64_t>(points.size()));
  summary.put("diversity_rise_then_fall", witness ? "yes" : "no");
  if (witness) summary.put("diversity_rise_then_fall_witness", *witness);
  summary.save(dir + "/summary.txt");
}

void write_oracle_compare(const std::string& dir, const ExperimentConfig& config,
                          const std::vector<OracleInstance>& instances) {
  ensure_directory(dir);
  write_config_echo(dir, config);

  CsvTable table({"instance", "n_learners", "gamma", "oracle_payoff", "alternating_payoff",
                  "gap", "ratio", "oracle_states"});
  int within = 0;
  bool never_exceeded = true;
  for (const OracleInstance& inst : instances) {
    const double gap = inst.oracle_payoff - inst.alternating_payoff;
    const double ratio = inst.oracle_payoff > 1e-12
                             ? inst.alternating_payoff / inst.oracle_payoff
                             : (gap <= 1e-9 ? 1.0 : 0.0);
    if (gap <= 0.1 * std::max(inst.oracle_payoff, 0.0) + 1e-9) ++within;
    if (inst.alternating_payoff > inst.oracle_payoff + 1e-9) never_exceeded = false;
    table.add_row({std::to_string(inst.index), std::to_string(inst.n_learners),
                   fmt_double(inst.gamma), fmt_double(inst.oracle_payoff),
                   fmt_double(inst.alternating_payoff), fmt_double(gap), fmt_double(ratio),
                   std::to_string(inst.oracle_states)});
  }
  table.save(dir + "/oracle_compare.csv");

  KeyValueRecord summary;
  summary.put("instances", static_cast<std::int64_t>(instances.size()));
  summary.put("within_90pct_fraction",
              instances.empty() ? 0.0 : static_cast<double>(within) / instances.size());
  summary.put("oracle_never_exceeded", never_exceeded ? "yes" : "no");
  summary.save(dir + "/summary.txt");
}

void write_optimize_report(const std::string& dir, const ExperimentConfig& config,
                           const std::vector<LearnerProfile>& profiles,
                           const OptimizerReport& report) {
  ensure_directory(dir);
  write_config_echo(dir, config);

  CsvTable state({"learner", "alpha", "beta", "reward", "data_size", "active"});
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    state.add_row({std::to_string(profiles[i].id), fmt_double(profiles[i].alpha),
                   fmt_double(profiles[i].beta), fmt_double(report.final_state.rewards[i]),
                   fmt_double(report.final_state.data_sizes[i]),
                   is_active(profiles[i], report.final_state.rewards[i],
                             report.final_state.data_sizes[i])
                       ? "1"
                       : "0"});
  }
  state.save(dir + "/final_state.csv");

  CsvTable trace({"pass", "payoff"});
  for (std::size_t i = 0; i < report.payoff_trace.size(); ++i) {
    trace.add_row({std::to_string(i + 1), fmt_double(report.payoff_trace[i])});
  }
  trace.save(dir + "/optimize_trace.csv");

  const ActiveStats stats = active_stats(profiles, report.final_state);
  KeyValueRecord rec;
  rec.put("server_payoff", report.server_payoff);
  rec.put("n_participants", static_cast<std::int64_t>(report.n_participants));
  rec.put("iterations_used", static_cast<std::int64_t>(report.iterations_used));
  rec.put("converged", report.converged ? "yes" : "no");
  rec.put("total_data", stats.total_data);
  rec.put("mean_data_size", stats.count > 0 ? stats.total_data / stats.count : 0.0);
  rec.save(dir + "/report.txt");
}

}  // namespace delm
