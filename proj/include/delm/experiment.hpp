#pragma once

#include <optional>
#include <string>
#include <vector>

#include "delm/bagging_sim.hpp"
#include "delm/core_model.hpp"
#include "delm/optimizer.hpp"
#include "delm/surrogate.hpp"

namespace delm {

/// Learner population: alpha_i + beta_i drawn uniformly in [cost_low,
/// cost_high], split between alpha and beta by alpha_fraction.
struct PopulationConfig {
  int n = 100;
  double cost_low = 1e-5;
  double cost_high = 1e-3;
  double alpha_fraction = 0.5;
};

struct SweepConfig {
  std::string parameter = "gamma";
  std::vector<double> values;  // empty: 16 log-spaced points in [500, 8000]
};

struct AccuracyGridConfig {
  std::vector<double> n_values{5, 24, 43, 62, 81, 100};      // learners per cell
  std::vector<double> d_values{200, 400, 600, 800, 1000};    // data per learner
};

struct ConvergenceConfig {
  int seeds = 20;
  std::vector<double> gammas{500, 1000, 2000, 4000, 8000};
};

struct OracleConfig {
  int instances = 50;
  std::vector<double> n_learners{2, 3, 4};
  std::vector<double> d_grid{0, 250, 500, 750, 1000};
  double gamma_low = 0.5;
  double gamma_high = 5000.0;
};

struct ExperimentConfig {
  SimConfig sim;
  ServerConfig server;
  PopulationConfig population;
  SweepConfig sweep;
  AccuracyGridConfig accuracy;
  ConvergenceConfig convergence;
  OracleConfig oracle;
  std::string output_dir = "out";

  std::vector<double> sweep_gammas() const;  // resolved sweep values
  void validate() const;
};

/// Parses the line-oriented "section.key = value" format. Unknown keys,
/// malformed lines, and per-key constraint violations raise ConfigParseError
/// with the line number; an empty file yields all defaults.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Reparsable echo of every setting (written next to run outputs).
std::string config_echo(const ExperimentConfig& config);

std::vector<LearnerProfile> draw_population(const PopulationConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Study runners. Each returns plain rows; write_* emits the CSV/record files.
// ---------------------------------------------------------------------------

struct AccuracyCell {
  int n_learners = 0;
  double data_per_learner = 0.0;
  EnsembleSummary summary;
};

struct AccuracySweepResult {
  std::vector<AccuracyCell> cells;
  std::optional<FittedAccuracyModel> surrogate_model;
  std::optional<FittedAccuracyModel> accuracy_model;
  std::string fit_status;              // "ok" or reason no fit was attempted
  std::optional<double> pearson_surrogate_true;
};

/// Grid of (learner count x per-learner data) simulations; fits the
/// parametric surface to both the realized surrogate and the realized true
/// accuracy, and reports their Pearson correlation across cells.
AccuracySweepResult run_accuracy_sweep(const ExperimentConfig& config);

struct ConvergenceRun {
  std::uint64_t seed = 0;
  double gamma = 0.0;
  double total_data = 0.0;      // over active learners in the final state
  double mean_data_size = 0.0;
  OptimizerReport report;
};

struct ConvergenceStudyResult {
  std::vector<ConvergenceRun> runs;
  double mean_iterations = 0.0;
  int max_iterations = 0;
  double converged_fraction = 0.0;
};

ConvergenceStudyResult run_convergence_study(const ExperimentConfig& config,
                                             const FittedAccuracyModel& model);

struct GammaSweepPoint {
  double gamma = 0.0;
  OptimizerReport report;
  EnsembleSummary evaluation;  // final rounded state replayed in the simulator
};

std::vector<GammaSweepPoint> run_gamma_sweep(const ExperimentConfig& config,
                                             const FittedAccuracyModel& model);

/// Looks for gammas g1 < g2 < g3 whose realized diversity rises then falls
/// with margins above the combined stderr; returns a "g1 < g2 > g3" witness.
std::optional<std::string> diversity_rise_fall_witness(
    const std::vector<GammaSweepPoint>& points);

struct OracleInstance {
  int index = 0;
  int n_learners = 0;
  double gamma = 0.0;
  double oracle_payoff = 0.0;
  double alternating_payoff = 0.0;
  std::int64_t oracle_states = 0;
};

std::vector<OracleInstance> run_oracle_compare(const ExperimentConfig& config,
                                               const FittedAccuracyModel& model);

// File emitters (CSV column orders are documented in the README).
void write_accuracy_sweep(const std::string& dir, const ExperimentConfig& config,
                          const AccuracySweepResult& result);
void write_convergence_study(const std::string& dir, const ExperimentConfig& config,
                             const ConvergenceStudyResult& result);
void write_gamma_sweep(const std::string& dir, const ExperimentConfig& config,
                       const std::vector<GammaSweepPoint>& points);
void write_oracle_compare(const std::string& dir, const ExperimentConfig& config,
                          const std::vector<OracleInstance>& instances);
void write_optimize_report(const std::string& dir, const ExperimentConfig& config,
                           const std::vector<LearnerProfile>& profiles,
                           const OptimizerReport& report);

}  // namespace delm
