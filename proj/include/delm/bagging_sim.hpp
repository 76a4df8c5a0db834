#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "delm/core_model.hpp"
#include "delm/rng.hpp"
#include "delm/surrogate.hpp"

namespace delm {

/// Synthetic learner population in place of real model training: precision
/// follows a saturating learning curve, and errors are positively correlated
/// across learners through a shared per-sample difficulty.
struct SimConfig {
  std::int64_t pool_size = 60000;  // distinct samples in the server's dataset
  int n_classes = 10;
  double p_max = 0.97;             // asymptotic precision
  double kappa = 800.0;            // learning-curve scale, in samples
  double difficulty_alpha = 2.0;   // Beta shape of per-sample difficulty
  double difficulty_beta = 5.0;
  int trials = 20;                 // Monte-Carlo repetitions
  std::uint64_t seed = 1234;

  double chance_accuracy() const { return 1.0 / n_classes; }
  void validate() const;
};

/// Multiset draws per learner plus the distinct union, ids ascending.
struct BootstrapAssignment {
  std::vector<std::vector<std::int32_t>> draws;
  std::vector<std::int32_t> union_ids;
};

/// Samples data_sizes[i] ids uniformly with replacement from [0, pool_size).
BootstrapAssignment bootstrap_assign(std::span<const std::int64_t> data_sizes,
                                     std::int64_t pool_size, Rng& rng);

/// chance + (p_max - chance) * (1 - exp(-data_size / kappa)); monotone
/// non-decreasing and concave in data_size.
double precision_curve(const SimConfig& config, double data_size);

/// Correct/incorrect entries for every participant on every union sample,
/// column-major (column d occupies [d*n_participants, (d+1)*n_participants)).
struct CorrectnessMatrix {
  int n_participants = 0;
  std::int64_t union_size = 0;
  std::vector<std::uint8_t> correct;
  std::vector<std::vector<std::int32_t>> own_columns;  // per participant, with multiplicity

  bool at(int participant, std::int64_t column) const {
    return correct[static_cast<std::size_t>(column) * n_participants + participant] != 0;
  }
};

/// One realized round: the raw matrix plus the derived outcome.
struct TrialResult {
  CorrectnessMatrix matrix;
  EnsembleOutcome outcome;
  std::vector<int> participant_ids;  // indices into the profile span
};

TrialResult simulate_trial(std::span<const LearnerProfile> profiles, const MechanismState& state,
                           const SimConfig& config, std::uint64_t trial_seed);

/// Trial-averaged outcome statistics; *_se fields are standard errors of the
/// mean over trials (0 when trials == 1).
struct EnsembleSummary {
  int n_participants = 0;
  int trials = 0;
  double total_data = 0.0;  // assigned data over active learners
  double mean_union_size = 0.0;
  double mean_precision = 0.0;
  double true_accuracy = 0.0, true_accuracy_se = 0.0;
  double surrogate = 0.0, surrogate_se = 0.0;
  double diversity = 0.0, diversity_se = 0.0;          // 0 when N^P < 2
  double precision_term = 0.0, precision_term_se = 0.0;
  std::vector<double> learner_precision;  // per active learner
};

/// Runs config.trials independent rounds (seeds derived from config.seed)
/// and aggregates in fixed trial order. Participation is the reward-threshold
/// rule with zero-data learners excluded; no participants gives chance
/// accuracy.
EnsembleSummary simulate_ensemble(std::span<const LearnerProfile> profiles,
                                  const MechanismState& state, const SimConfig& config);

}  // namespace delm
