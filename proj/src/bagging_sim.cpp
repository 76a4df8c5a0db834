#include "delm/bagging_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace delm {

void SimConfig::validate() const {
  if (pool_size < 1) throw std::invalid_argument("pool_size must be >= 1");
  if (n_classes < 2) throw std::invalid_argument("n_classes must be >= 2");
  if (!(p_max > chance_accuracy() && p_max <= 1.0)) {
    throw std::invalid_argument("p_max must be in (chance_accuracy, 1]");
  }
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  if (!(difficulty_alpha > 0.0) || !(difficulty_beta > 0.0)) {
    throw std::invalid_argument("difficulty shape parameters must be > 0");
  }
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
}

BootstrapAssignment bootstrap_assign(std::span<const std::int64_t> data_sizes,
                                     std::int64_t pool_size, Rng& rng) {
  if (pool_size < 1) throw std::invalid_argument("pool_size must be >= 1");
  BootstrapAssignment out;
  out.draws.resize(data_sizes.size());
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(pool_size), 0);
  for (std::size_t i = 0; i < data_sizes.size(); ++i) {
    if (data_sizes[i] < 0) throw std::invalid_argument("data_size must be >= 0");
    auto& mine = out.draws[i];
    mine.resize(static_cast<std::size_t>(data_sizes[i]));
    for (auto& id : mine) {
      id = static_cast<std::int32_t>(rng.next_below(pool_size));
      if (!seen[id]) {
        seen[id] = 1;
        out.union_ids.push_back(id);
      }
    }
  }
  std::sort(out.union_ids.begin(), out.union_ids.end());
  return out;
}

double precision_curve(const SimConfig& config, double data_size) {
  if (data_size < 0.0) throw std::invalid_argument("data_size must be >= 0");
  const double chance = config.chance_accuracy();
  return chance + (config.p_max - chance) * (1.0 - std::exp(-data_size / config.kappa));
}

TrialResult simulate_trial(std::span<const LearnerProfile> profiles, const MechanismState& state,
                           const SimConfig& config, std::uint64_t trial_seed) {
  config.validate();
  if (state.size() != profiles.size()) {
    throw std::invalid_argument("state size must match profile count");
  }
  TrialResult res;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (is_active(profiles[i], state.rewards[i], state.data_sizes[i])) {
      res.participant_ids.push_back(static_cast<int>(i));
    }
  }
  const int np = static_cast<int>(res.participant_ids.size());
  res.matrix.n_participants = np;
  res.outcome.n_participants = np;
  if (np == 0) {
    res.outcome.true_accuracy = config.chance_accuracy();
    return res;
  }

  Rng rng(trial_seed);
  std::vector<std::int64_t> sizes(np);
  for (int j = 0; j < np; ++j) {
    sizes[j] = std::llround(state.data_sizes[res.participant_ids[j]]);
  }
  const BootstrapAssignment assign = bootstrap_assign(sizes, config.pool_size, rng);
  const std::int64_t dt = static_cast<std::int64_t>(assign.union_ids.size());
  res.matrix.union_size = dt;
  res.outcome.union_size = dt;
  res.outcome.fault_counts.assign(static_cast<std::size_t>(dt), 0);

  // Error probability of learner j on a sample with difficulty h is
  // min(1, (1 - p_j) * h / mean_h); the shared h makes errors positively
  // correlated across learners while keeping the marginal near 1 - p_j.
  const double mean_h = config.difficulty_alpha / (config.difficulty_alpha + config.difficulty_beta);
  std::vector<double> err_scale(np);
  for (int j = 0; j < np; ++j) {
    err_scale[j] = (1.0 - precision_curve(config, static_cast<double>(sizes[j]))) / mean_h;
  }

  res.matrix.correct.assign(static_cast<std::size_t>(dt) * np, 0);
  std::vector<int> votes(config.n_classes);
  std::int64_t correct_columns = 0;
  for (std::int64_t d = 0; d < dt; ++d) {
    const double h = rng.next_beta(config.difficulty_alpha, config.difficulty_beta);
    std::fill(votes.begin(), votes.end(), 0);
    std::uint8_t* col = res.matrix.correct.data() + static_cast<std::size_t>(d) * np;
    for (int j = 0; j < np; ++j) {
      // error probability is min(1, err_scale * h); the clamp is implicit
      // since the uniform draw is always below 1
      if (rng.next_unit() < err_scale[j] * h) {
        // Wrong predictions land uniformly on the other labels (the true
        // label is relabeled to 0 per sample, which is distribution-exact).
        ++votes[1 + rng.next_below(config.n_classes - 1)];
      } else {
        col[j] = 1;
        ++votes[0];
      }
    }
    res.outcome.fault_counts[static_cast<std::size_t>(d)] = np - votes[0];
    int top = 0;
    for (int label = 0; label < config.n_classes; ++label) top = std::max(top, votes[label]);
    if (votes[0] == top) {
      int tied = 0;
      for (int label = 0; label < config.n_classes; ++label) tied += votes[label] == top;
      if (tied == 1 || rng.next_unit() * tied < 1.0) ++correct_columns;
    }
  }
  res.outcome.true_accuracy =
      dt > 0 ? static_cast<double>(correct_columns) / static_cast<double>(dt)
             : config.chance_accuracy();

  // Own-dataset precision, with multiplicity (a sample drawn twice counts
  // twice, matching accuracy over the training multiset).
  res.matrix.own_columns.resize(np);
  res.outcome.precisions.resize(np);
  double precision_sum = 0.0;
  for (int j = 0; j < np; ++j) {
    const auto& mine = assign.draws[static_cast<std::size_t>(j)];
    auto& cols = res.matrix.own_columns[static_cast<std::size_t>(j)];
    cols.reserve(mine.size());
    std::int64_t own_correct = 0;
    for (std::int32_t id : mine) {
      const auto it = std::lower_bound(assign.union_ids.begin(), assign.union_ids.end(), id);
      const auto colidx = static_cast<std::int32_t>(it - assign.union_ids.begin());
      cols.push_back(colidx);
      own_correct += res.matrix.correct[static_cast<std::size_t>(colidx) * np + j];
    }
    const double p = mine.empty() ? config.chance_accuracy()
                                  : static_cast<double>(own_correct) / mine.size();
    res.outcome.precisions[static_cast<std::size_t>(j)] = p;
    precision_sum += p;
  }
  res.outcome.mean_precision = precision_sum / np;
  return res;
}

namespace {

struct Accumulator {
  double sum = 0.0, sum_sq = 0.0;
  int n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double stderr_mean() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1));
    return std::sqrt(var / n);
  }
};

}  // namespace

EnsembleSummary simulate_ensemble(std::span<const LearnerProfile> profiles,
                                  const MechanismState& state, const SimConfig& config) {
  config.validate();
  EnsembleSummary out;
  out.trials = config.trials;
  Accumulator acc, sur, div, prec, unions, pbar;
  std::vector<double> learner_sum;
  for (int t = 0; t < config.trials; ++t) {
    const TrialResult trial =
        simulate_trial(profiles, state, config, derive_seed(config.seed, 0x7261696cULL, t));
    const int np = trial.outcome.n_participants;
    if (t == 0) {
      out.n_participants = np;
      learner_sum.assign(static_cast<std::size_t>(np), 0.0);
      for (int idx : trial.participant_ids) out.total_data += state.data_sizes[idx];
    }
    const bool measurable = np >= 2 && trial.outcome.union_size >= 1;
    acc.add(trial.outcome.true_accuracy.value_or(config.chance_accuracy()));
    sur.add(measurable || np <= 1 ? surrogate_f(trial.outcome) : 0.0);
    div.add(measurable ? diversity_term(trial.outcome) : 0.0);
    prec.add(measurable ? precision_term(trial.outcome) : 0.0);
    unions.add(static_cast<double>(trial.outcome.union_size));
    pbar.add(trial.outcome.mean_precision);
    for (int j = 0; j < np; ++j) learner_sum[j] += trial.outcome.precisions[j];
  }
  out.true_accuracy = acc.mean();
  out.true_accuracy_se = acc.stderr_mean();
  out.surrogate = sur.mean();
  out.surrogate_se = sur.stderr_mean();
  out.diversity = div.mean();
  out.diversity_se = div.stderr_mean();
  out.precision_term = prec.mean();
  out.precision_term_se = prec.stderr_mean();
  out.mean_union_size = unions.mean();
  out.mean_precision = pbar.mean();
  out.learner_precision.resize(learner_sum.size());
  for (std::size_t j = 0; j < learner_sum.size(); ++j) {
    out.learner_precision[j] = learner_sum[j] / config.trials;
  }
  return out;
}

}  // namespace delm
