#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "delm/bagging_sim.hpp"
#include "delm/core_model.hpp"
#include "delm/rng.hpp"

using namespace delm;

namespace {

std::vector<LearnerProfile> cheap_learners(int n) {
  std::vector<LearnerProfile> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].id = i;
    out[i].alpha = 1e-6;
    out[i].beta = 1e-6;
  }
  return out;
}

MechanismState funded_state(const std::vector<LearnerProfile>& profiles, double data_size) {
  MechanismState state;
  state.rewards.resize(profiles.size());
  state.data_sizes.assign(profiles.size(), data_size);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    state.rewards[i] = profiles[i].unit_cost() * data_size;
  }
  return state;
}

}  // namespace

TEST_CASE("bootstrap assignment basics") {
  Rng rng(1);
  const std::vector<std::int64_t> none = {0, 0, 0};
  const BootstrapAssignment empty = bootstrap_assign(none, 100, rng);
  CHECK(empty.union_ids.empty());

  const std::vector<std::int64_t> one = {1};
  const BootstrapAssignment forced = bootstrap_assign(one, 1, rng);
  CHECK(forced.union_ids == std::vector<std::int32_t>{0});
  CHECK(forced.draws[0].size() == 1);
}

TEST_CASE("expected union size matches the exact formula") {
  // single learner with n draws from pool P: E|union| = P (1 - (1 - 1/P)^n)
  const std::int64_t pool = 10;
  const std::int64_t n = 10;
  const double expected = pool * (1.0 - std::pow(1.0 - 1.0 / pool, double(n)));
  CHECK(expected == doctest::Approx(6.5132).epsilon(1e-4));

  const int trials = 200000;
  Rng rng(42);
  double sum = 0.0, sum_sq = 0.0;
  const std::vector<std::int64_t> sizes = {n};
  for (int t = 0; t < trials; ++t) {
    const double u = static_cast<double>(bootstrap_assign(sizes, pool, rng).union_ids.size());
    sum += u;
    sum_sq += u * u;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt((sum_sq - trials * mean * mean) / (trials - 1));
  const double se = sd / std::sqrt(double(trials));
  CHECK(std::abs(mean - expected) < 3.0 * se + 1e-9);
}

TEST_CASE("precision curve shape and endpoints") {
  SimConfig sim;
  CHECK(precision_curve(sim, 0.0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(precision_curve(sim, 1e9) == doctest::Approx(sim.p_max).epsilon(1e-9));
  CHECK(precision_curve(sim, sim.kappa) ==
        doctest::Approx(0.1 + 0.87 * (1.0 - std::exp(-1.0))).epsilon(1e-9));
  // monotone and concave
  double prev = precision_curve(sim, 0.0);
  double prev_gain = 1e9;
  for (double d = 100.0; d <= 2000.0; d += 100.0) {
    const double cur = precision_curve(sim, d);
    const double gain = cur - prev;
    CHECK(cur >= prev);
    CHECK(gain <= prev_gain + 1e-12);
    prev = cur;
    prev_gain = gain;
  }
}

TEST_CASE("perfect learners make a perfect ensemble") {
  SimConfig sim;
  sim.p_max = 1.0;
  sim.kappa = 1e-9;  // precision jumps to p_max immediately
  sim.pool_size = 500;
  sim.trials = 5;
  const auto profiles = cheap_learners(4);
  const auto state = funded_state(profiles, 100.0);

  const TrialResult trial = simulate_trial(profiles, state, sim, 7);
  for (int l : trial.outcome.fault_counts) CHECK(l == 0);
  CHECK(trial.outcome.true_accuracy == doctest::Approx(1.0));
  CHECK(surrogate_f(trial.outcome) == doctest::Approx(0.0));

  const EnsembleSummary summary = simulate_ensemble(profiles, state, sim);
  CHECK(summary.true_accuracy == doctest::Approx(1.0));
  CHECK(summary.surrogate == doctest::Approx(0.0));
}

TEST_CASE("a single learner votes alone") {
  SimConfig sim;
  sim.pool_size = 2000;
  sim.trials = 40;
  sim.seed = 99;
  const auto profiles = cheap_learners(1);
  const auto state = funded_state(profiles, 1500.0);
  const EnsembleSummary summary = simulate_ensemble(profiles, state, sim);
  const double p = precision_curve(sim, 1500.0);
  // with p above ~0.71 the difficulty cap never binds, so accuracy ~ p
  CHECK(summary.n_participants == 1);
  CHECK(std::abs(summary.true_accuracy - p) < 4.0 * summary.true_accuracy_se + 1e-3);
}

TEST_CASE("three equal learners match the binomial majority formula") {
  // binary labels, fixed error 0.2, near-degenerate difficulty:
  // P(majority wrong) = 3 eps^2 (1-eps) + eps^3 = 0.104
  SimConfig sim;
  sim.n_classes = 2;
  sim.p_max = 0.8;
  sim.kappa = 1e-9;
  sim.pool_size = 2000;
  sim.difficulty_alpha = 2e8;
  sim.difficulty_beta = 5e8;
  sim.trials = 120;
  sim.seed = 4242;
  const auto profiles = cheap_learners(3);
  const auto state = funded_state(profiles, 800.0);
  const EnsembleSummary summary = simulate_ensemble(profiles, state, sim);
  const double expected = 1.0 - (3.0 * 0.04 * 0.8 + 0.008);
  CHECK(expected == doctest::Approx(0.896).epsilon(1e-12));
  CHECK(std::abs(summary.true_accuracy - expected) <
        3.0 * summary.true_accuracy_se + 5e-4);
}

TEST_CASE("fault counts equal column sums of incorrect entries") {
  SimConfig sim;
  sim.pool_size = 300;
  const auto profiles = cheap_learners(5);
  const auto state = funded_state(profiles, 80.0);
  const TrialResult trial = simulate_trial(profiles, state, sim, 2024);
  const int np = trial.outcome.n_participants;
  REQUIRE(np == 5);
  for (std::int64_t d = 0; d < trial.outcome.union_size; ++d) {
    int wrong = 0;
    for (int j = 0; j < np; ++j) wrong += trial.matrix.at(j, d) ? 0 : 1;
    CHECK(wrong == trial.outcome.fault_counts[static_cast<std::size_t>(d)]);
  }
  trial.outcome.validate();
  // own-dataset precision agrees with the matrix rows
  for (int j = 0; j < np; ++j) {
    const auto& cols = trial.matrix.own_columns[j];
    REQUIRE(cols.size() == 80);
    double correct = 0.0;
    for (std::int32_t col : cols) correct += trial.matrix.at(j, col) ? 1.0 : 0.0;
    CHECK(trial.outcome.precisions[j] == doctest::Approx(correct / cols.size()));
  }
}

TEST_CASE("realized own-dataset precision converges to the learning curve") {
  SimConfig sim;
  sim.pool_size = 60000;
  sim.trials = 150;
  sim.seed = 5;
  const auto profiles = cheap_learners(3);
  const auto state = funded_state(profiles, 1000.0);  // p ~ 0.72, cap never binds
  const EnsembleSummary summary = simulate_ensemble(profiles, state, sim);
  const double target = precision_curve(sim, 1000.0);
  for (double p : summary.learner_precision) {
    CHECK(std::abs(p - target) < 0.01);
  }
  CHECK(std::abs(summary.mean_precision - target) < 5e-3);
}

TEST_CASE("majority vote beats the mean individual accuracy for independent binary learners") {
  SimConfig sim;
  sim.n_classes = 2;
  sim.p_max = 0.75;
  sim.kappa = 1e-9;
  sim.pool_size = 4000;
  sim.difficulty_alpha = 2e8;  // h == mean: errors are independent
  sim.difficulty_beta = 5e8;
  sim.trials = 60;
  sim.seed = 11;
  const auto profiles = cheap_learners(9);
  const auto state = funded_state(profiles, 600.0);
  const EnsembleSummary summary = simulate_ensemble(profiles, state, sim);
  CHECK(summary.true_accuracy > summary.mean_precision + 0.05);
}

TEST_CASE("accuracy rises with learners and data") {
  SimConfig sim;
  sim.pool_size = 20000;
  sim.trials = 40;
  sim.seed = 1234;
  const auto acc = [&](int n, double d) {
    const auto profiles = cheap_learners(n);
    return simulate_ensemble(profiles, funded_state(profiles, d), sim);
  };
  const EnsembleSummary small = acc(3, 400.0);
  const EnsembleSummary more_learners = acc(9, 400.0);
  const EnsembleSummary more_data = acc(3, 1000.0);
  const double tol_n = 3.0 * (small.true_accuracy_se + more_learners.true_accuracy_se);
  const double tol_d = 3.0 * (small.true_accuracy_se + more_data.true_accuracy_se);
  CHECK(more_learners.true_accuracy > small.true_accuracy - tol_n);
  CHECK(more_data.true_accuracy > small.true_accuracy - tol_d);
}

TEST_CASE("no participants yields a chance-level outcome") {
  SimConfig sim;
  const auto profiles = cheap_learners(3);
  MechanismState state;
  state.rewards.assign(3, 0.0);
  state.data_sizes.assign(3, 500.0);  // unpaid: nobody joins
  sim.trials = 3;
  const EnsembleSummary summary = simulate_ensemble(profiles, state, sim);
  CHECK(summary.n_participants == 0);
  CHECK(summary.true_accuracy == doctest::Approx(sim.chance_accuracy()));
  CHECK(summary.surrogate == 0.0);

  state.data_sizes.assign(3, 0.0);  // zero data excludes even paid learners
  state.rewards.assign(3, 1.0);
  const EnsembleSummary zero_data = simulate_ensemble(profiles, state, sim);
  CHECK(zero_data.n_participants == 0);
}

TEST_CASE("identical seeds reproduce the outcome bit for bit") {
  SimConfig sim;
  sim.pool_size = 5000;
  sim.trials = 10;
  sim.seed = 777;
  const auto profiles = cheap_learners(6);
  const auto state = funded_state(profiles, 300.0);
  const EnsembleSummary a = simulate_ensemble(profiles, state, sim);
  const EnsembleSummary b = simulate_ensemble(profiles, state, sim);
  CHECK(a.true_accuracy == b.true_accuracy);
  CHECK(a.surrogate == b.surrogate);
  CHECK(a.diversity == b.diversity);
  CHECK(a.precision_term == b.precision_term);
  CHECK(a.mean_union_size == b.mean_union_size);
  CHECK(a.learner_precision == b.learner_precision);

  const TrialResult t1 = simulate_trial(profiles, state, sim, 31415);
  const TrialResult t2 = simulate_trial(profiles, state, sim, 31415);
  CHECK(t1.matrix.correct == t2.matrix.correct);
  CHECK(t1.outcome.fault_counts == t2.outcome.fault_counts);
}
