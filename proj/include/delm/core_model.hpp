#pragma once

#include <cstdint>
#include <vector>

namespace delm {

/// One distributed learner's identity and per-sample cost coefficients.
struct LearnerProfile {
  int id = 0;
  double alpha = 0.0;       // computation cost per sample
  double beta = 0.0;        // communication cost per sample
  double model_size = 0.0;  // extra upload volume, in sample-equivalents

  double unit_cost() const { return alpha + beta; }
  void validate() const;  // throws std::invalid_argument
};

/// The server's current offer to every learner: a reward and a data size.
struct MechanismState {
  std::vector<double> rewards;
  std::vector<double> data_sizes;  // real-valued during relaxed optimization
  int iteration = 0;

  std::size_t size() const { return rewards.size(); }
  void validate(double d_max) const;
};

/// Server-side knobs shared by the optimizer and harness.
struct ServerConfig {
  double gamma = 3000.0;          // weight on ensemble accuracy
  double d_max = 1000.0;          // largest assignable data size
  double convergence_tol = 1e-3;  // relative-change threshold
  int max_iterations = 50;
  std::uint64_t seed = 42;

  void validate() const;
};

double computation_cost(const LearnerProfile& p, double data_size);
double communication_cost(const LearnerProfile& p, double data_size);
double learner_payoff(const LearnerProfile& p, bool participate, double reward, double data_size);

/// A learner joins iff the reward covers its total cost (ties join).
bool optimal_participation(const LearnerProfile& p, double reward, double data_size);

/// Participates *and* was assigned data; only these learners contribute a
/// model to the ensemble (a model trained on nothing is noise).
bool is_active(const LearnerProfile& p, double reward, double data_size);

}  // namespace delm
