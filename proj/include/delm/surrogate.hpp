#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace delm {

/// Realized statistics of one ensemble round. fault_counts[d] is the number
/// of participating learners that mispredict union sample d; precisions are
/// each participant's accuracy on its own training multiset.
struct EnsembleOutcome {
  std::vector<int> fault_counts;
  std::int64_t union_size = 0;  // |union of training sets|
  int n_participants = 0;
  std::vector<double> precisions;
  double mean_precision = 0.0;
  std::optional<double> true_accuracy;  // filled by the simulator

  void validate() const;
};

/// Sum of squared fault counts over the union, normalized by
/// union_size * N^P * (N^P - 1). Requires n_participants >= 2.
double diversity_term(const EnsembleOutcome& outcome);

/// (mean precision - 1) / (N^P - 1). Requires n_participants >= 2.
double precision_term(const EnsembleOutcome& outcome);

/// diversity_term + precision_term, with small-ensemble conventions:
/// N^P = 0 gives 0, N^P = 1 gives the lone learner's precision.
double surrogate_f(const EnsembleOutcome& outcome);

/// Parametric accuracy surface
///   (a*log(b*N + c) + d) * (e*log((f/N)*S + g) + h)
/// in the participant count N and total assigned data S. Fitted instances
/// keep b, c, f, g > 0 so every log argument is positive for N >= 1, S >= 0.
struct FittedAccuracyModel {
  double a = 0.0, b = 1.0, c = 1.0, d = 1.0;
  double e = 0.0, f = 1.0, g = 1.0, h = 1.0;
  double rmse = std::numeric_limits<double>::quiet_NaN();

  /// True when both log arguments stay positive for all N in [1, n_max]
  /// and total data in [0, total_data_max].
  bool domain_ok(int n_max, double total_data_max) const;

  void save(const std::string& path) const;
  static FittedAccuracyModel load(const std::string& path);
};

/// Evaluates the product form. Throws ModelDomainError on a non-positive
/// log argument; n_participants must be >= 1.
double fitted_f(const FittedAccuracyModel& model, int n_participants, double total_data);

/// Pearson product-moment correlation. Throws on length < 2, length
/// mismatch, or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// One observation for curve fitting.
struct FitSample {
  int n_learners = 0;
  double total_data = 0.0;
  double observed = 0.0;
};

struct FitOptions {
  int restarts = 24;        // multi-start count (first two are deterministic)
  int search_budget = 500;  // simplex evaluations per restart
  int polish_budget = 4000; // extra evaluations on the best candidate
  std::uint64_t seed = 1;
};

/// Least-squares fit of FittedAccuracyModel to samples. Requires >= 8
/// samples spanning >= 2 distinct N and >= 2 distinct total-data values.
/// Multi-start simplex over the log-argument shape parameters with the
/// linear-in-(a,d,e,h) part solved by alternating least squares; the best
/// restart (lowest RMSE, ties by restart index) wins.
FittedAccuracyModel fit_accuracy_model(std::span<const FitSample> samples,
                                       const FitOptions& options = {});

}  // namespace delm
