#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "delm/errors.hpp"
#include "delm/rng.hpp"
#include "delm/surrogate.hpp"

namespace delm {

namespace {

constexpr double kBad = 1e100;

// Shape parameters are searched in log space, which keeps b, c, f, g > 0
// and therefore every log argument positive on N >= 1, S >= 0.
using Theta = std::array<double, 4>;  // log b, log c, log f, log g

struct LinearCoeffs {
  double a = 0.0, d = 0.0, e = 1.0, h = 0.0;
};

struct Workspace {
  std::vector<double> l1;  // log(b*n + c) per sample
  std::vector<double> l2;  // log((f/n)*s + g) per sample
  std::vector<double> y;
};

// Least squares for (u, v) in  u*x1 + v*x2 ~ y, with a tiny ridge to keep
// the 2x2 system solvable when a basis vector degenerates.
bool solve2(const std::vector<double>& x1, const std::vector<double>& x2,
            const std::vector<double>& y, double& u, double& v) {
  double a11 = 0.0, a12 = 0.0, a22 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    a11 += x1[i] * x1[i];
    a12 += x1[i] * x2[i];
    a22 += x2[i] * x2[i];
    b1 += x1[i] * y[i];
    b2 += x2[i] * y[i];
  }
  const double ridge = 1e-12 * (1.0 + a11 + a22);
  a11 += ridge;
  a22 += ridge;
  const double det = a11 * a22 - a12 * a12;
  if (!(std::abs(det) > 0.0)) return false;
  u = (b1 * a22 - b2 * a12) / det;
  v = (b2 * a11 - b1 * a12) / det;
  return std::isfinite(u) && std::isfinite(v);
}

double sse_of(const Workspace& w, const LinearCoeffs& lc) {
  double sse = 0.0;
  for (std::size_t i = 0; i < w.y.size(); ++i) {
    const double r = (lc.a * w.l1[i] + lc.d) * (lc.e * w.l2[i] + lc.h) - w.y[i];
    sse += r * r;
  }
  return sse;
}

// The model is bilinear in (a,d) x (e,h): alternating the two 2-variable
// least-squares solves drives the residual to a stationary point quickly.
double alternating_ls(const Workspace& w, LinearCoeffs& lc) {
  const std::size_t n = w.y.size();
  std::vector<double> x1(n), x2(n);
  double best = sse_of(w, lc);
  for (int sweep = 0; sweep < 60; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      const double second = lc.e * w.l2[i] + lc.h;
      x1[i] = w.l1[i] * second;
      x2[i] = second;
    }
    double a = lc.a, d = lc.d;
    if (solve2(x1, x2, w.y, a, d)) {
      lc.a = a;
      lc.d = d;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double first = lc.a * w.l1[i] + lc.d;
      x1[i] = w.l2[i] * first;
      x2[i] = first;
    }
    double e = lc.e, h = lc.h;
    if (solve2(x1, x2, w.y, e, h)) {
      lc.e = e;
      lc.h = h;
    }
    const double sse = sse_of(w, lc);
    if (best - sse < 1e-16 * (1.0 + best)) return sse;
    best = sse;
  }
  return best;
}

struct Objective {
  std::span<const FitSample> samples;
  LinearCoeffs init;

  double operator()(const Theta& theta, LinearCoeffs* out = nullptr) const {
    const double b = std::exp(theta[0]);
    const double c = std::exp(theta[1]);
    const double f = std::exp(theta[2]);
    const double g = std::exp(theta[3]);
    if (!std::isfinite(b) || !std::isfinite(c) || !std::isfinite(f) || !std::isfinite(g)) {
      return kBad;
    }
    Workspace w;
    w.l1.reserve(samples.size());
    w.l2.reserve(samples.size());
    w.y.reserve(samples.size());
    for (const FitSample& s : samples) {
      const double n = s.n_learners;
      w.l1.push_back(std::log(b * n + c));
      w.l2.push_back(std::log((f / n) * s.total_data + g));
      w.y.push_back(s.observed);
    }
    LinearCoeffs lc = init;
    const double sse = alternating_ls(w, lc);
    if (!std::isfinite(sse)) return kBad;
    if (out) *out = lc;
    return sse;
  }
};

// Plain Nelder-Mead on the 4-dim shape vector.
double nelder_mead(const Objective& obj, Theta& theta, int budget) {
  constexpr int dim = 4;
  std::array<Theta, dim + 1> pts;
  std::array<double, dim + 1> vals;
  pts[0] = theta;
  vals[0] = obj(pts[0]);
  int evals = 1;
  for (int i = 0; i < dim; ++i) {
    pts[i + 1] = theta;
    pts[i + 1][i] += 0.35;
    vals[i + 1] = obj(pts[i + 1]);
    ++evals;
  }
  const auto order = [&] {
    std::array<int, dim + 1> idx{};
    for (int i = 0; i <= dim; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int l, int r) { return vals[l] < vals[r]; });
    std::array<Theta, dim + 1> p2;
    std::array<double, dim + 1> v2;
    for (int i = 0; i <= dim; ++i) {
      p2[i] = pts[idx[i]];
      v2[i] = vals[idx[i]];
    }
    pts = p2;
    vals = v2;
  };
  order();
  while (evals < budget) {
    if (vals[dim] - vals[0] < 1e-15 * (1.0 + std::abs(vals[0]))) break;
    Theta centroid{};
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) centroid[j] += pts[i][j] / dim;
    }
    const auto blend = [&](double t) {
      Theta p;
      for (int j = 0; j < dim; ++j) p[j] = centroid[j] + t * (pts[dim][j] - centroid[j]);
      return p;
    };
    const Theta refl = blend(-1.0);
    const double f_refl = obj(refl);
    ++evals;
    if (f_refl < vals[0]) {
      const Theta expd = blend(-2.0);
      const double f_expd = obj(expd);
      ++evals;
      if (f_expd < f_refl) {
        pts[dim] = expd;
        vals[dim] = f_expd;
      } else {
        pts[dim] = refl;
        vals[dim] = f_refl;
      }
    } else if (f_refl < vals[dim - 1]) {
      pts[dim] = refl;
      vals[dim] = f_refl;
    } else {
      const bool outside = f_refl < vals[dim];
      const Theta ctr = blend(outside ? -0.5 : 0.5);
      const double f_ctr = obj(ctr);
      ++evals;
      if (f_ctr < (outside ? f_refl : vals[dim])) {
        pts[dim] = ctr;
        vals[dim] = f_ctr;
      } else {
        for (int i = 1; i <= dim; ++i) {
          for (int j = 0; j < dim; ++j) pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
          vals[i] = obj(pts[i]);
          ++evals;
        }
      }
    }
    order();
  }
  theta = pts[0];
  return vals[0];
}

struct Candidate {
  double sse = std::numeric_limits<double>::infinity();
  Theta theta{};
  LinearCoeffs lc;
  int restart = -1;
};

}  // namespace

FittedAccuracyModel fit_accuracy_model(std::span<const FitSample> samples,
                                       const FitOptions& options) {
  if (samples.size() < 8) {
    throw std::invalid_argument("fit_accuracy_model needs at least 8 samples");
  }
  double n_lo = samples[0].n_learners, n_hi = n_lo;
  double s_lo = samples[0].total_data, s_hi = s_lo;
  double mean_n = 0.0, mean_s = 0.0, mean_y = 0.0;
  for (const FitSample& s : samples) {
    if (s.n_learners < 1) throw std::invalid_argument("fit sample with n_learners < 1");
    if (s.total_data < 0.0) throw std::invalid_argument("fit sample with negative total_data");
    n_lo = std::min(n_lo, double(s.n_learners));
    n_hi = std::max(n_hi, double(s.n_learners));
    s_lo = std::min(s_lo, s.total_data);
    s_hi = std::max(s_hi, s.total_data);
    mean_n += s.n_learners;
    mean_s += s.total_data;
    mean_y += s.observed;
  }
  mean_n /= samples.size();
  mean_s /= samples.size();
  mean_y /= samples.size();
  if (!(n_hi > n_lo) || !(s_hi > s_lo)) {
    throw std::invalid_argument("fit samples must span at least 2 distinct N and total-data values");
  }

  const int restarts = std::max(options.restarts, 3);
  Rng rng(options.seed);

  // Restart 0 is the exact constant model; it anchors flat data and gives a
  // finite fallback for everything else.
  Candidate best;
  {
    Candidate flat;
    flat.sse = 0.0;
    for (const FitSample& s : samples) {
      const double r = s.observed - mean_y;
      flat.sse += r * r;
    }
    flat.theta = {0.0, 0.0, 0.0, 0.0};
    flat.lc = LinearCoeffs{0.0, 1.0, 0.0, mean_y};
    flat.restart = 0;
    best = flat;
  }

  const double f_scale = std::log(std::max(mean_n / std::max(mean_s, 1.0), 1e-12));
  for (int r = 1; r < restarts; ++r) {
    Theta theta;
    if (r == 1) {
      theta = {0.0, 0.0, f_scale, 0.0};
    } else {
      theta[0] = rng.next_range(std::log(0.01), std::log(3.0));
      theta[1] = rng.next_range(std::log(0.3), std::log(20.0));
      theta[2] = f_scale + rng.next_range(std::log(0.02), std::log(50.0));
      theta[3] = rng.next_range(std::log(0.3), std::log(20.0));
    }
    Objective obj{samples, LinearCoeffs{0.0, 1.0, 1.0, 0.0}};
    double sse = nelder_mead(obj, theta, options.search_budget);
    LinearCoeffs lc;
    sse = obj(theta, &lc);
    if (sse < best.sse) {
      best = Candidate{sse, theta, lc, r};
    }
  }

  if (best.restart != 0) {
    Objective obj{samples, best.lc};
    double sse = nelder_mead(obj, best.theta, options.polish_budget);
    LinearCoeffs lc;
    sse = obj(best.theta, &lc);
    if (sse <= best.sse) {
      best.sse = sse;
      best.lc = lc;
    }
  }

  if (!std::isfinite(best.sse) || best.sse >= kBad) {
    throw FitFailureError("curve fit diverged", std::sqrt(best.sse / samples.size()));
  }

  FittedAccuracyModel m;
  m.a = best.lc.a;
  m.b = std::exp(best.theta[0]);
  m.c = std::exp(best.theta[1]);
  m.d = best.lc.d;
  m.e = best.lc.e;
  m.f = std::exp(best.theta[2]);
  m.g = std::exp(best.theta[3]);
  m.h = best.lc.h;
  m.rmse = std::sqrt(best.sse / samples.size());

  // Canonical sign: make the first factor positive at the sample midpoint
  // (flipping both factors leaves the product unchanged).
  const double first_mid = m.a * std::log(m.b * mean_n + m.c) + m.d;
  if (first_mid < 0.0) {
    m.a = -m.a;
    m.d = -m.d;
    m.e = -m.e;
    m.h = -m.h;
  }
  if (!m.domain_ok(static_cast<int>(n_hi), s_hi)) {
    throw FitFailureError("fitted parameters violate the log-domain invariant", m.rmse);
  }
  return m;
}

}  // namespace delm
