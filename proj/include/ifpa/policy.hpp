#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ifpa/game.hpp"

namespace ifpa {

// Power policy of one user: one power per information state.
struct PowerPolicy {
  int user = 0;
  Variant variant = Variant::Full;
  std::vector<double> values;  // watts, >= 0
};

// Stacked policies of all users (homogeneous variant).
struct PolicyProfile {
  Variant variant = Variant::Full;
  std::vector<std::vector<double>> values;  // [user][info state]

  int n_users() const { return static_cast<int>(values.size()); }

  std::vector<double> flatten() const {
    std::vector<double> out;
    for (const auto& v : values) out.insert(out.end(), v.begin(), v.end());
    return out;
  }
};

inline double profile_distance(const PolicyProfile& a, const PolicyProfile& b) {
  double s = 0.0;
  for (int i = 0; i < a.n_users(); ++i)
    for (std::size_t k = 0; k < a.values[i].size(); ++k) {
      double d = a.values[i][k] - b.values[i][k];
      s += d * d;
    }
  return std::sqrt(s);
}

enum class ProjectionMode { EqualityBinding, InequalityKkt };

inline double expected_power(const std::vector<double>& values, const std::vector<double>& marginal) {
  if (values.size() != marginal.size()) throw Error("expected_power: dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) s += marginal[k] * values[k];
  return s;
}

inline double expected_power(const PowerPolicy& policy, const InfoIndexer& indexer) {
  return expected_power(policy.values, indexer.marginal[policy.user]);
}

struct ProjectionResult {
  std::vector<double> values;
  double shift = 0.0;  // the lambda in max(0, x - lambda) resp. max(0, x - lambda*m)
  int iterations = 0;
};

namespace detail {

inline void check_finite(const std::vector<double>& x, const char* what) {
  for (double v : x)
    if (!std::isfinite(v)) throw Error(std::string(what) + ": non-finite input");
}

// Solve sum_s m_s * max(0, x_s - lambda) = budget for lambda (any sign).
// Piecewise-linear and strictly decreasing until it hits zero, so bisection
// brackets are easy; `hint` narrows them when the caller tracks lambda
// across nearby inputs.
inline ProjectionResult shift_to_budget(const std::vector<double>& x, const std::vector<double>& m,
                                        double budget, double tol, const double* hint) {
  double min_m = *std::min_element(m.begin(), m.end());
  if (min_m <= 0.0) min_m = 1e-12;
  double xmin = *std::min_element(x.begin(), x.end());
  double xmax = *std::max_element(x.begin(), x.end());
  double lo = xmin - budget / min_m - 1.0;
  double hi = xmax + budget / min_m + 1.0;
  auto power_at = [&](double lam) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += m[k] * std::max(0.0, x[k] - lam);
    return s - budget;
  };
  if (hint) {
    // expand a window around the hint until it brackets the root
    double w = 1e-6 * (1.0 + std::abs(*hint));
    while (w < (hi - lo)) {
      double a = std::max(lo, *hint - w), b = std::min(hi, *hint + w);
      if (power_at(a) >= 0.0 && power_at(b) <= 0.0) {
        lo = a;
        hi = b;
        break;
      }
      w *= 8.0;
    }
  }
  BisectResult bis = bisect_decreasing(power_at, lo, hi, tol);
  if (!bis.converged)
    throw Error("projection bisection failed to converge in 200 iterations (tolerance misconfigured?)");
  ProjectionResult res;
  res.shift = bis.root;
  res.iterations = bis.iterations;
  res.values.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) res.values[k] = std::max(0.0, x[k] - bis.root);
  return res;
}

}  // namespace detail

// Projection onto the feasible policy set {v >= 0, sum m_s v_s <= budget}.
//
// EqualityBinding: max(0, x_s - lambda) with lambda of any sign chosen so the
// average power equals the budget (the paper's projection; lambda < 0 lifts
// everything when x is too small). InequalityKkt: the exact Euclidean
// projection; inactive budget returns max(0, x), otherwise the shift is
// weighted by the marginals.
inline ProjectionResult project_with_shift(const std::vector<double>& x,
                                           const std::vector<double>& marginal, double budget,
                                           ProjectionMode mode, const double* hint = nullptr) {
  detail::check_finite(x, "project");
  if (x.size() != marginal.size()) throw Error("project: dimension mismatch");
  if (x.empty()) throw Error("project: empty input");
  const double tol = 1e-12 * std::max(1.0, budget);

  if (mode == ProjectionMode::EqualityBinding)
    return detail::shift_to_budget(x, marginal, budget, tol, hint);

  // KKT: clip first; if feasible we are done (lambda = 0).
  double clipped_power = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) clipped_power += marginal[k] * std::max(0.0, x[k]);
  if (clipped_power <= budget) {
    ProjectionResult res;
    res.shift = 0.0;
    res.values.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) res.values[k] = std::max(0.0, x[k]);
    return res;
  }
  // Otherwise v = max(0, x - lambda*m), lambda > 0 at budget equality.
  double hi = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (marginal[k] > 0.0) hi = std::max(hi, x[k] / marginal[k]);
  auto power_at = [&](double lam) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += marginal[k] * std::max(0.0, x[k] - lam * marginal[k]);
    return s - budget;
  };
  BisectResult bis = bisect_decreasing(power_at, 0.0, hi + 1.0, tol);
  if (!bis.converged)
    throw Error("projection bisection failed to converge in 200 iterations (tolerance misconfigured?)");
  ProjectionResult res;
  res.shift = bis.root;
  res.iterations = bis.iterations;
  res.values.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    res.values[k] = std::max(0.0, x[k] - bis.root * marginal[k]);
  return res;
}

inline PowerPolicy project(const std::vector<double>& x, const InfoIndexer& indexer, int user,
                           double budget, ProjectionMode mode) {
  PowerPolicy p;
  p.user = user;
  p.variant = indexer.variant;
  p.values = project_with_shift(x, indexer.marginal[user], budget, mode).values;
  return p;
}

// Water-filling on a base vector f (entries -(1+interference)/gain, all
// negative): returns max(0, level + f_s) with the water level chosen so the
// average power equals the budget. Equivalent to the EqualityBinding
// projection of f with level = -shift.
struct WaterFillResult {
  std::vector<double> values;
  double level = 0.0;  // lambda_i = 1/mu_i
};

inline WaterFillResult water_fill(const std::vector<double>& base, const std::vector<double>& marginal,
                                  double budget) {
  detail::check_finite(base, "water_fill");
  ProjectionResult pr = project_with_shift(base, marginal, budget, ProjectionMode::EqualityBinding);
  WaterFillResult wf;
  wf.values = std::move(pr.values);
  wf.level = -pr.shift;
  return wf;
}

inline PowerPolicy water_fill(const std::vector<double>& base, const InfoIndexer& indexer, int user,
                              double budget) {
  PowerPolicy p;
  p.user = user;
  p.variant = indexer.variant;
  p.values = water_fill(base, indexer.marginal[user], budget).values;
  return p;
}

// Full-information best response: water-filling on
// f_i(h) = -(1 + sum_j |h_ij|^2 P_j(h)) / (alpha_i |h_ii|^2).
inline PowerPolicy best_response_full(const Game& game, const PolicyProfile& profile, int user) {
  if (game.variant != Variant::Full || profile.variant != Variant::Full)
    throw Error("best_response_full: profile variant must be Full");
  const int n = game.n_users();
  std::vector<double> base(game.dim(user));
  for (std::size_t st = 0; st < game.states.size(); ++st) {
    int s = game.indexer.info_of[user][st];
    double interf = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != user) interf += game.states[st].gain(user, j, n) * profile.values[j][game.indexer.info_of[j][st]];
    base[s] = -(1.0 + interf) / (game.alpha(user) * game.states[st].gain(user, user, n));
  }
  return water_fill(base, game.indexer, user, game.budget(user));
}

// Uniform draw on [0, 2*budget] per entry, then budget-binding projection.
inline PolicyProfile random_feasible_profile(const Game& game, Rng& rng) {
  PolicyProfile p;
  p.variant = game.variant;
  p.values.resize(game.n_users());
  for (int i = 0; i < game.n_users(); ++i) {
    std::vector<double> x(game.dim(i));
    for (double& v : x) v = rng.uniform(0.0, 2.0 * game.budget(i));
    p.values[i] =
        project_with_shift(x, game.marginal(i), game.budget(i), ProjectionMode::EqualityBinding).values;
  }
  return p;
}

inline PolicyProfile uniform_budget_profile(const Game& game) {
  PolicyProfile p;
  p.variant = game.variant;
  p.values.resize(game.n_users());
  for (int i = 0; i < game.n_users(); ++i) p.values[i].assign(game.dim(i), game.budget(i));
  return p;
}

}  // namespace ifpa
