#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "ifpa/rates.hpp"

namespace ifpa {

// Social objective: weighted rate sum (Pareto via scalarization) or the Nash
// bargaining product over a disagreement point.
struct SocialObjective {
  enum class Kind { WeightedSum, NashProduct };
  Kind kind = Kind::WeightedSum;
  std::vector<double> weights;        // WeightedSum, all > 0
  std::vector<double> disagreement;   // NashProduct, >= 0

  static SocialObjective weighted_sum(std::vector<double> w) {
    SocialObjective o;
    o.kind = Kind::WeightedSum;
    o.weights = std::move(w);
    return o;
  }
  static SocialObjective equal_weights(int n) { return weighted_sum(std::vector<double>(n, 1.0)); }
  static SocialObjective nash_product(std::vector<double> d) {
    SocialObjective o;
    o.kind = Kind::NashProduct;
    o.disagreement = std::move(d);
    return o;
  }

  void validate(int n) const {
    if (kind == Kind::WeightedSum) {
      if (static_cast<int>(weights.size()) != n) throw Error("objective: weights size mismatch");
      for (double w : weights)
        if (w <= 0.0) throw Error("objective: weights must be > 0");
    } else {
      if (static_cast<int>(disagreement.size()) != n)
        throw Error("objective: disagreement size mismatch");
      for (double d : disagreement)
        if (d < 0.0) throw Error("objective: disagreement must be >= 0");
    }
  }
};

struct AugLagParams {
  double penalty_c = 1.0;
  double multiplier_step = 0.25;    // alpha
  double ascent_step = 0.1;         // delta
  double eps_gradient = 1e-4;       // per-user stationarity target
  double eps_constraint = 1e-3;     // |budget - E[P_i]| target
  int max_outer = 500;
  int max_rounds = 200000;          // ascent rounds per inner call
  double nb_floor = 1e-12;          // keeps log(r - d) finite during ascent

  void validate() const {
    if (penalty_c <= 0.0 || multiplier_step <= 0.0 || ascent_step <= 0.0 || eps_gradient <= 0.0 ||
        eps_constraint <= 0.0 || max_outer < 1 || max_rounds < 1)
      throw Error("AugLagParams: all parameters must be positive");
  }
};

inline double social_value(const Game& game, const PolicyProfile& profile,
                           const SocialObjective& obj) {
  obj.validate(game.n_users());
  RateReport r = rate_report(game, profile);
  if (obj.kind == SocialObjective::Kind::WeightedSum) {
    double s = 0.0;
    for (int i = 0; i < game.n_users(); ++i) s += obj.weights[i] * r.per_user[i];
    return s;
  }
  double prod = 1.0;
  for (int i = 0; i < game.n_users(); ++i) {
    double margin = r.per_user[i] - obj.disagreement[i];
    if (margin <= 0.0) return -std::numeric_limits<double>::infinity();
    prod *= margin;
  }
  return prod;
}

namespace detail {

// Rates plus the full objective gradient (own and cross partials) in one
// scenario pass.
struct SocialEval {
  std::vector<double> rates;              // nats
  std::vector<std::vector<double>> grad;  // of sum_k c_k r_k, coefficients c_k supplied
};

inline SocialEval weighted_rate_gradient(const Game& game, const PolicyProfile& profile,
                                         const std::vector<double>& coeff) {
  const int n = game.n_users();
  SocialEval ev;
  ev.rates.assign(n, 0.0);
  ev.grad.resize(n);
  for (int i = 0; i < n; ++i) ev.grad[i].assign(game.dim(i), 0.0);
  for (int k = 0; k < n; ++k) {
    const auto& opps = game.opponents(k);
    const double a = game.alpha(k);
    for (int s = 0; s < game.dim(k); ++s) {
      const double ag = a * game.direct_gain(k, s);
      const double p = profile.values[k][s];
      for (const auto& sc : game.scenarios(k, s)) {
        double interf = scenario_interference(sc, profile, opps);
        double A = 1.0 + interf;
        double S = A + ag * p;
        ev.rates[k] += sc.w * std::log(S / A);
        ev.grad[k][s] += coeff[k] * sc.w * ag / S;
        double cross = -coeff[k] * sc.w * ag * p / (A * S);
        for (std::size_t o = 0; o < opps.size(); ++o)
          ev.grad[opps[o]][sc.opp_state[o]] += cross * sc.coef[o];
      }
    }
  }
  return ev;
}

inline std::vector<double> budget_slack(const Game& game, const PolicyProfile& profile) {
  std::vector<double> h(game.n_users());
  for (int i = 0; i < game.n_users(); ++i)
    h[i] = game.budget(i) - expected_power(profile.values[i], game.marginal(i));
  return h;
}

}  // namespace detail

// Augmented Lagrangian for the maximization: objective + sum_i lambda_i h_i
// - c sum_i h_i^2 with h_i the budget slack. (The penalty is subtracted; an
// added penalty would reward constraint violation and unbound the ascent.)
inline double aug_lagrangian(const Game& game, const PolicyProfile& profile,
                             const std::vector<double>& multipliers, const AugLagParams& params,
                             const SocialObjective& obj) {
  double L = social_value(game, profile, obj);
  std::vector<double> h = detail::budget_slack(game, profile);
  for (int i = 0; i < game.n_users(); ++i)
    L += multipliers[i] * h[i] - params.penalty_c * h[i] * h[i];
  return L;
}

// Analytic gradient of aug_lagrangian (product form for NashProduct).
inline std::vector<std::vector<double>> aug_lagrangian_gradient(const Game& game,
                                                                const PolicyProfile& profile,
                                                                const std::vector<double>& multipliers,
                                                                const AugLagParams& params,
                                                                const SocialObjective& obj) {
  const int n = game.n_users();
  obj.validate(n);
  std::vector<double> coeff(n, 1.0);
  if (obj.kind == SocialObjective::Kind::WeightedSum) {
    coeff = obj.weights;
  } else {
    RateReport r = rate_report(game, profile);
    double prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= r.per_user[i] - obj.disagreement[i];
    for (int i = 0; i < n; ++i) coeff[i] = prod / (r.per_user[i] - obj.disagreement[i]);
  }
  detail::SocialEval ev = detail::weighted_rate_gradient(game, profile, coeff);
  std::vector<double> h = detail::budget_slack(game, profile);
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < game.dim(i); ++s)
      ev.grad[i][s] += (-multipliers[i] + 2.0 * params.penalty_c * h[i]) * game.marginal(i)[s];
  return ev.grad;
}

struct AscentResult {
  PolicyProfile profile;
  int rounds = 0;
  long clamp_count = 0;
  bool stationary = false;  // all per-user projected gradient norms below target
};

namespace detail {

struct AscentObjective {
  const Game* game;
  const SocialObjective* obj;
  const std::vector<double>* lambda;
  const AugLagParams* params;

  // Ascent value: log-domain for NashProduct (same maximizers, far better
  // conditioning), weighted sum otherwise; plus multiplier and penalty terms.
  double operator()(const PolicyProfile& p, const std::vector<double>& rates) const {
    double v = 0.0;
    if (obj->kind == SocialObjective::Kind::WeightedSum) {
      for (int i = 0; i < game->n_users(); ++i) v += obj->weights[i] * rates[i];
    } else {
      for (int i = 0; i < game->n_users(); ++i) {
        double margin = rates[i] - obj->disagreement[i];
        if (margin <= params->nb_floor) return -std::numeric_limits<double>::infinity();
        v += std::log(margin);
      }
    }
    std::vector<double> h = budget_slack(*game, p);
    for (int i = 0; i < game->n_users(); ++i)
      v += (*lambda)[i] * h[i] - params->penalty_c * h[i] * h[i];
    return v;
  }

  double at(const PolicyProfile& p) const { return (*this)(p, rate_report(*game, p).per_user); }
};

}  // namespace detail

// One multiplier-fixed ascent: every round each user proposes
// Q_i = clamp(P_i + delta * dir_i) and only the best improvement commits.
// Directions are the marginal-rescaled Lagrangian gradient (every raw
// component carries a pi(s) factor, which would make literal delta-steps
// vanishingly small on large state spaces).
inline AscentResult steepest_ascent(const Game& game, const std::vector<double>& multipliers,
                                    PolicyProfile start, const AugLagParams& params,
                                    const SocialObjective& obj) {
  params.validate();
  obj.validate(game.n_users());
  const int n = game.n_users();
  detail::AscentObjective L{&game, &obj, &multipliers, &params};

  AscentResult res;
  res.profile = std::move(start);

  for (int round = 1; round <= params.max_rounds; ++round) {
    res.rounds = round;
    RateReport rr = rate_report(game, res.profile);
    std::vector<double> coeff(n, 1.0);
    if (obj.kind == SocialObjective::Kind::WeightedSum) {
      coeff = obj.weights;
    } else {
      bool feasible = true;
      for (int i = 0; i < n; ++i) {
        double margin = rr.per_user[i] - obj.disagreement[i];
        if (margin <= params.nb_floor) feasible = false;
      }
      for (int i = 0; i < n; ++i)
        coeff[i] = feasible ? 1.0 / (rr.per_user[i] - obj.disagreement[i]) : 1.0;
      // infeasible bargaining point: ascend the plain rate sum to pull back
      // above the disagreement levels first
    }
    detail::SocialEval ev = detail::weighted_rate_gradient(game, res.profile, coeff);
    std::vector<double> h = detail::budget_slack(game, res.profile);
    std::vector<std::vector<double>> dir(n);
    double worst_pg = 0.0;
    for (int i = 0; i < n; ++i) {
      dir[i].assign(game.dim(i), 0.0);
      double pg2 = 0.0;
      for (int s = 0; s < game.dim(i); ++s) {
        double m = game.marginal(i)[s];
        double g = ev.grad[i][s] + (-multipliers[i] + 2.0 * params.penalty_c * h[i]) * m;
        dir[i][s] = m > 0.0 ? g / m : 0.0;
        double stepped = std::max(0.0, res.profile.values[i][s] + params.ascent_step * dir[i][s]);
        double d = (stepped - res.profile.values[i][s]) / params.ascent_step;
        pg2 += d * d;
      }
      worst_pg = std::max(worst_pg, std::sqrt(pg2));
    }
    if (worst_pg < params.eps_gradient) {
      res.stationary = true;
      return res;
    }

    double L0 = L(res.profile, rr.per_user);
    double step = params.ascent_step;
    bool committed = false;
    for (int halving = 0; halving < 45 && !committed; ++halving) {
      double best_imp = 0.0;
      int best_i = -1;
      long best_clamps = 0;
      std::vector<double> best_vals;
      for (int i = 0; i < n; ++i) {
        std::vector<double> cand(game.dim(i));
        long clamps = 0;
        for (int s = 0; s < game.dim(i); ++s) {
          double v = res.profile.values[i][s] + step * dir[i][s];
          if (v < 0.0) {
            v = 0.0;
            ++clamps;
          }
          cand[s] = v;
        }
        std::swap(res.profile.values[i], cand);
        double Li = L.at(res.profile);
        std::swap(res.profile.values[i], cand);
        if (Li - L0 > best_imp) {
          best_imp = Li - L0;
          best_i = i;
          best_clamps = clamps;
          best_vals = std::move(cand);
        }
      }
      if (best_i >= 0) {
        res.profile.values[best_i] = std::move(best_vals);
        res.clamp_count += best_clamps;
        committed = true;
      } else {
        step *= 0.5;  // pullback: no candidate improved (e.g. NB barrier)
      }
    }
    if (!committed) return res;  // no improving step at any scale
  }
  return res;
}

struct ParetoReport {
  PolicyProfile profile;
  RateReport rates;
  double objective_value = 0.0;
  bool converged = false;  // constraint satisfied at termination
  int outer_iterations = 0;
  int rounds = 0;
  long clamp_count = 0;
};

// Full augmented-Lagrangian loop from one start.
inline ParetoReport aug_lagrangian_solve(const Game& game, const SocialObjective& obj,
                                         const AugLagParams& params, PolicyProfile start) {
  params.validate();
  std::vector<double> lambda(game.n_users(), 0.0);
  ParetoReport rep;
  rep.profile = std::move(start);
  for (int outer = 1; outer <= params.max_outer; ++outer) {
    rep.outer_iterations = outer;
    AscentResult asc = steepest_ascent(game, lambda, rep.profile, params, obj);
    rep.profile = std::move(asc.profile);
    rep.rounds += asc.rounds;
    rep.clamp_count += asc.clamp_count;
    std::vector<double> h = detail::budget_slack(game, rep.profile);
    bool ok = true;
    for (double v : h)
      if (std::abs(v) >= params.eps_constraint) ok = false;
    if (ok) {
      rep.converged = true;
      break;
    }
    for (int i = 0; i < game.n_users(); ++i) lambda[i] -= params.multiplier_step * h[i];
  }
  rep.rates = rate_report(game, rep.profile);
  rep.objective_value = social_value(game, rep.profile, obj);
  return rep;
}

inline std::vector<PolicyProfile> default_starts(const Game& game, std::uint64_t seed,
                                                 const PolicyProfile* ne = nullptr,
                                                 int n_random = 3) {
  std::vector<PolicyProfile> starts;
  starts.push_back(uniform_budget_profile(game));
  if (ne) starts.push_back(*ne);
  Rng rng(seed);
  for (int k = 0; k < n_random; ++k) starts.push_back(random_feasible_profile(game, rng));
  return starts;
}

// Multistart: best objective among converged runs (best overall if none).
inline ParetoReport solve_pareto(const Game& game, const SocialObjective& obj,
                                 const AugLagParams& params,
                                 const std::vector<PolicyProfile>& starts) {
  if (starts.empty()) throw Error("solve_pareto: no starts given");
  std::optional<ParetoReport> best;
  for (const auto& s : starts) {
    ParetoReport rep = aug_lagrangian_solve(game, obj, params, s);
    bool better = !best || (rep.converged && !best->converged) ||
                  (rep.converged == best->converged && rep.objective_value > best->objective_value);
    if (better) best = std::move(rep);
  }
  return std::move(*best);
}

inline ParetoReport solve_bargaining(const Game& game, std::vector<double> disagreement,
                                     const AugLagParams& params,
                                     const std::vector<PolicyProfile>& starts) {
  return solve_pareto(game, SocialObjective::nash_product(std::move(disagreement)), params, starts);
}

}  // namespace ifpa
