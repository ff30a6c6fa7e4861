#pragma once

#include <cmath>
#include <vector>

#include "ifpa/policy.hpp"

namespace ifpa {

struct RateReport {
  std::vector<double> per_user;  // nats/channel use unless converted
  double sum = 0.0;

  static RateReport from(std::vector<double> rates) {
    RateReport r;
    r.per_user = std::move(rates);
    r.sum = 0.0;
    for (double v : r.per_user) r.sum += v;
    return r;
  }

  RateReport in_base(LogBase base) const {
    RateReport r = *this;
    for (double& v : r.per_user) v = to_base(v, base);
    r.sum = to_base(sum, base);
    return r;
  }
};

namespace detail {

inline double scenario_interference(const Game::Scenario& sc, const PolicyProfile& profile,
                                    const std::vector<int>& opps) {
  double interf = 0.0;
  for (std::size_t k = 0; k < opps.size(); ++k)
    interf += sc.coef[k] * profile.values[opps[k]][sc.opp_state[k]];
  return interf;
}

}  // namespace detail

// Exact expected rate of user i in nats, enumerating the variant's scenario
// table (no sampling anywhere in the core).
inline double expected_rate(const Game& game, const PolicyProfile& profile, int user) {
  if (profile.variant != game.variant) throw Error("expected_rate: variant mismatch");
  if (profile.n_users() != game.n_users() ||
      static_cast<int>(profile.values[user].size()) != game.dim(user))
    throw Error("expected_rate: profile dimension mismatch");
  const auto& opps = game.opponents(user);
  const double a = game.alpha(user);
  double total = 0.0;
  for (int s = 0; s < game.dim(user); ++s) {
    const double gp = a * game.direct_gain(user, s) * profile.values[user][s];
    for (const auto& sc : game.scenarios(user, s))
      total += sc.w * std::log1p(gp / (1.0 + detail::scenario_interference(sc, profile, opps)));
  }
  return total;
}

inline double rate_full(const Game& game, const PolicyProfile& profile, int user) {
  if (game.variant != Variant::Full) throw Error("rate_full: variant mismatch");
  return expected_rate(game, profile, user);
}

inline double rate_incident(const Game& game, const PolicyProfile& profile, int user) {
  if (game.variant != Variant::Incident) throw Error("rate_incident: variant mismatch");
  return expected_rate(game, profile, user);
}

inline double rate_direct(const Game& game, const PolicyProfile& profile, int user) {
  if (game.variant != Variant::Direct) throw Error("rate_direct: variant mismatch");
  return expected_rate(game, profile, user);
}

inline RateReport rate_report(const Game& game, const PolicyProfile& profile) {
  std::vector<double> r(game.n_users());
  for (int i = 0; i < game.n_users(); ++i) r[i] = expected_rate(game, profile, i);
  return RateReport::from(std::move(r));
}

// Analytic gradient of user i's expected rate with respect to its own powers:
// d r_i / d P_i(s) = sum_c w_c * a g / (1 + I_c + a g P_i(s)).
inline std::vector<double> grad_rate(const Game& game, const PolicyProfile& profile, int user) {
  if (profile.variant != game.variant) throw Error("grad_rate: variant mismatch");
  const auto& opps = game.opponents(user);
  const double a = game.alpha(user);
  std::vector<double> grad(game.dim(user), 0.0);
  for (int s = 0; s < game.dim(user); ++s) {
    const double ag = a * game.direct_gain(user, s);
    const double p = profile.values[user][s];
    double acc = 0.0;
    for (const auto& sc : game.scenarios(user, s))
      acc += sc.w * ag / (1.0 + detail::scenario_interference(sc, profile, opps) + ag * p);
    grad[s] = acc;
  }
  return grad;
}

// Lift a partial-information profile to the full-state parameterization:
// P_j^lift(h) = P_j(info_j(h)). Used by the lifting-equivalence checks.
inline PolicyProfile lift_profile(const Game& partial, const PolicyProfile& profile, const Game& full) {
  if (profile.variant != partial.variant || full.variant != Variant::Full)
    throw Error("lift_profile: variant mismatch");
  PolicyProfile out;
  out.variant = Variant::Full;
  out.values.resize(partial.n_users());
  for (int j = 0; j < partial.n_users(); ++j) {
    out.values[j].resize(full.dim(j));
    for (std::size_t st = 0; st < full.states.size(); ++st)
      out.values[j][full.indexer.info_of[j][st]] = profile.values[j][partial.indexer.info_of[j][st]];
  }
  return out;
}

// Effective interference used by the Jensen lower bounds: opponents at their
// budgets, cross gains realized (Incident) or averaged (Direct).
inline std::vector<double> lower_bound_interference(const Game& game, int user) {
  std::vector<double> eff(game.dim(user), 0.0);
  const auto& opps = game.opponents(user);
  if (game.variant == Variant::Incident) {
    for (int s = 0; s < game.dim(user); ++s) {
      const auto& sc = game.scenarios(user, s).front();  // row gains fixed given s
      double interf = 0.0;
      for (std::size_t k = 0; k < opps.size(); ++k) interf += sc.coef[k] * game.budget(opps[k]);
      eff[s] = interf;
    }
  } else if (game.variant == Variant::Direct) {
    double interf = 0.0;
    for (int j : opps) {
      const LinkDist& d = game.model.cross[user][j];
      double mean = 0.0;
      for (std::size_t k = 0; k < d.support.size(); ++k) mean += d.support[k] * d.probs[k];
      interf += mean * game.budget(j);
    }
    for (int s = 0; s < game.dim(user); ++s) eff[s] = interf;
  } else {
    throw Error("lower bound: defined for Incident and Direct only");
  }
  return eff;
}

// Jensen lower bound on user i's rate: interference replaced by its
// budget-level value, making the bound independent of opponents' policies.
inline double lower_bound_rate(const Game& game, const std::vector<double>& policy_i, int user) {
  std::vector<double> eff = lower_bound_interference(game, user);
  const double a = game.alpha(user);
  double total = 0.0;
  for (int s = 0; s < game.dim(user); ++s)
    total += game.marginal(user)[s] *
             std::log1p(a * game.direct_gain(user, s) * policy_i[s] / (1.0 + eff[s]));
  return total;
}

// Water-filling maximizer of the lower bound.
inline PowerPolicy lower_bound_maximizer(const Game& game, int user) {
  std::vector<double> eff = lower_bound_interference(game, user);
  std::vector<double> base(game.dim(user));
  for (int s = 0; s < game.dim(user); ++s)
    base[s] = -(1.0 + eff[s]) / (game.alpha(user) * game.direct_gain(user, s));
  return water_fill(base, game.indexer, user, game.budget(user));
}

}  // namespace ifpa
