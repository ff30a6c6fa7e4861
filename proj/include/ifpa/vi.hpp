#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ifpa/rates.hpp"

namespace ifpa {

// ---------------------------------------------------------------------------
// Affine map of the full-information game: F(P) = (I + Hhat) P + hhat, block
// per channel state with hhat(h)_i = 1/(alpha_i |h_ii|^2) and
// [Hhat(h)]_ij = |h_ij|^2 / (alpha_i |h_ii|^2), zero diagonal.
// ---------------------------------------------------------------------------
struct AffineParts {
  int n_users = 0;
  int n_states = 0;                 // reduced full-info states
  std::vector<double> hhat;         // [state * n + i]
  std::vector<double> ratio;        // [state * n * n + i * n + j], zero diagonal

  double h_of(int s, int i) const { return hhat[static_cast<std::size_t>(s) * n_users + i]; }
  double r_of(int s, int i, int j) const {
    return ratio[(static_cast<std::size_t>(s) * n_users + i) * n_users + j];
  }
};

inline AffineParts assemble_affine(const Game& game) {
  if (game.variant != Variant::Full) throw Error("assemble_affine: variant must be Full");
  const int n = game.n_users();
  AffineParts af;
  af.n_users = n;
  af.n_states = game.dim(0);
  af.hhat.assign(static_cast<std::size_t>(af.n_states) * n, 0.0);
  af.ratio.assign(static_cast<std::size_t>(af.n_states) * n * n, 0.0);
  std::vector<char> seen(af.n_states, 0);
  for (std::size_t st = 0; st < game.states.size(); ++st) {
    int s = game.indexer.info_of[0][st];  // identical across users for Full
    if (seen[s]) continue;
    seen[s] = 1;
    for (int i = 0; i < n; ++i) {
      double d = game.alpha(i) * game.states[st].gain(i, i, n);
      af.hhat[static_cast<std::size_t>(s) * n + i] = 1.0 / d;
      for (int j = 0; j < n; ++j)
        if (j != i)
          af.ratio[(static_cast<std::size_t>(s) * n + i) * n + j] = game.states[st].gain(i, j, n) / d;
    }
  }
  return af;
}

inline std::vector<std::vector<double>> affine_F(const Game& game, const AffineParts& af,
                                                 const PolicyProfile& profile) {
  const int n = af.n_users;
  std::vector<std::vector<double>> F(n);
  for (int i = 0; i < n; ++i) F[i].assign(af.n_states, 0.0);
  for (int s = 0; s < af.n_states; ++s) {
    for (int i = 0; i < n; ++i) {
      double acc = profile.values[i][s] + af.h_of(s, i);
      for (int j = 0; j < n; ++j)
        if (j != i) acc += af.r_of(s, i, j) * profile.values[j][s];
      F[i][s] = acc;
    }
  }
  return F;
}

enum class MonotonicityTag { PositiveSemidefinite, Indefinite };

struct MonotonicityReport {
  double min_eigenvalue = 0.0;  // of the symmetric part of I + Hhat, over all state blocks
  int argmin_state = -1;
  MonotonicityTag tag = MonotonicityTag::PositiveSemidefinite;
};

inline MonotonicityReport classify_monotonicity(const Game& game) {
  AffineParts af = assemble_affine(game);
  const int n = af.n_users;
  MonotonicityReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (int s = 0; s < af.n_states; ++s) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) M(i, j) += af.r_of(s, i, j);
    Eigen::MatrixXd S = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    double mn = es.eigenvalues().minCoeff();
    if (mn < rep.min_eigenvalue) {
      rep.min_eigenvalue = mn;
      rep.argmin_state = s;
    }
  }
  rep.tag = rep.min_eigenvalue >= -1e-10 ? MonotonicityTag::PositiveSemidefinite
                                         : MonotonicityTag::Indefinite;
  return rep;
}

// ---------------------------------------------------------------------------
// Exact per-user best response for the partial-information games. The KKT
// system is E[a g/(1 + I + a g P_s) | s] = mu on active states with mu set by
// the budget; inner roots by safeguarded Newton (the conditional derivative is
// convex decreasing in P_s), outer mu by bisection.
// ---------------------------------------------------------------------------
namespace detail {

struct CondScenario {
  std::vector<double> w;  // conditional weights, sum 1
  std::vector<double> I;  // interference values
  double ag = 0.0;        // alpha_i * g_ii at this info state
};

inline CondScenario collapse_scenarios(const Game& game, const PolicyProfile& profile, int user,
                                       int s) {
  const auto& opps = game.opponents(user);
  const auto& scen = game.scenarios(user, s);
  std::vector<std::pair<double, double>> iw;  // (I, w)
  iw.reserve(scen.size());
  for (const auto& sc : scen)
    iw.emplace_back(scenario_interference(sc, profile, opps), sc.w);
  std::sort(iw.begin(), iw.end());
  CondScenario out;
  out.ag = game.alpha(user) * game.direct_gain(user, s);
  double marg = game.marginal(user)[s];
  for (const auto& [I, w] : iw) {
    if (!out.I.empty() && I == out.I.back())
      out.w.back() += w / marg;
    else {
      out.I.push_back(I);
      out.w.push_back(w / marg);
    }
  }
  return out;
}

inline double cond_derivative(const CondScenario& cs, double p) {
  double acc = 0.0;
  for (std::size_t c = 0; c < cs.I.size(); ++c) acc += cs.w[c] * cs.ag / (1.0 + cs.I[c] + cs.ag * p);
  return acc;
}

// Root of cond_derivative(p) = mu for p >= 0 (0 if already below at p = 0).
inline double power_at_multiplier(const CondScenario& cs, double mu) {
  if (cond_derivative(cs, 0.0) <= mu) return 0.0;
  // D(p) <= ag/(1+ag p), so the root is below 1/mu - 1/ag.
  double hi = std::max(0.0, 1.0 / mu - 1.0 / cs.ag);
  double p = 0.0;
  for (int it = 0; it < 100; ++it) {
    double f = cond_derivative(cs, p) - mu;
    if (std::abs(f) <= mu * 1e-14) break;
    double d = 0.0;
    for (std::size_t c = 0; c < cs.I.size(); ++c) {
      double den = 1.0 + cs.I[c] + cs.ag * p;
      d -= cs.w[c] * cs.ag * cs.ag / (den * den);
    }
    double step = f / d;
    double pn = p - step;
    if (pn < 0.0) pn = 0.0;
    if (pn > hi) pn = hi;
    if (std::abs(pn - p) <= 1e-15 * (1.0 + p)) {
      p = pn;
      break;
    }
    p = pn;
  }
  return p;
}

}  // namespace detail

inline PowerPolicy best_response_partial(const Game& game, const PolicyProfile& profile, int user) {
  if (game.variant == Variant::Full) throw Error("best_response_partial: use best_response_full");
  const int dim = game.dim(user);
  std::vector<detail::CondScenario> cs(dim);
  for (int s = 0; s < dim; ++s) cs[s] = detail::collapse_scenarios(game, profile, user, s);
  const auto& marg = game.marginal(user);
  const double budget = game.budget(user);

  double mu_hi = 0.0;
  for (int s = 0; s < dim; ++s) mu_hi = std::max(mu_hi, detail::cond_derivative(cs[s], 0.0));
  double mu_lo = mu_hi;
  auto budget_gap = [&](double mu) {
    double e = 0.0;
    for (int s = 0; s < dim; ++s) e += marg[s] * detail::power_at_multiplier(cs[s], mu);
    return e - budget;
  };
  while (budget_gap(mu_lo) < 0.0) {
    mu_lo *= 0.5;
    if (mu_lo < 1e-300) break;
  }
  // budget_gap is decreasing in mu: >= 0 at mu_lo, -budget at mu_hi.
  BisectResult bis =
      bisect_decreasing(budget_gap, mu_lo, mu_hi, 1e-12 * std::max(1.0, budget));
  double mu = bis.root;
  PowerPolicy out;
  out.user = user;
  out.variant = game.variant;
  out.values.resize(dim);
  for (int s = 0; s < dim; ++s) out.values[s] = detail::power_at_multiplier(cs[s], mu);
  return out;
}

inline PowerPolicy best_response(const Game& game, const PolicyProfile& profile, int user) {
  return game.variant == Variant::Full ? best_response_full(game, profile, user)
                                       : best_response_partial(game, profile, user);
}

// ---------------------------------------------------------------------------
// VI problem and the T map.
// ---------------------------------------------------------------------------
struct ViProblem {
  const Game* game = nullptr;
  ProjectionMode mode = ProjectionMode::EqualityBinding;
  // Full game: Phase 1 iterates the projection map with tau_picard; the
  // residual g and the Phase-2 objective use tau_residual (the unit-step map,
  // whose fixed points are the same for any tau > 0 but whose scale matches
  // the distance to the water-filling target).
  double tau_picard = 0.1;
  double tau_residual = 1.0;
  std::optional<AffineParts> affine;  // prebuilt for Full

  explicit ViProblem(const Game& g) : game(&g) {
    if (g.variant == Variant::Full) affine = assemble_affine(g);
  }
};

// F(P): affine for Full, minus the rate gradients for Incident/Direct.
inline std::vector<std::vector<double>> map_F(const ViProblem& prob, const PolicyProfile& profile) {
  const Game& game = *prob.game;
  if (game.variant == Variant::Full) {
    return affine_F(game, *prob.affine, profile);
  }
  std::vector<std::vector<double>> F(game.n_users());
  for (int i = 0; i < game.n_users(); ++i) {
    std::vector<double> g = grad_rate(game, profile, i);
    for (double& v : g) v = -v;
    F[i] = std::move(g);
  }
  return F;
}

// Projection-form map T_tau(P) = Pi_A(P - tau F(P)), split per user.
inline PolicyProfile t_map_projection(const ViProblem& prob, const PolicyProfile& profile, double tau,
                                      std::vector<double>* shift_hints = nullptr) {
  const Game& game = *prob.game;
  auto F = map_F(prob, profile);
  PolicyProfile out;
  out.variant = game.variant;
  out.values.resize(game.n_users());
  for (int i = 0; i < game.n_users(); ++i) {
    std::vector<double> y(game.dim(i));
    for (int s = 0; s < game.dim(i); ++s) y[s] = profile.values[i][s] - tau * F[i][s];
    const double* hint = nullptr;
    if (shift_hints && shift_hints->size() == static_cast<std::size_t>(game.n_users()))
      hint = &(*shift_hints)[i];
    ProjectionResult pr = project_with_shift(y, game.marginal(i), game.budget(i), prob.mode, hint);
    if (shift_hints) {
      if (shift_hints->size() != static_cast<std::size_t>(game.n_users()))
        shift_hints->assign(game.n_users(), 0.0);
      (*shift_hints)[i] = pr.shift;
    }
    out.values[i] = std::move(pr.values);
  }
  return out;
}

inline PolicyProfile best_response_map(const Game& game, const PolicyProfile& profile) {
  PolicyProfile out;
  out.variant = game.variant;
  out.values.resize(game.n_users());
  for (int i = 0; i < game.n_users(); ++i) out.values[i] = best_response(game, profile, i).values;
  return out;
}

// The solver's T map. Full: projection map at the given tau. Partial: the
// simultaneous exact best response (the better-response fixed-point map; its
// fixed points are the NE, and Picard on it reproduces the reported
// Phase-1 behaviour).
inline PolicyProfile t_map(const ViProblem& prob, const PolicyProfile& profile,
                           std::optional<double> tau = std::nullopt,
                           std::vector<double>* shift_hints = nullptr) {
  const Game& game = *prob.game;
  if (game.variant == Variant::Full)
    return t_map_projection(prob, profile, tau.value_or(prob.tau_picard), shift_hints);
  return best_response_map(game, profile);
}

inline double residual(const ViProblem& prob, const PolicyProfile& profile,
                       std::vector<double>* shift_hints = nullptr) {
  PolicyProfile T = prob.game->variant == Variant::Full
                        ? t_map_projection(prob, profile, prob.tau_residual, shift_hints)
                        : best_response_map(*prob.game, profile);
  return profile_distance(profile, T);
}

// Right-hand side of the unit-step residual identity
//   g^2 = sum_{h,i} min{ P_i(h), P_i(h) + omega_i(h) + lambda_i }^2
// with omega_i = (1+interference)/(alpha g_ii) and lambda_i the shift of the
// budget-binding projection of f_i = -omega_i (EqualityBinding, tau = 1).
inline double residual_minsum(const ViProblem& prob, const PolicyProfile& profile) {
  const Game& game = *prob.game;
  if (game.variant != Variant::Full) throw Error("residual_minsum: Full variant only");
  if (prob.mode != ProjectionMode::EqualityBinding)
    throw Error("residual_minsum: EqualityBinding mode only");
  AffineParts af = assemble_affine(game);
  auto F = affine_F(game, af, profile);
  double total = 0.0;
  for (int i = 0; i < game.n_users(); ++i) {
    std::vector<double> f(game.dim(i));
    for (int s = 0; s < game.dim(i); ++s)
      f[s] = profile.values[i][s] - F[i][s];  // = -omega_i(s)
    ProjectionResult pr =
        project_with_shift(f, game.marginal(i), game.budget(i), ProjectionMode::EqualityBinding);
    for (int s = 0; s < game.dim(i); ++s) {
      double omega = -f[s];
      double term = std::min(profile.values[i][s], profile.values[i][s] + omega + pr.shift);
      total += term * term;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Two-phase heuristic.
// ---------------------------------------------------------------------------
struct SolveParams {
  int max_picard = 100;       // MAX
  double eps = 1e-3;          // residual target
  double delta = 1e-6;        // stall threshold
  int restart_cap = 10;
  double fd_step = 1e-4;      // central-difference scale
  double gamma0 = 0.5;        // gamma_1; gamma_{t+10} = gamma_t/(1+gamma_t)
  int gamma_every = 10;
  int max_sweeps = 1200;      // per Phase-2 invocation
  double tau_picard = 0.1;
  double tau_residual = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (max_picard < 0 || eps <= 0.0 || delta <= 0.0 || restart_cap < 1 || fd_step <= 0.0 ||
        gamma0 <= 0.0 || max_sweeps < 1 || tau_picard <= 0.0 || tau_residual <= 0.0)
      throw Error("SolveParams: all parameters must be positive (restart_cap >= 1)");
  }
};

inline PolicyProfile phase1(const ViProblem& prob, PolicyProfile profile, int max_iters,
                            std::optional<double> tau = std::nullopt) {
  std::vector<double> hints;
  for (int n = 0; n < max_iters; ++n) profile = t_map(prob, profile, tau, &hints);
  return profile;
}

enum class Phase2Status { Converged, Stalled, SweepCapReached };

namespace detail {

// Per-user projection cache for the Full-variant Phase-2 inner loop. The
// finite-difference probes perturb one pre-projection coordinate at a time;
// with the entries sorted by y and prefix sums precomputed, the budget shift
// and the residual norm of a single-entry patch are O(log n) instead of a
// fresh O(n * iterations) bisection. Exact same quantities as the public
// projection (EqualityBinding), verified against it in the test suite.
struct ProjCache {
  std::vector<int> order;      // entry indices, y descending
  std::vector<double> ys;      // y in descending order
  std::vector<double> sm;      // prefix sums of marginals over ys
  std::vector<double> smy;     // prefix sums of m*y
  std::vector<double> sd;      // prefix sums of (P - y)
  std::vector<double> sd2;     // prefix sums of (P - y)^2
  std::vector<double> sp2;     // prefix sums of P^2
  double p2_total = 0.0;
  std::vector<double> y;       // natural order
  std::vector<double> p;       // natural order
  const std::vector<double>* m = nullptr;
  double budget = 0.0;

  struct Patch {
    int pos = -1;
    double y_new = 0.0;
    double p_new = 0.0;
  };

  void build(const std::vector<double>& y_in, const std::vector<double>& p_in,
             const std::vector<double>& marginal, double budget_in) {
    y = y_in;
    p = p_in;
    m = &marginal;
    budget = budget_in;
    const std::size_t n = y.size();
    order.resize(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = static_cast<int>(k);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return y[a] > y[b]; });
    ys.resize(n);
    sm.assign(n + 1, 0.0);
    smy.assign(n + 1, 0.0);
    sd.assign(n + 1, 0.0);
    sd2.assign(n + 1, 0.0);
    sp2.assign(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      int idx = order[k];
      ys[k] = y[idx];
      double diff = p[idx] - y[idx];
      sm[k + 1] = sm[k] + marginal[idx];
      smy[k + 1] = smy[k] + marginal[idx] * y[idx];
      sd[k + 1] = sd[k] + diff;
      sd2[k + 1] = sd2[k] + diff * diff;
      sp2[k + 1] = sp2[k] + p[idx] * p[idx];
    }
    p2_total = sp2[n];
  }

  // #entries with y > lam in the UNPATCHED arrays
  std::size_t boundary(double lam) const {
    return std::upper_bound(ys.begin(), ys.end(), lam, std::greater<double>()) - ys.begin();
  }

  double power(double lam, const Patch* patch) const {
    std::size_t k = boundary(lam);
    double val = smy[k] - lam * sm[k];
    if (patch) {
      double mm = (*m)[patch->pos];
      if (y[patch->pos] > lam) val -= mm * (y[patch->pos] - lam);
      if (patch->y_new > lam) val += mm * (patch->y_new - lam);
    }
    return val;
  }

  double solve_shift(const Patch* patch) const {
    double ylo = ys.empty() ? 0.0 : ys.back();
    double yhi = ys.empty() ? 0.0 : ys.front();
    if (patch) {
      ylo = std::min(ylo, patch->y_new);
      yhi = std::max(yhi, patch->y_new);
    }
    // with sum(m) = 1, power(ylo - budget - 1) >= budget
    double lo = ylo - budget - 1.0;
    double hi = yhi;
    for (int it = 0; it < 90; ++it) {
      double mid = 0.5 * (lo + hi);
      if (power(mid, patch) > budget)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  // || P - max(0, y - lam) ||^2 with the optional single-entry patch
  double residual_sq(double lam, const Patch* patch) const {
    std::size_t k = boundary(lam);
    double active = sd2[k] + 2.0 * lam * sd[k] + static_cast<double>(k) * lam * lam;
    double inactive = p2_total - sp2[k];
    double val = active + inactive;
    if (patch) {
      double term_old = y[patch->pos] > lam
                            ? (p[patch->pos] - y[patch->pos] + lam) * (p[patch->pos] - y[patch->pos] + lam)
                            : p[patch->pos] * p[patch->pos];
      double dn = patch->p_new - patch->y_new + lam;
      double term_new = patch->y_new > lam ? dn * dn : patch->p_new * patch->p_new;
      val += term_new - term_old;
    }
    return val;
  }

  double patched_residual_sq(const Patch* patch) const {
    return residual_sq(solve_shift(patch), patch);
  }
};

// Full-variant residual-squared evaluator with O(log n) single-coordinate
// probes, used by the Phase-2 finite differences.
class FullResidualProbe {
 public:
  FullResidualProbe(const ViProblem& prob) : prob_(&prob), game_(prob.game) {}

  void rebase(const PolicyProfile& profile) {
    auto F = affine_F(*game_, *prob_->affine, profile);
    const int n = game_->n_users();
    caches_.resize(n);
    for (int j = 0; j < n; ++j) {
      std::vector<double> y(game_->dim(j));
      for (int s = 0; s < game_->dim(j); ++s)
        y[s] = profile.values[j][s] - prob_->tau_residual * F[j][s];
      caches_[j].build(y, profile.values[j], game_->marginal(j), game_->budget(j));
    }
  }

  double base_f() const {
    double total = 0.0;
    for (const auto& c : caches_) total += c.patched_residual_sq(nullptr);
    return total;
  }

  // f at the base profile with P_i(s0) displaced by delta
  double perturbed_f(int i, int s0, double delta) const {
    const int n = game_->n_users();
    const AffineParts& af = *prob_->affine;
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      ProjCache::Patch patch;
      patch.pos = s0;
      double dF = (j == i) ? delta : af.r_of(s0, j, i) * delta;
      double dP = (j == i) ? delta : 0.0;
      patch.y_new = caches_[j].y[s0] + dP - prob_->tau_residual * dF;
      patch.p_new = caches_[j].p[s0] + dP;
      total += caches_[j].patched_residual_sq(&patch);
    }
    return total;
  }

 private:
  const ViProblem* prob_;
  const Game* game_;
  std::vector<ProjCache> caches_;
};

}  // namespace detail

struct Phase2Result {
  PolicyProfile profile;
  Phase2Status status = Phase2Status::SweepCapReached;
  int sweeps = 0;
  double g = 0.0;
};

inline Phase2Result phase2(const ViProblem& prob, PolicyProfile profile, const SolveParams& params) {
  const Game& game = *prob.game;
  const bool fast =
      game.variant == Variant::Full && prob.mode == ProjectionMode::EqualityBinding && prob.affine;
  detail::FullResidualProbe probe(prob);

  auto fd_gradient = [&](PolicyProfile& p, int i, std::vector<double>& grad) {
    if (fast) {
      probe.rebase(p);
      for (int s = 0; s < game.dim(i); ++s) {
        const double h = params.fd_step * std::max(1.0, std::abs(p.values[i][s]));
        grad[s] = (probe.perturbed_f(i, s, h) - probe.perturbed_f(i, s, -h)) / (2.0 * h);
      }
      return;
    }
    for (int s = 0; s < game.dim(i); ++s) {
      double& x = p.values[i][s];
      const double h = params.fd_step * std::max(1.0, std::abs(x));
      const double saved = x;
      x = saved + h;
      double gp = residual(prob, p);
      x = saved - h;
      double gm = residual(prob, p);
      x = saved;
      grad[s] = (gp * gp - gm * gm) / (2.0 * h);
    }
  };

  Phase2Result res;
  res.profile = std::move(profile);
  double gamma = params.gamma0;
  std::vector<double> grad;
  for (int sweep = 1; sweep <= params.max_sweeps; ++sweep) {
    PolicyProfile prev = res.profile;
    for (int i = 0; i < game.n_users(); ++i) {
      grad.assign(game.dim(i), 0.0);
      fd_gradient(res.profile, i, grad);
      std::vector<double> y(game.dim(i));
      for (int s = 0; s < game.dim(i); ++s) y[s] = res.profile.values[i][s] - gamma * grad[s];
      res.profile.values[i] =
          project_with_shift(y, game.marginal(i), game.budget(i), prob.mode).values;
    }
    res.sweeps = sweep;
    res.g = residual(prob, res.profile);
    if (res.g < params.eps) {
      res.status = Phase2Status::Converged;
      return res;
    }
    if (profile_distance(prev, res.profile) < params.delta) {
      res.status = Phase2Status::Stalled;
      return res;
    }
    if (sweep % params.gamma_every == 0) gamma = gamma / (1.0 + gamma);
  }
  res.status = Phase2Status::SweepCapReached;
  return res;
}

struct SolveReport {
  PolicyProfile profile;
  double g = 0.0;
  int picard_iterations = 0;
  int descent_sweeps = 0;
  int restarts = 0;
  bool converged = false;
  RateReport rates;
  double wall_seconds = 0.0;
};

inline SolveReport solve_ne(const Game& game, const SolveParams& params,
                            std::optional<PolicyProfile> start = std::nullopt) {
  params.validate();
  auto t0 = std::chrono::steady_clock::now();
  ViProblem prob(game);
  prob.tau_picard = params.tau_picard;
  prob.tau_residual = params.tau_residual;
  Rng rng(params.seed);
  PolicyProfile P = start ? std::move(*start) : random_feasible_profile(game, rng);

  SolveReport rep;
  rep.profile = P;
  rep.g = residual(prob, P);

  auto consider = [&](const PolicyProfile& cand, double g) {
    if (g < rep.g) {
      rep.profile = cand;
      rep.g = g;
    }
  };

  for (int round = 0;; ++round) {
    // Restart rounds alternate the Phase-1 step scale between the damped map
    // and the unit-step (water-filling best-response) map; the two converge
    // in complementary interference regimes. A Picard pass that worsens the
    // residual is discarded.
    std::optional<double> tau;
    if (game.variant == Variant::Full && round % 2 == 1) tau = prob.tau_residual;
    double g_pre = residual(prob, P);
    PolicyProfile cand = phase1(prob, P, params.max_picard, tau);
    rep.picard_iterations += params.max_picard;
    double g = residual(prob, cand);
    if (g <= g_pre)
      P = std::move(cand);
    else
      g = g_pre;
    consider(P, g);
    if (g < params.eps) {
      rep.converged = true;
      break;
    }
    Phase2Result p2 = phase2(prob, P, params);
    rep.descent_sweeps += p2.sweeps;
    P = p2.profile;
    consider(P, p2.g);
    if (p2.status == Phase2Status::Converged) {
      rep.converged = true;
      break;
    }
    if (round >= params.restart_cap) break;  // non-convergence, best iterate reported
    ++rep.restarts;                          // stall: back to Phase 1 from here
  }
  rep.rates = rate_report(game, rep.profile);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------------------
// NE verification: exact best responses, computed by a route independent of
// the solver's T map (water-filling for Full, projected-gradient ascent with
// the Euclidean projection for Incident/Direct).
// ---------------------------------------------------------------------------
struct VerifyReport {
  std::vector<double> improvement;  // nats, per user
  double max_improvement = 0.0;
  bool pass = false;
};

namespace detail {

inline std::vector<double> projected_gradient_br(const Game& game, const PolicyProfile& profile,
                                                 int user, double gm_tol, int max_iters) {
  PolicyProfile work = profile;
  std::vector<double>& P = work.values[user];
  const auto& marg = game.marginal(user);
  const double budget = game.budget(user);

  // Lipschitz estimate of the gradient: |d2 r / dP_s^2| <= m_s (a g)^2.
  double L = 0.0;
  for (int s = 0; s < game.dim(user); ++s) {
    double ag = game.alpha(user) * game.direct_gain(user, s);
    L = std::max(L, marg[s] * ag * ag);
  }
  double step = 1.0 / std::max(L, 1e-12);
  double r_cur = expected_rate(game, work, user);
  for (int it = 0; it < max_iters; ++it) {
    std::vector<double> g = grad_rate(game, work, user);
    // gradient-map residual with a unit probe
    std::vector<double> probe(P.size());
    for (std::size_t s = 0; s < P.size(); ++s) probe[s] = P[s] + g[s];
    std::vector<double> mapped =
        project_with_shift(probe, marg, budget, ProjectionMode::InequalityKkt).values;
    if (l2_dist(P, mapped) <= gm_tol) break;

    std::vector<double> y(P.size());
    for (std::size_t s = 0; s < P.size(); ++s) y[s] = P[s] + step * g[s];
    std::vector<double> cand =
        project_with_shift(y, marg, budget, ProjectionMode::InequalityKkt).values;
    PolicyProfile trial = work;
    trial.values[user] = cand;
    double r_new = expected_rate(game, trial, user);
    if (r_new >= r_cur - 1e-15) {
      P = std::move(cand);
      r_cur = r_new;
      step *= 1.25;
    } else {
      step *= 0.5;
    }
  }
  return P;
}

}  // namespace detail

inline VerifyReport verify_ne(const Game& game, const PolicyProfile& profile, double tol,
                              double inner_gm_tol = 1e-8, int inner_iters = 200000) {
  VerifyReport rep;
  rep.improvement.resize(game.n_users());
  for (int i = 0; i < game.n_users(); ++i) {
    double r_cur = expected_rate(game, profile, i);
    PolicyProfile trial = profile;
    if (game.variant == Variant::Full)
      trial.values[i] = best_response_full(game, profile, i).values;
    else
      trial.values[i] = detail::projected_gradient_br(game, profile, i, inner_gm_tol, inner_iters);
    rep.improvement[i] = expected_rate(game, trial, i) - r_cur;
  }
  rep.max_improvement = *std::max_element(rep.improvement.begin(), rep.improvement.end());
  rep.pass = rep.max_improvement <= tol;
  return rep;
}

// Complementary-slackness structure at a full-information NE: per user/state
// either P = 0 and omega + lambda >= -tol, or P > 0 and |P + omega + lambda|
// <= tol, with lambda the budget-binding shift of projecting f_i = -omega_i.
struct SupportCheck {
  double worst_inactive = 0.0;  // most negative omega + lambda on inactive states
  double worst_active = 0.0;    // largest |P + omega + lambda| on active states
};

inline SupportCheck check_ne_support(const Game& game, const PolicyProfile& profile) {
  if (game.variant != Variant::Full) throw Error("check_ne_support: Full variant only");
  AffineParts af = assemble_affine(game);
  auto F = affine_F(game, af, profile);
  SupportCheck out;
  for (int i = 0; i < game.n_users(); ++i) {
    std::vector<double> f(game.dim(i));
    for (int s = 0; s < game.dim(i); ++s) f[s] = profile.values[i][s] - F[i][s];
    ProjectionResult pr =
        project_with_shift(f, game.marginal(i), game.budget(i), ProjectionMode::EqualityBinding);
    for (int s = 0; s < game.dim(i); ++s) {
      double omega = -f[s];
      double p = profile.values[i][s];
      if (p <= 1e-12)
        out.worst_inactive = std::min(out.worst_inactive, omega + pr.shift);
      else
        out.worst_active = std::max(out.worst_active, std::abs(p + omega + pr.shift));
    }
  }
  return out;
}

}  // namespace ifpa
