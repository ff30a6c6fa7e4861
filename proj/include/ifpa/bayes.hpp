#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ifpa/channel.hpp"

namespace ifpa {

// Finite transmit power levels of one user.
struct PowerLevels {
  std::vector<double> values;  // nonnegative, strictly increasing, contains 0

  void validate() const {
    if (values.empty() || values.front() != 0.0)
      throw Error("power levels must start at 0");
    for (std::size_t k = 1; k < values.size(); ++k)
      if (values[k] <= values[k - 1]) throw Error("power levels must be strictly increasing");
  }
};

// Pure strategy for the direct-gain game: one level index per direct state.
using DiscreteStrategy = std::vector<int>;

inline double strategy_avg_power(const DiscreteStrategy& strat, const PowerLevels& levels,
                                 const LinkDist& direct) {
  double s = 0.0;
  for (std::size_t k = 0; k < strat.size(); ++k) s += direct.probs[k] * levels.values[strat[k]];
  return s;
}

// All level assignments meeting the average power constraint, in mixed-radix
// (lowest-index-first) order so argmax tie-breaks are deterministic.
inline std::vector<DiscreteStrategy> enumerate_strategies(const PowerLevels& levels,
                                                          const LinkDist& direct, double budget,
                                                          std::size_t cap = 1000000) {
  levels.validate();
  const std::size_t m = levels.values.size();
  const std::size_t n = direct.support.size();
  double total = std::pow(static_cast<double>(m), static_cast<double>(n));
  if (total > static_cast<double>(cap))
    throw Error("strategy enumeration too large: " + std::to_string(total) + " exceeds cap");
  std::vector<DiscreteStrategy> out;
  DiscreteStrategy cur(n, 0);
  for (;;) {
    if (strategy_avg_power(cur, levels, direct) <= budget + 1e-12) out.push_back(cur);
    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (static_cast<std::size_t>(++cur[pos]) < m) break;
      cur[pos] = 0;
      if (pos == 0) return out;
    }
  }
}

// Distinct interference levels user i can see, over opponents' levels and
// cross-gain supports, rounded for well-defined support identity.
inline std::vector<double> interference_support(const ChannelModel& model,
                                                const std::vector<PowerLevels>& levels, int user,
                                                std::size_t cap = 1000000) {
  const int n = model.n_users;
  std::vector<int> opps;
  for (int j = 0; j < n; ++j)
    if (j != user) opps.push_back(j);
  double combos = 1.0;
  for (int j : opps)
    combos *= static_cast<double>(model.cross[user][j].support.size() * levels[j].values.size());
  if (combos > static_cast<double>(cap)) throw Error("interference support enumeration exceeds cap");

  std::vector<double> acc{0.0};
  for (int j : opps) {
    std::vector<double> next;
    next.reserve(acc.size() * model.cross[user][j].support.size() * levels[j].values.size());
    for (double base : acc)
      for (double g : model.cross[user][j].support)
        for (double p : levels[j].values) next.push_back(base + g * p);
    acc = std::move(next);
  }
  for (double& v : acc) v = std::round(v * 1e9) / 1e9;
  std::sort(acc.begin(), acc.end());
  acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
  return acc;
}

// Interference belief held by one user: Laplace-smoothed empirical mass
// phi(I) = (T_I + d) / (T + |support| d).
struct Belief {
  std::vector<double> support;  // sorted
  std::vector<long> counts;
  long total = 0;
  long smoothing = 1;  // d

  static Belief uniform_prior(std::vector<double> support_in, long d) {
    Belief b;
    b.support = std::move(support_in);
    b.counts.assign(b.support.size(), 0);
    b.total = 0;
    b.smoothing = d;
    if (d <= 0) throw Error("belief smoothing d must be a positive integer");
    return b;
  }

  std::vector<double> mass() const {
    std::vector<double> phi(support.size());
    double den = static_cast<double>(total) + static_cast<double>(support.size()) * smoothing;
    for (std::size_t k = 0; k < support.size(); ++k)
      phi[k] = (static_cast<double>(counts[k]) + smoothing) / den;
    return phi;
  }

  int match(double observed, double tol = 1e-6) const {
    auto it = std::lower_bound(support.begin(), support.end(), observed);
    int best = -1;
    double bestd = tol;
    for (auto cand : {it, it == support.begin() ? it : std::prev(it)}) {
      if (cand == support.end()) continue;
      double dth = std::abs(*cand - observed);
      if (dth <= bestd) {
        bestd = dth;
        best = static_cast<int>(cand - support.begin());
      }
    }
    if (best < 0)
      throw Error("observed interference " + std::to_string(observed) +
                  " not in belief support (support construction bug)");
    return best;
  }
};

inline void update_belief(Belief& belief, double observed_interference) {
  int k = belief.match(observed_interference);
  ++belief.counts[k];
  ++belief.total;
}

// Exhaustive argmax of the belief-expected rate over the feasible strategies.
// Ties break to the lowest strategy index.
inline int best_response_to_belief(const Belief& belief, const ChannelModel& model,
                                   const PowerLevels& levels, int user,
                                   const std::vector<DiscreteStrategy>& strategies) {
  if (strategies.empty()) throw Error("best_response_to_belief: empty strategy list");
  const LinkDist& direct = model.direct[user];
  std::vector<double> phi = belief.mass();
  const std::size_t n_states = direct.support.size();
  const std::size_t m = levels.values.size();
  // V[s][l] = E_phi log(1 + a g_s p_l / (1 + I))
  std::vector<double> V(n_states * m, 0.0);
  for (std::size_t s = 0; s < n_states; ++s) {
    double ag = model.alpha[user] * direct.support[s];
    for (std::size_t l = 0; l < m; ++l) {
      double acc = 0.0;
      for (std::size_t k = 0; k < belief.support.size(); ++k)
        acc += phi[k] * std::log1p(ag * levels.values[l] / (1.0 + belief.support[k]));
      V[s * m + l] = acc;
    }
  }
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < strategies.size(); ++idx) {
    double val = 0.0;
    for (std::size_t s = 0; s < n_states; ++s)
      val += direct.probs[s] * V[s * m + strategies[idx][s]];
    if (val > best_val + 1e-15) {
      best_val = val;
      best = static_cast<int>(idx);
    }
  }
  return best;
}

// Exact expected rates of the discrete direct-gain game (enumeration over
// cross gains and opponents' direct states; no beliefs involved).
inline std::vector<double> discrete_rates(const ChannelModel& model,
                                          const std::vector<PowerLevels>& levels,
                                          const std::vector<DiscreteStrategy>& strategy_of) {
  const int n = model.n_users;
  std::vector<double> rates(n, 0.0);
  for (int i = 0; i < n; ++i) {
    // interference distribution induced by opponents
    std::vector<std::pair<double, double>> dist{{0.0, 1.0}};  // (I, prob)
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      std::vector<std::pair<double, double>> next;
      const LinkDist& cg = model.cross[i][j];
      const LinkDist& dj = model.direct[j];
      for (const auto& [I, w] : dist)
        for (std::size_t c = 0; c < cg.support.size(); ++c)
          for (std::size_t s = 0; s < dj.support.size(); ++s)
            next.emplace_back(I + cg.support[c] * levels[j].values[strategy_of[j][s]],
                              w * cg.probs[c] * dj.probs[s]);
      dist = std::move(next);
    }
    const LinkDist& di = model.direct[i];
    for (std::size_t s = 0; s < di.support.size(); ++s) {
      double agp = model.alpha[i] * di.support[s] * levels[i].values[strategy_of[i][s]];
      for (const auto& [I, w] : dist) rates[i] += di.probs[s] * w * std::log1p(agp / (1.0 + I));
    }
  }
  return rates;
}

struct EpsilonNeReport {
  std::vector<double> improvement;  // nats
  double max_improvement = 0.0;
  bool pass = false;
};

// Exact epsilon-NE check: every feasible alternative strategy, exact rates.
inline EpsilonNeReport epsilon_ne_check(const std::vector<DiscreteStrategy>& strategy_of,
                                        const ChannelModel& model,
                                        const std::vector<PowerLevels>& levels, double epsilon) {
  const int n = model.n_users;
  EpsilonNeReport rep;
  rep.improvement.assign(n, 0.0);
  std::vector<double> current = discrete_rates(model, levels, strategy_of);
  for (int i = 0; i < n; ++i) {
    auto strategies = enumerate_strategies(levels[i], model.direct[i], model.budgets[i]);
    double best = current[i];
    auto work = strategy_of;
    for (const auto& st : strategies) {
      work[i] = st;
      best = std::max(best, discrete_rates(model, levels, work)[i]);
    }
    rep.improvement[i] = best - current[i];
  }
  rep.max_improvement = *std::max_element(rep.improvement.begin(), rep.improvement.end());
  rep.pass = rep.max_improvement <= epsilon;
  return rep;
}

struct BayesParams {
  long slot_cap = 50000;
  long stability_window = 500;  // slots with unchanged strategies before the NE check
  double epsilon = 0.05;        // nats
  long smoothing_d = 1;
  long br_period = 1;           // recompute best responses every this many slots
  std::uint64_t seed = 1;
};

namespace detail {

// Belief-expected-rate argmax with the log terms precomputed: only the belief
// mass changes from slot to slot, so V[s][l] reduces to a dot product. Same
// ranking as best_response_to_belief (checked in tests).
struct BrTable {
  int n_states = 0;
  int n_levels = 0;
  std::vector<double> logtab;  // [(s * n_levels + l) * support + k]
  std::vector<double> state_probs;
  const std::vector<DiscreteStrategy>* strategies = nullptr;

  void build(const Belief& belief, const ChannelModel& model, const PowerLevels& levels, int user,
             const std::vector<DiscreteStrategy>& strategy_list) {
    const LinkDist& direct = model.direct[user];
    n_states = static_cast<int>(direct.support.size());
    n_levels = static_cast<int>(levels.values.size());
    strategies = &strategy_list;
    state_probs = direct.probs;
    const std::size_t sup = belief.support.size();
    logtab.assign(static_cast<std::size_t>(n_states) * n_levels * sup, 0.0);
    for (int s = 0; s < n_states; ++s) {
      double ag = model.alpha[user] * direct.support[s];
      for (int l = 0; l < n_levels; ++l)
        for (std::size_t k = 0; k < sup; ++k)
          logtab[(static_cast<std::size_t>(s) * n_levels + l) * sup + k] =
              std::log1p(ag * levels.values[l] / (1.0 + belief.support[k]));
    }
  }

  int argmax(const std::vector<double>& phi) const {
    const std::size_t sup = phi.size();
    std::vector<double> V(static_cast<std::size_t>(n_states) * n_levels);
    for (int s = 0; s < n_states; ++s)
      for (int l = 0; l < n_levels; ++l) {
        const double* row = &logtab[(static_cast<std::size_t>(s) * n_levels + l) * sup];
        double acc = 0.0;
        for (std::size_t k = 0; k < sup; ++k) acc += phi[k] * row[k];
        V[static_cast<std::size_t>(s) * n_levels + l] = acc;
      }
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < strategies->size(); ++idx) {
      double val = 0.0;
      for (int s = 0; s < n_states; ++s)
        val += state_probs[s] * V[static_cast<std::size_t>(s) * n_levels + (*strategies)[idx][s]];
      if (val > best_val + 1e-15) {
        best_val = val;
        best = static_cast<int>(idx);
      }
    }
    return best;
  }
};

}  // namespace detail

struct SlotRecord {
  long slot = 0;
  std::vector<int> direct_state;     // per user
  std::vector<double> action;       // transmit power per user
  std::vector<double> interference; // realized at each receiver
};

struct StrategySwitch {
  long slot = 0;
  int user = 0;
  DiscreteStrategy strategy;
};

struct LearningTrace {
  std::vector<SlotRecord> slots;
  std::vector<StrategySwitch> switches;
  std::vector<DiscreteStrategy> final_strategies;
  std::vector<Belief> final_beliefs;
  EpsilonNeReport ne_report;
  std::vector<double> final_rates;  // exact, nats
  long slots_used = 0;
  bool converged = false;
};

// Repeated play of the direct-gain game with interference-belief learning:
// sample a state, play, feed back realized interference, update the Laplace
// estimator, best-respond.
inline LearningTrace simulate(const ChannelModel& model, const std::vector<PowerLevels>& levels,
                              const BayesParams& params) {
  model.validate();
  const int n = model.n_users;
  if (static_cast<int>(levels.size()) != n) throw Error("simulate: levels size mismatch");
  Rng rng(params.seed);

  std::vector<std::vector<DiscreteStrategy>> strategies(n);
  std::vector<Belief> beliefs;
  std::vector<detail::BrTable> tables(n);
  std::vector<int> current(n, 0);
  for (int i = 0; i < n; ++i) {
    strategies[i] = enumerate_strategies(levels[i], model.direct[i], model.budgets[i]);
    beliefs.push_back(
        Belief::uniform_prior(interference_support(model, levels, i), params.smoothing_d));
    tables[i].build(beliefs[i], model, levels[i], i, strategies[i]);
    current[i] = tables[i].argmax(beliefs[i].mass());
  }

  LearningTrace trace;
  trace.slots.reserve(static_cast<std::size_t>(params.slot_cap));
  for (int i = 0; i < n; ++i) trace.switches.push_back({0, i, strategies[i][current[i]]});

  long stable_for = 0;
  for (long slot = 1; slot <= params.slot_cap; ++slot) {
    trace.slots_used = slot;
    SlotRecord rec;
    rec.slot = slot;
    rec.direct_state.resize(n);
    rec.action.resize(n);
    rec.interference.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      rec.direct_state[i] = rng.pick(model.direct[i].probs);
      rec.action[i] = levels[i].values[strategies[i][current[i]][rec.direct_state[i]]];
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        double g = model.cross[i][j].support[rng.pick(model.cross[i][j].probs)];
        rec.interference[i] += g * rec.action[j];
      }
    for (int i = 0; i < n; ++i) update_belief(beliefs[i], rec.interference[i]);
    trace.slots.push_back(rec);

    bool changed = false;
    if (slot % params.br_period == 0) {
      for (int i = 0; i < n; ++i) {
        int br = best_response_to_belief(beliefs[i], model, levels[i], i, strategies[i]);
        if (br != current[i]) {
          changed = true;
          current[i] = br;
          trace.switches.push_back({slot, i, strategies[i][br]});
        }
      }
    }
    stable_for = changed ? 0 : stable_for + 1;
    if (stable_for >= params.stability_window) {
      std::vector<DiscreteStrategy> now(n);
      for (int i = 0; i < n; ++i) now[i] = strategies[i][current[i]];
      EpsilonNeReport rep = epsilon_ne_check(now, model, levels, params.epsilon);
      if (rep.pass) {
        trace.converged = true;
        trace.ne_report = std::move(rep);
        break;
      }
      stable_for = 0;  // keep learning
    }
  }

  trace.final_strategies.resize(n);
  for (int i = 0; i < n; ++i) trace.final_strategies[i] = strategies[i][current[i]];
  if (!trace.converged)
    trace.ne_report = epsilon_ne_check(trace.final_strategies, model, levels, params.epsilon);
  trace.final_rates = discrete_rates(model, levels, trace.final_strategies);
  trace.final_beliefs = std::move(beliefs);
  return trace;
}

}  // namespace ifpa
