#pragma once

#include <map>
#include <utility>
#include <vector>

#include "ifpa/channel.hpp"

namespace ifpa {

// Immutable evaluation context for one (model, variant) pair: the enumerated
// joint states, the information indexer, and per-(user, info-state) scenario
// tables used by rate, gradient and best-response evaluation.
//
// A scenario of user i at own info-state s is one joint configuration of the
// quantities the rate integrand depends on besides P_i(s): the interference
// coefficients g_ij and the opponents' info states. Scenario weights are
// joint probabilities (they sum to marginal(i,s) over a fiber), so
//   r_i = sum_{s} sum_{c in scen(i,s)} w_c log(1 + a_i g_i(s) P_i(s) / (1 + I_c))
// with I_c = sum_j coef_c[j] * P_j(state_c[j]).
class Game {
 public:
  struct Scenario {
    double w;                   // joint probability of the group
    std::vector<double> coef;   // per opponent (order: opponents of i ascending)
    std::vector<int> opp_state; // opponent info-state indices
  };

  Game(ChannelModel model_in, Variant variant_in)
      : model(std::move(model_in)),
        variant(variant_in),
        states(enumerate_states(model)),
        indexer(build_indexer(model, states, variant_in)) {
    build_scenarios();
  }

  ChannelModel model;
  Variant variant;
  std::vector<JointState> states;
  InfoIndexer indexer;

  int n_users() const { return model.n_users; }
  int dim(int user) const { return indexer.info_count(user); }
  int total_dim() const { return indexer.total_dim(); }
  double budget(int user) const { return model.budgets[user]; }
  double alpha(int user) const { return model.alpha[user]; }
  double direct_gain(int user, int s) const { return indexer.direct_gain[user][s]; }
  const std::vector<double>& marginal(int user) const { return indexer.marginal[user]; }
  const std::vector<Scenario>& scenarios(int user, int s) const { return scen_[user][s]; }
  const std::vector<int>& opponents(int user) const { return opps_[user]; }

 private:
  void build_scenarios() {
    const int n = n_users();
    scen_.assign(n, {});
    opps_.assign(n, {});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        if (j != i) opps_[i].push_back(j);
      scen_[i].assign(dim(i), {});
      // group joint states by (own info state, coefs, opponents' info states)
      std::vector<std::map<std::vector<double>, std::size_t>> groups(dim(i));
      for (std::size_t st = 0; st < states.size(); ++st) {
        int s = indexer.info_of[i][st];
        std::vector<double> key;
        key.reserve(2 * opps_[i].size());
        for (int j : opps_[i]) {
          key.push_back(states[st].gain(i, j, n));
          key.push_back(static_cast<double>(indexer.info_of[j][st]));
        }
        auto [it, inserted] = groups[s].try_emplace(key, scen_[i][s].size());
        if (inserted) {
          Scenario sc;
          sc.w = 0.0;
          for (std::size_t k = 0; k < opps_[i].size(); ++k) {
            sc.coef.push_back(key[2 * k]);
            sc.opp_state.push_back(static_cast<int>(key[2 * k + 1]));
          }
          scen_[i][s].push_back(std::move(sc));
        }
        scen_[i][s][it->second].w += states[st].prob;
      }
    }
  }

  std::vector<std::vector<std::vector<Scenario>>> scen_;  // [user][info s][group]
  std::vector<std::vector<int>> opps_;
};

}  // namespace ifpa
