#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ifpa/common.hpp"

namespace ifpa {

enum class Variant { Full, Incident, Direct };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::Incident: return "incident";
    case Variant::Direct: return "direct";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "incident") return Variant::Incident;
  if (s == "direct") return Variant::Direct;
  throw Error("unknown variant '" + s + "' (expected full|incident|direct)");
}

// Finite support of one link's power gain with its distribution.
struct LinkDist {
  std::vector<double> support;
  std::vector<double> probs;

  void validate(const std::string& what, bool strictly_positive) const {
    if (support.empty() || support.size() != probs.size())
      throw Error(what + ": support/probs size mismatch");
    double sum = 0.0;
    for (double p : probs) {
      if (p < 0.0) throw Error(what + ": negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw Error(what + ": probabilities sum to " + std::to_string(sum));
    for (double g : support) {
      if (g < 0.0) throw Error(what + ": negative gain");
      if (strictly_positive && g <= 0.0) throw Error(what + ": direct gain must be > 0");
    }
  }
};

// Fading interference channel with i.i.d. finite-support link gains.
// Gains are stored as power gains |h_ij|^2; cross[i][j] is the link from
// transmitter j into receiver i.
struct ChannelModel {
  int n_users = 0;
  std::vector<LinkDist> direct;               // per user i: |h_ii|^2
  std::vector<std::vector<LinkDist>> cross;   // [rx i][tx j], diagonal unused
  std::vector<double> budgets;                // average power limits, watts
  std::vector<double> alpha;                  // modulation constants, default 1
  std::size_t enumeration_cap = 1000000;

  void validate() const {
    if (n_users < 1) throw Error("model: n_users must be >= 1");
    if (static_cast<int>(direct.size()) != n_users) throw Error("model: direct size != n_users");
    if (static_cast<int>(cross.size()) != n_users) throw Error("model: cross size != n_users");
    if (static_cast<int>(budgets.size()) != n_users) throw Error("model: budgets size != n_users");
    if (static_cast<int>(alpha.size()) != n_users) throw Error("model: alpha size != n_users");
    for (int i = 0; i < n_users; ++i) {
      direct[i].validate("direct[" + std::to_string(i) + "]", /*strictly_positive=*/true);
      if (static_cast<int>(cross[i].size()) != n_users)
        throw Error("model: cross[" + std::to_string(i) + "] size != n_users");
      for (int j = 0; j < n_users; ++j) {
        if (i == j) continue;
        cross[i][j].validate("cross[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                             /*strictly_positive=*/false);
      }
      if (budgets[i] <= 0.0) throw Error("model: budget of user " + std::to_string(i) + " must be > 0");
      if (alpha[i] <= 0.0) throw Error("model: alpha of user " + std::to_string(i) + " must be > 0");
    }
  }

  std::size_t state_count() const {
    std::size_t n = 1;
    for (int i = 0; i < n_users; ++i) {
      n *= direct[i].support.size();
      for (int j = 0; j < n_users; ++j)
        if (i != j) n *= cross[i][j].support.size();
    }
    return n;
  }

  ChannelModel with_budget(double shared) const {
    ChannelModel m = *this;
    std::fill(m.budgets.begin(), m.budgets.end(), shared);
    return m;
  }
};

// One realized gain matrix with its probability.
struct JointState {
  std::vector<double> gains;  // row-major n x n
  double prob = 0.0;

  double gain(int i, int j, int n) const { return gains[static_cast<std::size_t>(i) * n + j]; }
};

// Exhaustive cartesian product over all link supports. Links are independent,
// so state probabilities are products of per-link probabilities.
inline std::vector<JointState> enumerate_states(const ChannelModel& model) {
  model.validate();
  std::size_t count = model.state_count();
  if (count > model.enumeration_cap)
    throw Error("state enumeration too large: " + std::to_string(count) + " states exceeds cap " +
                std::to_string(model.enumeration_cap));

  const int n = model.n_users;
  struct Link {
    int i, j;
    const LinkDist* dist;
  };
  std::vector<Link> links;
  for (int i = 0; i < n; ++i) {
    links.push_back({i, i, &model.direct[i]});
    for (int j = 0; j < n; ++j)
      if (i != j) links.push_back({i, j, &model.cross[i][j]});
  }

  std::vector<JointState> states;
  states.reserve(count);
  std::vector<std::size_t> idx(links.size(), 0);
  for (;;) {
    JointState st;
    st.gains.assign(static_cast<std::size_t>(n) * n, 0.0);
    st.prob = 1.0;
    for (std::size_t l = 0; l < links.size(); ++l) {
      st.gains[static_cast<std::size_t>(links[l].i) * n + links[l].j] = links[l].dist->support[idx[l]];
      st.prob *= links[l].dist->probs[idx[l]];
    }
    states.push_back(std::move(st));
    std::size_t l = links.size();
    while (l > 0) {
      --l;
      if (++idx[l] < links[l].dist->support.size()) break;
      idx[l] = 0;
      if (l == 0) return states;
    }
  }
}

// Maps joint states to per-user information states.
struct InfoIndexer {
  Variant variant = Variant::Full;
  int n_users = 0;
  std::vector<std::vector<int>> info_of;        // [user][joint state idx]
  std::vector<std::vector<double>> marginal;    // [user][info idx]
  std::vector<std::vector<double>> direct_gain; // [user][info idx]: |h_ii|^2 there

  int info_count(int user) const { return static_cast<int>(marginal[user].size()); }

  int total_dim() const {
    int d = 0;
    for (int i = 0; i < n_users; ++i) d += info_count(i);
    return d;
  }
};

inline InfoIndexer build_indexer(const ChannelModel& model, const std::vector<JointState>& states,
                                 Variant variant) {
  const int n = model.n_users;
  InfoIndexer ix;
  ix.variant = variant;
  ix.n_users = n;
  ix.info_of.assign(n, std::vector<int>(states.size(), 0));
  ix.marginal.assign(n, {});
  ix.direct_gain.assign(n, {});

  for (int i = 0; i < n; ++i) {
    // Key info states by the relevant gain values so that joint states
    // agreeing on them share an index even with duplicated support values.
    std::map<std::vector<double>, int> key_to_idx;
    for (std::size_t s = 0; s < states.size(); ++s) {
      std::vector<double> key;
      switch (variant) {
        case Variant::Full:
          key = states[s].gains;
          break;
        case Variant::Incident:
          key.reserve(n);
          for (int j = 0; j < n; ++j) key.push_back(states[s].gain(i, j, n));
          break;
        case Variant::Direct:
          key.push_back(states[s].gain(i, i, n));
          break;
      }
      auto [it, inserted] = key_to_idx.try_emplace(key, static_cast<int>(key_to_idx.size()));
      int idx = it->second;
      ix.info_of[i][s] = idx;
      if (inserted) {
        ix.marginal[i].push_back(0.0);
        ix.direct_gain[i].push_back(states[s].gain(i, i, n));
      }
      ix.marginal[i][idx] += states[s].prob;
    }
  }
  return ix;
}

}  // namespace ifpa
