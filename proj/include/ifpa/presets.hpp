#pragma once

#include <string>
#include <vector>

#include "ifpa/bayes.hpp"
#include "ifpa/channel.hpp"

namespace ifpa {

// Average transmit SNR in dB -> power budget (noise power normalized to 1).
inline double snr_db_to_budget(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

namespace detail {

inline ChannelModel symmetric_model(int n, std::vector<double> hd, std::vector<double> hc) {
  ChannelModel m;
  m.n_users = n;
  std::vector<double> pd(hd.size(), 1.0 / hd.size());
  std::vector<double> pc(hc.size(), 1.0 / hc.size());
  m.direct.assign(n, LinkDist{hd, pd});
  m.cross.assign(n, std::vector<LinkDist>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) m.cross[i][j] = LinkDist{hc, pc};
  m.budgets.assign(n, 1.0);
  m.alpha.assign(n, 1.0);
  return m;
}

}  // namespace detail

// The three study channels (budgets set separately from the SNR point).
inline ChannelModel preset_example1() {
  return detail::symmetric_model(3, {0.3, 1.0}, {0.2, 0.1});
}

inline ChannelModel preset_example2() {
  return detail::symmetric_model(3, {0.3, 1.0}, {0.1, 0.5});
}

// 2 users; user 1 uniform, user 2's incident links (direct (2,2), cross (2,1))
// carry the distribution {0.1, 0.4, 0.5}.
inline ChannelModel preset_example3() {
  ChannelModel m = detail::symmetric_model(2, {0.1, 0.5, 1.0}, {0.25, 0.5, 0.75});
  m.direct[1].probs = {0.1, 0.4, 0.5};
  m.cross[1][0].probs = {0.1, 0.4, 0.5};
  return m;
}

// Bayesian-learning study channel: Example 2 gains with cross support listed
// {0.5, 0.1}.
inline ChannelModel preset_example2_bayes() {
  return detail::symmetric_model(3, {0.3, 1.0}, {0.5, 0.1});
}

// Level grid {0,5,...,50} anchored at a reference budget of 25 W and scaled
// proportionally with the budget (i.e. {0, 0.2, ..., 2.0} x budget). At the
// literal watt values the low-SNR rows of the reference results are
// infeasible: with budget 1 only the all-zero strategy meets the average
// power constraint.
inline PowerLevels scaled_level_grid(double budget) {
  PowerLevels lv;
  for (int k = 0; k <= 50; k += 5) lv.values.push_back(budget * static_cast<double>(k) / 25.0);
  return lv;
}

inline ChannelModel preset_model(const std::string& name) {
  if (name == "example1") return preset_example1();
  if (name == "example2") return preset_example2();
  if (name == "example3") return preset_example3();
  if (name == "example2-bayes") return preset_example2_bayes();
  throw Error("unknown preset '" + name + "' (expected example1|example2|example3|example2-bayes)");
}

}  // namespace ifpa
