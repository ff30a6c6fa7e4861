#include <catch2/catch_amalgamated.hpp>

#include "ifpa/presets.hpp"

using namespace ifpa;

TEST_CASE("degenerate single-link model enumerates one state") {
  ChannelModel m;
  m.n_users = 1;
  m.direct = {LinkDist{{1.0}, {1.0}}};
  m.cross = {{LinkDist{}}};
  m.budgets = {1.0};
  m.alpha = {1.0};
  auto states = enumerate_states(m);
  REQUIRE(states.size() == 1);
  CHECK(states[0].prob == 1.0);
  CHECK(states[0].gain(0, 0, 1) == 1.0);
}

TEST_CASE("example 1 enumerates 512 equiprobable states") {
  auto states = enumerate_states(preset_example1().with_budget(1.0));
  REQUIRE(states.size() == 512);
  for (const auto& st : states) CHECK(st.prob == Catch::Approx(1.0 / 512).margin(0));
  double total = 0.0;
  for (const auto& st : states) total += st.prob;
  CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("example 3 enumerates 81 states summing to one") {
  auto states = enumerate_states(preset_example3().with_budget(1.0));
  REQUIRE(states.size() == 81);
  double total = 0.0;
  for (const auto& st : states) total += st.prob;
  CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("enumeration cap produces a descriptive error") {
  ChannelModel m = preset_example1().with_budget(1.0);
  m.enumeration_cap = 100;
  REQUIRE_THROWS_WITH(enumerate_states(m), Catch::Matchers::ContainsSubstring("512"));
}

TEST_CASE("model validation rejects bad inputs") {
  ChannelModel m = preset_example1().with_budget(1.0);
  SECTION("zero direct gain") {
    m.direct[0].support[0] = 0.0;
    REQUIRE_THROWS_AS(m.validate(), Error);
  }
  SECTION("probabilities must sum to one") {
    m.cross[0][1].probs = {0.6, 0.6};
    REQUIRE_THROWS_AS(m.validate(), Error);
  }
  SECTION("nonpositive budget") {
    m.budgets[2] = 0.0;
    REQUIRE_THROWS_AS(m.validate(), Error);
  }
}

TEST_CASE("indexer info-state counts per variant") {
  ChannelModel m = preset_example1().with_budget(1.0);
  auto states = enumerate_states(m);

  auto full = build_indexer(m, states, Variant::Full);
  auto inc = build_indexer(m, states, Variant::Incident);
  auto dir = build_indexer(m, states, Variant::Direct);

  for (int i = 0; i < 3; ++i) {
    CHECK(full.info_count(i) == 512);  // identity on the joint states
    CHECK(inc.info_count(i) == 8);     // n1 * n2^(N-1)
    CHECK(dir.info_count(i) == 2);     // n1
  }
  // Full is the identity map
  for (std::size_t s = 0; s < states.size(); ++s) CHECK(full.info_of[0][s] == static_cast<int>(s));
}

TEST_CASE("example 1 direct marginals are equiprobable") {
  ChannelModel m = preset_example1().with_budget(1.0);
  auto states = enumerate_states(m);
  auto dir = build_indexer(m, states, Variant::Direct);
  for (int i = 0; i < 3; ++i) {
    REQUIRE(dir.marginal[i].size() == 2);
    CHECK(dir.marginal[i][0] == Catch::Approx(0.5).margin(1e-12));
    CHECK(dir.marginal[i][1] == Catch::Approx(0.5).margin(1e-12));
  }
}

TEST_CASE("example 1 incident info-states: 8 per user, each with marginal 1/8") {
  ChannelModel m = preset_example1().with_budget(1.0);
  auto states = enumerate_states(m);
  auto inc = build_indexer(m, states, Variant::Incident);
  // counting oracle: tally joint states per info index directly
  for (int i = 0; i < 3; ++i) {
    std::vector<int> tally(8, 0);
    for (std::size_t s = 0; s < states.size(); ++s) tally[inc.info_of[i][s]]++;
    for (int k = 0; k < 8; ++k) {
      CHECK(tally[k] == 64);
      CHECK(inc.marginal[i][k] == Catch::Approx(1.0 / 8).margin(1e-12));
    }
  }
}

TEST_CASE("marginals are the pushforward of the joint distribution") {
  for (const char* preset : {"example1", "example3"}) {
    ChannelModel m = preset_model(preset).with_budget(1.0);
    auto states = enumerate_states(m);
    for (Variant v : {Variant::Full, Variant::Incident, Variant::Direct}) {
      auto ix = build_indexer(m, states, v);
      for (int i = 0; i < m.n_users; ++i) {
        std::vector<double> push(ix.marginal[i].size(), 0.0);
        for (std::size_t s = 0; s < states.size(); ++s) push[ix.info_of[i][s]] += states[s].prob;
        double total = 0.0;
        for (std::size_t k = 0; k < push.size(); ++k) {
          CHECK(push[k] == ix.marginal[i][k]);
          total += push[k];
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("indexer consistency: identical relevant gains share an info state") {
  ChannelModel m = preset_example3().with_budget(1.0);
  auto states = enumerate_states(m);
  auto inc = build_indexer(m, states, Variant::Incident);
  auto dir = build_indexer(m, states, Variant::Direct);
  const int n = m.n_users;
  for (std::size_t a = 0; a < states.size(); ++a)
    for (std::size_t b = a + 1; b < states.size(); ++b)
      for (int i = 0; i < n; ++i) {
        bool same_row = true;
        for (int j = 0; j < n; ++j)
          if (states[a].gain(i, j, n) != states[b].gain(i, j, n)) same_row = false;
        if (same_row) CHECK(inc.info_of[i][a] == inc.info_of[i][b]);
        if (states[a].gain(i, i, n) == states[b].gain(i, i, n))
          CHECK(dir.info_of[i][a] == dir.info_of[i][b]);
      }
}

TEST_CASE("example 3 heterogeneous user-2 distribution shows up in marginals") {
  ChannelModel m = preset_example3().with_budget(1.0);
  auto states = enumerate_states(m);
  auto dir = build_indexer(m, states, Variant::Direct);
  CHECK(dir.marginal[1][0] == Catch::Approx(0.1).margin(1e-12));
  CHECK(dir.marginal[1][1] == Catch::Approx(0.4).margin(1e-12));
  CHECK(dir.marginal[1][2] == Catch::Approx(0.5).margin(1e-12));
  CHECK(dir.marginal[0][0] == Catch::Approx(1.0 / 3).margin(1e-12));
}
