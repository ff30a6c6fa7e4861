#include <catch2/catch_amalgamated.hpp>

#include "ifpa/pareto.hpp"
#include "ifpa/presets.hpp"
#include "ifpa/vi.hpp"
#include "oracles.hpp"

using namespace ifpa;

namespace {

ChannelModel single_user_model(double budget) {
  ChannelModel m;
  m.n_users = 1;
  m.direct = {LinkDist{{0.4, 1.0}, {0.5, 0.5}}};
  m.cross = {{LinkDist{}}};
  m.budgets = {budget};
  m.alpha = {1.0};
  return m;
}

ChannelModel decoupled3(double budget) {
  ChannelModel m = preset_example1().with_budget(budget);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) m.cross[i][j] = LinkDist{{0.0}, {1.0}};
  return m;
}

}  // namespace

TEST_CASE("social value: equal weights on a symmetric profile gives N times the rate") {
  Game game(preset_example2().with_budget(1.0), Variant::Direct);
  PolicyProfile p = uniform_budget_profile(game);
  double r0 = expected_rate(game, p, 0);
  double ws = social_value(game, p, SocialObjective::equal_weights(3));
  CHECK(ws == Catch::Approx(3.0 * r0).margin(1e-9));
}

TEST_CASE("social value: zero-rate user makes the d=0 bargaining point infeasible") {
  Game game(preset_example2().with_budget(1.0), Variant::Direct);
  PolicyProfile p = uniform_budget_profile(game);
  p.values[1].assign(game.dim(1), 0.0);
  double prod = social_value(game, p, SocialObjective::nash_product({0.0, 0.0, 0.0}));
  CHECK(prod == -std::numeric_limits<double>::infinity());
}

TEST_CASE("social value: product equals exp of the log-domain sum") {
  Game game(preset_example2().with_budget(2.0), Variant::Direct);
  Rng rng(4);
  PolicyProfile p = random_feasible_profile(game, rng);
  RateReport r = rate_report(game, p);
  double logsum = 0.0;
  for (double v : r.per_user) logsum += std::log(v);
  double prod = social_value(game, p, SocialObjective::nash_product({0.0, 0.0, 0.0}));
  CHECK(prod == Catch::Approx(std::exp(logsum)).epsilon(1e-12));
}

TEST_CASE("augmented Lagrangian reduces to the objective at budget-binding profiles") {
  Game game(preset_example2().with_budget(2.0), Variant::Direct);
  Rng rng(9);
  PolicyProfile p = random_feasible_profile(game, rng);  // budgets met with equality
  AugLagParams params;
  std::vector<double> lambda{0.3, -0.2, 1.1};
  SocialObjective ws = SocialObjective::equal_weights(3);
  CHECK(aug_lagrangian(game, p, lambda, params, ws) ==
        Catch::Approx(social_value(game, p, ws)).margin(1e-9));
}

TEST_CASE("augmented Lagrangian of the zero profile is minus c times squared budgets") {
  Game game(preset_example2().with_budget(3.0), Variant::Direct);
  PolicyProfile zero;
  zero.variant = Variant::Direct;
  zero.values.assign(3, std::vector<double>(game.dim(0), 0.0));
  AugLagParams params;
  params.penalty_c = 1.7;
  std::vector<double> lambda(3, 0.0);
  double L = aug_lagrangian(game, zero, lambda, params, SocialObjective::equal_weights(3));
  // penalty is subtracted: an added penalty would reward constraint violation
  CHECK(L == Catch::Approx(-1.7 * 3.0 * 9.0).margin(1e-9));
}

TEST_CASE("augmented Lagrangian gradient matches finite differences") {
  Game game(preset_example2().with_budget(snr_db_to_budget(5.0)), Variant::Direct);
  Rng rng(10);
  PolicyProfile p = random_feasible_profile(game, rng);
  AugLagParams params;
  std::vector<double> lambda{0.1, 0.4, -0.3};
  for (auto obj : {SocialObjective::weighted_sum({1.0, 2.0, 0.5}),
                   SocialObjective::nash_product({0.0, 0.0, 0.0})}) {
    auto grad = aug_lagrangian_gradient(game, p, lambda, params, obj);
    for (int i = 0; i < 3; ++i)
      for (int s = 0; s < game.dim(i); ++s) {
        auto fd = oracles::central_diff(
            [&](double x) {
              PolicyProfile q = p;
              q.values[i][s] = x;
              return aug_lagrangian(game, q, lambda, params, obj);
            },
            p.values[i][s], 1e-5);
        CHECK(std::abs(grad[i][s] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
  }
}

TEST_CASE("steepest ascent returns quickly from a stationary point") {
  ChannelModel m = single_user_model(2.0);
  Game game(m, Variant::Direct);
  AugLagParams params;
  SocialObjective ws = SocialObjective::equal_weights(1);
  PolicyProfile start = uniform_budget_profile(game);
  std::vector<double> lambda{0.0};
  AscentResult a = steepest_ascent(game, lambda, start, params, ws);
  AscentResult b = steepest_ascent(game, lambda, a.profile, params, ws);
  CHECK(b.rounds <= 2);
  CHECK(profile_distance(a.profile, b.profile) <= 1e-6);
}

TEST_CASE("single-user Pareto solve reproduces the water-filling optimum") {
  ChannelModel m = single_user_model(snr_db_to_budget(5.0));
  Game game(m, Variant::Direct);
  AugLagParams params;
  auto rep = solve_pareto(game, SocialObjective::equal_weights(1), params,
                          default_starts(game, 3, nullptr, 2));
  REQUIRE(rep.converged);
  std::vector<double> base(game.dim(0));
  for (int s = 0; s < game.dim(0); ++s) base[s] = -1.0 / game.direct_gain(0, s);
  PowerPolicy wf = water_fill(base, game.indexer, 0, game.budget(0));
  PolicyProfile opt;
  opt.variant = Variant::Direct;
  opt.values = {wf.values};
  CHECK(rep.rates.per_user[0] >= expected_rate(game, opt, 0) - 1e-4);
}

TEST_CASE("committed ascent steps never decrease the Lagrangian") {
  Game game(preset_example2().with_budget(1.0), Variant::Direct);
  AugLagParams params;
  std::vector<double> lambda{0.2, 0.2, 0.2};
  SocialObjective ws = SocialObjective::equal_weights(3);
  detail::AscentObjective L{&game, &ws, &lambda, &params};
  Rng rng(12);
  PolicyProfile p = random_feasible_profile(game, rng);
  double prev = L.at(p);
  for (int round = 0; round < 40; ++round) {
    AugLagParams one = params;
    one.max_rounds = 1;
    AscentResult res = steepest_ascent(game, lambda, p, one, ws);
    double cur = L.at(res.profile);
    CHECK(cur >= prev - 1e-12);
    if (res.stationary) break;
    prev = cur;
    p = res.profile;
  }
}

TEST_CASE("decoupled equal-weight Pareto equals the sum of single-user optima") {
  ChannelModel m = decoupled3(snr_db_to_budget(5.0));
  Game game(m, Variant::Direct);
  AugLagParams params;
  auto rep = solve_pareto(game, SocialObjective::equal_weights(3), params,
                          default_starts(game, 5, nullptr, 2));
  REQUIRE(rep.converged);
  double expected = 0.0;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> base(game.dim(i));
    for (int s = 0; s < game.dim(i); ++s) base[s] = -1.0 / game.direct_gain(i, s);
    PowerPolicy wf = water_fill(base, game.indexer, i, game.budget(i));
    PolicyProfile solo;
    solo.variant = Variant::Direct;
    solo.values.assign(3, std::vector<double>(game.dim(0), 0.0));
    solo.values[i] = wf.values;
    expected += expected_rate(game, solo, i);
  }
  CHECK(rep.rates.sum >= expected - 1e-3);
  CHECK(rep.rates.sum <= expected + 1e-3);
}

TEST_CASE("constraints are satisfied at termination") {
  Game game(preset_example2().with_budget(snr_db_to_budget(5.0)), Variant::Direct);
  AugLagParams params;
  auto rep = solve_pareto(game, SocialObjective::equal_weights(3), params,
                          default_starts(game, 7, nullptr, 2));
  REQUIRE(rep.converged);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(expected_power(rep.profile.values[i], game.marginal(i)) - game.budget(i)) <
          params.eps_constraint);
}

TEST_CASE("weighted-sum output is locally Pareto under perturbation sampling") {
  Game game(preset_example2().with_budget(snr_db_to_budget(5.0)), Variant::Direct);
  AugLagParams params;
  auto rep = solve_pareto(game, SocialObjective::equal_weights(3), params,
                          default_starts(game, 11, nullptr, 2));
  REQUIRE(rep.converged);
  RateReport base = rep.rates;
  Rng rng(2024);
  int dominating = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    PolicyProfile q = rep.profile;
    for (int i = 0; i < 3; ++i) {
      for (auto& v : q.values[i]) v = std::max(0.0, v + rng.uniform(-0.05, 0.05) * game.budget(i));
      q.values[i] = project_with_shift(q.values[i], game.marginal(i), game.budget(i),
                                       ProjectionMode::InequalityKkt)
                        .values;
    }
    RateReport rr = rate_report(game, q);
    bool all_ge = true, one_gt = false;
    for (int i = 0; i < 3; ++i) {
      if (rr.per_user[i] < base.per_user[i] - 1e-9) all_ge = false;
      if (rr.per_user[i] > base.per_user[i] + 1e-6) one_gt = true;
    }
    if (all_ge && one_gt) ++dominating;
  }
  CHECK(dominating == 0);
}

TEST_CASE("nash bargaining on a symmetric model yields near-equal rates") {
  Game game(preset_example2().with_budget(snr_db_to_budget(5.0)), Variant::Direct);
  AugLagParams params;
  auto rep = solve_bargaining(game, {0.0, 0.0, 0.0}, params, default_starts(game, 13, nullptr, 2));
  REQUIRE(rep.converged);
  double mx = *std::max_element(rep.rates.per_user.begin(), rep.rates.per_user.end());
  double mn = *std::min_element(rep.rates.per_user.begin(), rep.rates.per_user.end());
  CHECK(mx - mn <= 0.05);
}

TEST_CASE("bargaining with the NE disagreement keeps every user above it") {
  Game game(preset_example2().with_budget(snr_db_to_budget(5.0)), Variant::Direct);
  SolveParams sp;
  SolveReport ne = solve_ne(game, sp);
  REQUIRE(ne.converged);
  AugLagParams params;
  auto starts = default_starts(game, 17, &ne.profile, 2);
  auto rep = solve_bargaining(game, ne.rates.per_user, params, starts);
  for (int i = 0; i < 3; ++i) CHECK(rep.rates.per_user[i] >= ne.rates.per_user[i] - 1e-6);
}

TEST_CASE("weight scaling leaves the stationary profile essentially unchanged") {
  Game game(preset_example2().with_budget(1.0), Variant::Direct);
  AugLagParams params;
  auto starts = default_starts(game, 23, nullptr, 1);
  auto a = solve_pareto(game, SocialObjective::weighted_sum({1.0, 1.0, 1.0}), params, starts);
  AugLagParams scaled = params;
  scaled.ascent_step = params.ascent_step / 3.0;  // delta scaled inversely to the weights
  auto b = solve_pareto(game, SocialObjective::weighted_sum({3.0, 3.0, 3.0}), scaled, starts);
  CHECK(profile_distance(a.profile, b.profile) <= 0.05);
}
