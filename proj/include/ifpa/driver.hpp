#pragma once

#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ifpa/bayes.hpp"
#include "ifpa/config.hpp"
#include "ifpa/csv.hpp"
#include "ifpa/pareto.hpp"
#include "ifpa/vi.hpp"

namespace ifpa {

namespace detail {

template <typename Task>
void run_parallel(std::vector<Task>& tasks, int jobs) {
  if (jobs <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::size_t next = 0;
  while (next < tasks.size()) {
    std::vector<std::future<void>> batch;
    for (int k = 0; k < jobs && next < tasks.size(); ++k, ++next)
      batch.push_back(std::async(std::launch::async, std::ref(tasks[next])));
    for (auto& f : batch) f.get();
  }
}

inline std::vector<std::pair<std::string, std::string>> provenance(const ExperimentConfig& cfg,
                                                                   const std::string& extra = "") {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("preset", cfg.preset.empty() ? "custom" : cfg.preset);
  std::string vars;
  for (Variant v : cfg.variants) vars += std::string(vars.empty() ? "" : "|") + variant_name(v);
  kv.emplace_back("variants", vars);
  kv.emplace_back("seed", std::to_string(cfg.seed));
  kv.emplace_back("log_base", cfg.log_base == LogBase::Natural ? "e" : "2");
  kv.emplace_back("snr_to_budget", "10^(snr/10)");
  kv.emplace_back("eps", fmt_double(cfg.solver.eps));
  kv.emplace_back("delta", fmt_double(cfg.solver.delta));
  kv.emplace_back("max_picard", std::to_string(cfg.solver.max_picard));
  kv.emplace_back("restart_cap", std::to_string(cfg.solver.restart_cap));
  kv.emplace_back("tau_picard", fmt_double(cfg.tau_picard));
  kv.emplace_back("tau_residual", fmt_double(cfg.tau_residual));
  if (!extra.empty()) kv.emplace_back("note", extra);
  return kv;
}

inline std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline SolveParams solver_params(const ExperimentConfig& cfg) {
  SolveParams p = cfg.solver;
  p.tau_picard = cfg.tau_picard;
  p.tau_residual = cfg.tau_residual;
  p.seed = cfg.seed;
  return p;
}

}  // namespace detail

struct NePoint {
  Variant variant = Variant::Full;
  double snr_db = 0.0;
  SolveReport report;
  double verify_improvement = 0.0;
};

// solve-ne: one NE per (variant, snr) plus verification; policies and a
// summary CSV as artifacts.
inline std::vector<NePoint> run_solve_ne(const ExperimentConfig& cfg, bool write_files = true) {
  cfg.validate();
  std::vector<NePoint> points;
  for (Variant v : cfg.variants)
    for (double snr : cfg.snr_db) points.push_back({v, snr, {}, 0.0});

  std::vector<std::function<void()>> tasks;
  for (auto& pt : points)
    tasks.emplace_back([&cfg, &pt]() {
      Game game(cfg.model_at_snr(pt.snr_db), pt.variant);
      pt.report = solve_ne(game, detail::solver_params(cfg));
      pt.verify_improvement = verify_ne(game, pt.report.profile, cfg.solver.eps).max_improvement;
    });
  detail::run_parallel(tasks, cfg.jobs);

  if (write_files) {
    CsvWriter csv(detail::out_path(cfg, "solve_ne_summary.csv"));
    csv.provenance(detail::provenance(cfg));
    csv.header({"variant", "snr_db", "g", "picard_iterations", "descent_sweeps", "restarts",
                "converged", "max_improvement", "sum_rate", "wall_seconds"});
    for (const auto& pt : points) {
      csv.row({variant_name(pt.variant), fmt_double(pt.snr_db), fmt_double(pt.report.g),
               std::to_string(pt.report.picard_iterations), std::to_string(pt.report.descent_sweeps),
               std::to_string(pt.report.restarts), pt.report.converged ? "1" : "0",
               fmt_double(pt.verify_improvement),
               fmt_double(to_base(pt.report.rates.sum, cfg.log_base)),
               fmt_double(pt.report.wall_seconds)});
      std::string pname = std::string("policy_") + variant_name(pt.variant) + "_snr" +
                          fmt_double(pt.snr_db) + ".csv";
      CsvWriter pol(detail::out_path(cfg, pname));
      pol.provenance(detail::provenance(cfg));
      pol.header({"user", "info_state_index", "power"});
      for (int i = 0; i < pt.report.profile.n_users(); ++i)
        for (std::size_t s = 0; s < pt.report.profile.values[i].size(); ++s)
          pol.row({std::to_string(i), std::to_string(s),
                   fmt_double(pt.report.profile.values[i][s])});
    }
  }
  return points;
}

// sweep: NE rates over the SNR grid and variants; one CSV row per user/point.
inline std::vector<NePoint> run_sweep(const ExperimentConfig& cfg, bool write_files = true) {
  std::vector<NePoint> points = run_solve_ne(cfg, /*write_files=*/false);
  if (write_files) {
    CsvWriter csv(detail::out_path(cfg, "sweep_rates.csv"));
    csv.provenance(detail::provenance(cfg));
    csv.header({"game", "snr_db", "user", "rate", "sum_rate"});
    for (const auto& pt : points) {
      RateReport rr = pt.report.rates.in_base(cfg.log_base);
      for (std::size_t i = 0; i < rr.per_user.size(); ++i)
        csv.row({variant_name(pt.variant), fmt_double(pt.snr_db), std::to_string(i),
                 fmt_double(rr.per_user[i]), fmt_double(rr.sum)});
    }
  }
  return points;
}

struct Phase1StudyRow {
  Variant variant = Variant::Full;
  double snr_db = 0.0;
  double mean_before = 0.0;
  double mean_after = 0.0;
};

// phase1-study: the before/after mean residual table over random feasible
// starts (the paper's Tables 4-6 layout: one row per SNR, before/after
// columns per game).
inline std::vector<Phase1StudyRow> run_phase1_study(const ExperimentConfig& cfg,
                                                    bool write_files = true) {
  cfg.validate();
  std::vector<Phase1StudyRow> rows;
  for (Variant v : cfg.variants)
    for (double snr : cfg.snr_db) rows.push_back({v, snr, 0.0, 0.0});

  std::vector<std::function<void()>> tasks;
  for (auto& row : rows)
    tasks.emplace_back([&cfg, &row]() {
      Game game(cfg.model_at_snr(row.snr_db), row.variant);
      ViProblem prob(game);
      prob.tau_picard = cfg.tau_picard;
      prob.tau_residual = cfg.tau_residual;
      Rng rng(cfg.seed);
      double before = 0.0, after = 0.0;
      for (int t = 0; t < cfg.starts; ++t) {
        PolicyProfile start = random_feasible_profile(game, rng);
        before += residual(prob, start);
        after += residual(prob, phase1(prob, start, cfg.solver.max_picard));
      }
      row.mean_before = before / cfg.starts;
      row.mean_after = after / cfg.starts;
    });
  detail::run_parallel(tasks, cfg.jobs);

  if (write_files) {
    CsvWriter csv(detail::out_path(cfg, "phase1_study.csv"));
    csv.provenance(detail::provenance(cfg, "mean g(P) over " + std::to_string(cfg.starts) +
                                               " random feasible starts, MAX=" +
                                               std::to_string(cfg.solver.max_picard)));
    std::vector<std::string> head{"snr_db"};
    for (Variant v : cfg.variants) {
      head.push_back(std::string(variant_name(v)) + "_before_ph1");
      head.push_back(std::string(variant_name(v)) + "_after_ph1");
    }
    csv.header(head);
    for (double snr : cfg.snr_db) {
      std::vector<std::string> cells{fmt_double(snr)};
      for (Variant v : cfg.variants)
        for (const auto& row : rows)
          if (row.variant == v && row.snr_db == snr) {
            cells.push_back(fmt_double(row.mean_before));
            cells.push_back(fmt_double(row.mean_after));
          }
      csv.row(cells);
    }
  }
  return rows;
}

struct FairnessRow {
  double snr_db = 0.0;
  ParetoReport pareto;
  ParetoReport bargaining;
  RateReport ne_rates;  // disagreement context
};

// pareto / bargain: weighted-sum Pareto point and Nash-bargaining point per
// SNR for the first configured variant; fairness table as artifact.
inline std::vector<FairnessRow> run_fairness(const ExperimentConfig& cfg, bool with_bargain,
                                             bool write_files = true) {
  cfg.validate();
  Variant variant = cfg.variants.front();
  std::vector<FairnessRow> rows;
  for (double snr : cfg.snr_db) rows.push_back({snr, {}, {}, {}});

  std::vector<std::function<void()>> tasks;
  for (auto& row : rows)
    tasks.emplace_back([&cfg, &row, variant, with_bargain]() {
      Game game(cfg.model_at_snr(row.snr_db), variant);
      SolveReport ne = solve_ne(game, detail::solver_params(cfg));
      row.ne_rates = ne.rates;
      auto starts = default_starts(game, cfg.seed, &ne.profile, cfg.pareto_random_starts);
      row.pareto = solve_pareto(game, SocialObjective::equal_weights(game.n_users()), cfg.auglag,
                                starts);
      if (with_bargain) {
        std::vector<double> d(game.n_users(), 0.0);
        if (cfg.disagreement == "ne") d = ne.rates.per_user;
        row.bargaining = solve_bargaining(game, d, cfg.auglag, starts);
      }
    });
  detail::run_parallel(tasks, cfg.jobs);

  if (write_files) {
    const int n = cfg.base_model().n_users;
    CsvWriter csv(detail::out_path(cfg, with_bargain ? "fairness.csv" : "pareto.csv"));
    csv.provenance(detail::provenance(cfg, std::string("variant=") + variant_name(variant)));
    std::vector<std::string> head{"snr_db"};
    for (int i = 0; i < n; ++i) head.push_back("pareto_rate_" + std::to_string(i));
    head.push_back("pareto_sum");
    head.push_back("pareto_converged");
    if (with_bargain) {
      for (int i = 0; i < n; ++i) head.push_back("nb_rate_" + std::to_string(i));
      head.push_back("nb_sum");
      head.push_back("nb_converged");
    }
    head.push_back("ne_sum");
    csv.header(head);
    for (const auto& row : rows) {
      std::vector<std::string> cells{fmt_double(row.snr_db)};
      RateReport pr = row.pareto.rates.in_base(cfg.log_base);
      for (int i = 0; i < n; ++i) cells.push_back(fmt_double(pr.per_user[i]));
      cells.push_back(fmt_double(pr.sum));
      cells.push_back(row.pareto.converged ? "1" : "0");
      if (with_bargain) {
        RateReport nb = row.bargaining.rates.in_base(cfg.log_base);
        for (int i = 0; i < n; ++i) cells.push_back(fmt_double(nb.per_user[i]));
        cells.push_back(fmt_double(nb.sum));
        cells.push_back(row.bargaining.converged ? "1" : "0");
      }
      cells.push_back(fmt_double(to_base(row.ne_rates.sum, cfg.log_base)));
      csv.row(cells);
    }
  }
  return rows;
}

struct BayesPoint {
  double snr_db = 0.0;
  LearningTrace trace;
};

// bayes: one learning run per SNR; trace, strategy table and rate summary.
inline std::vector<BayesPoint> run_bayes(const ExperimentConfig& cfg, bool write_files = true) {
  cfg.validate();
  std::vector<BayesPoint> points;
  for (double snr : cfg.snr_db) points.push_back({snr, {}});

  std::vector<std::function<void()>> tasks;
  for (auto& pt : points)
    tasks.emplace_back([&cfg, &pt]() {
      ChannelModel model = cfg.model_at_snr(pt.snr_db);
      BayesParams params = cfg.bayes.params;
      params.seed = cfg.seed;
      pt.trace = simulate(model, cfg.levels_at(model), params);
    });
  detail::run_parallel(tasks, cfg.jobs);

  if (write_files) {
    CsvWriter sum(detail::out_path(cfg, "bayes_summary.csv"));
    sum.provenance(detail::provenance(cfg));
    const int n = cfg.base_model().n_users;
    std::vector<std::string> head{"snr_db", "slots", "converged", "max_improvement"};
    for (int i = 0; i < n; ++i) head.push_back("rate_" + std::to_string(i));
    sum.header(head);
    for (const auto& pt : points) {
      std::vector<std::string> cells{fmt_double(pt.snr_db), std::to_string(pt.trace.slots_used),
                                     pt.trace.converged ? "1" : "0",
                                     fmt_double(pt.trace.ne_report.max_improvement)};
      for (int i = 0; i < n; ++i)
        cells.push_back(fmt_double(to_base(pt.trace.final_rates[i], cfg.log_base)));
      sum.row(cells);

      std::string tname = "bayes_trace_snr" + fmt_double(pt.snr_db) + ".csv";
      CsvWriter tr(detail::out_path(cfg, tname));
      tr.provenance(detail::provenance(cfg));
      tr.header({"slot", "user", "action", "interference"});
      for (const auto& rec : pt.trace.slots)
        for (int i = 0; i < n; ++i)
          tr.row({std::to_string(rec.slot), std::to_string(i), fmt_double(rec.action[i]),
                  fmt_double(rec.interference[i])});

      std::string sname = "bayes_strategies_snr" + fmt_double(pt.snr_db) + ".csv";
      CsvWriter st(detail::out_path(cfg, sname));
      st.provenance(detail::provenance(cfg));
      st.header({"user", "direct_state_index", "power"});
      ChannelModel model = cfg.model_at_snr(pt.snr_db);
      auto levels = cfg.levels_at(model);
      for (int i = 0; i < n; ++i)
        for (std::size_t s = 0; s < pt.trace.final_strategies[i].size(); ++s)
          st.row({std::to_string(i), std::to_string(s),
                  fmt_double(levels[i].values[pt.trace.final_strategies[i][s]])});
    }
  }
  return points;
}

}  // namespace ifpa
