#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ifpa/driver.hpp"

namespace {

struct CommonFlags {
  std::string preset;
  std::string config_path;
  std::string variant;
  std::vector<double> snr;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
  std::string out_dir;
  std::string log_base;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--preset", f.preset, "named model: example1|example2|example3|example2-bayes");
  cmd->add_option("--config", f.config_path, "JSON experiment config");
  cmd->add_option("--variant", f.variant, "game variant: full|incident|direct");
  cmd->add_option("--snr", f.snr, "SNR grid in dB")->delimiter(',');
  cmd->add_option("--seed", f.seed, "RNG seed")->each([&f](const std::string&) { f.seed_set = true; });
  cmd->add_option("--jobs", f.jobs, "max concurrent solves");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--log-base", f.log_base, "rate unit: e (nats) or 2 (bits)");
}

ifpa::ExperimentConfig build_config(const CommonFlags& f) {
  ifpa::ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg = ifpa::load_config(f.config_path);
  if (!f.preset.empty()) {
    cfg.preset = f.preset;
    cfg.model.reset();
  }
  if (!f.variant.empty()) cfg.variants = {ifpa::parse_variant(f.variant)};
  if (!f.snr.empty()) cfg.snr_db = f.snr;
  if (f.seed_set) cfg.seed = f.seed;
  if (f.jobs > 0) cfg.jobs = f.jobs;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (!f.log_base.empty()) {
    if (f.log_base == "e")
      cfg.log_base = ifpa::LogBase::Natural;
    else if (f.log_base == "2")
      cfg.log_base = ifpa::LogBase::Two;
    else
      throw ifpa::Error("--log-base must be 'e' or '2'");
  }
  cfg.validate();
  return cfg;
}

int exit_status(bool all_ok) { return all_ok ? 0 : 2; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-allocation game solver for fast-fading Gaussian interference channels"};
  app.require_subcommand(1);

  CommonFlags f;
  int starts = 0;
  int max_picard = 0;
  double eps = 0.0;
  std::string disagreement;

  auto* ne = app.add_subcommand("solve-ne", "compute a Nash equilibrium per (variant, SNR)");
  add_common(ne, f);
  ne->add_option("--eps", eps, "residual target");

  auto* sweep = app.add_subcommand("sweep", "NE rate table over the SNR grid and variants");
  add_common(sweep, f);

  auto* study = app.add_subcommand("phase1-study",
                                   "mean residual before/after Phase 1 over random starts");
  add_common(study, f);
  study->add_option("--starts", starts, "number of random feasible starts");
  study->add_option("--max", max_picard, "Picard iterations (MAX)");

  auto* pareto = app.add_subcommand("pareto", "weighted-sum Pareto point per SNR");
  add_common(pareto, f);

  auto* bargain = app.add_subcommand("bargain", "Nash bargaining solution per SNR");
  add_common(bargain, f);
  bargain->add_option("--disagreement", disagreement, "disagreement outcome: zero|ne");

  auto* bayes = app.add_subcommand("bayes", "Bayesian interference-belief learning (direct game)");
  add_common(bayes, f);

  CLI11_PARSE(app, argc, argv);

  try {
    ifpa::ExperimentConfig cfg = build_config(f);
    if (starts > 0) cfg.starts = starts;
    if (max_picard > 0) cfg.solver.max_picard = max_picard;
    if (eps > 0.0) cfg.solver.eps = eps;
    if (!disagreement.empty()) cfg.disagreement = disagreement;

    if (ne->parsed()) {
      auto points = ifpa::run_solve_ne(cfg);
      bool ok = true;
      for (const auto& pt : points) {
        std::printf("%-8s snr=%5.1f dB  g=%.3e  %s  picard=%d sweeps=%d restarts=%d  sum=%.4f\n",
                    ifpa::variant_name(pt.variant), pt.snr_db, pt.report.g,
                    pt.report.converged ? "converged" : "NOT-CONVERGED", pt.report.picard_iterations,
                    pt.report.descent_sweeps, pt.report.restarts,
                    ifpa::to_base(pt.report.rates.sum, cfg.log_base));
        ok = ok && pt.report.converged;
      }
      return exit_status(ok);
    }
    if (sweep->parsed()) {
      auto points = ifpa::run_sweep(cfg);
      bool ok = true;
      for (const auto& pt : points) ok = ok && pt.report.converged;
      std::printf("wrote %s/sweep_rates.csv (%zu points)\n", cfg.out_dir.c_str(), points.size());
      return exit_status(ok);
    }
    if (study->parsed()) {
      auto rows = ifpa::run_phase1_study(cfg);
      for (const auto& r : rows)
        std::printf("%-8s snr=%5.1f dB  mean g: before=%.6g  after=%.6g\n",
                    ifpa::variant_name(r.variant), r.snr_db, r.mean_before, r.mean_after);
      return 0;
    }
    if (pareto->parsed() || bargain->parsed()) {
      bool with_nb = bargain->parsed();
      auto rows = ifpa::run_fairness(cfg, with_nb);
      bool ok = true;
      for (const auto& r : rows) {
        std::printf("snr=%5.1f dB  pareto sum=%.4f%s", r.snr_db,
                    ifpa::to_base(r.pareto.rates.sum, cfg.log_base),
                    r.pareto.converged ? "" : " (not converged)");
        if (with_nb)
          std::printf("  nb sum=%.4f%s", ifpa::to_base(r.bargaining.rates.sum, cfg.log_base),
                      r.bargaining.converged ? "" : " (not converged)");
        std::printf("\n");
        ok = ok && r.pareto.converged && (!with_nb || r.bargaining.converged);
      }
      return exit_status(ok);
    }
    if (bayes->parsed()) {
      auto points = ifpa::run_bayes(cfg);
      bool ok = true;
      for (const auto& pt : points) {
        std::printf("snr=%5.1f dB  slots=%ld  %s  max_improvement=%.4g\n", pt.snr_db,
                    pt.trace.slots_used, pt.trace.converged ? "eps-NE" : "NOT-CONVERGED",
                    pt.trace.ne_report.max_improvement);
        ok = ok && pt.trace.converged;
      }
      return exit_status(ok);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
