#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ifpa/pareto.hpp"
#include "ifpa/presets.hpp"
#include "ifpa/vi.hpp"

namespace ifpa {

using json = nlohmann::json;

namespace detail {

inline void reject_unknown(const json& j, const std::string& where,
                           const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw Error("config: unknown field '" + where + it.key() + "'");
}

template <typename T>
T get_field(const json& j, const std::string& where, const std::string& key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error("config: field '" + where + key + "' has the wrong type");
  }
}

template <typename T>
T require_field(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) throw Error("config: missing field '" + where + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error("config: field '" + where + key + "' has the wrong type");
  }
}

}  // namespace detail

inline json model_to_json(const ChannelModel& m) {
  json j;
  j["n_users"] = m.n_users;
  j["direct"] = json::array();
  for (const auto& d : m.direct) j["direct"].push_back({{"support", d.support}, {"probs", d.probs}});
  j["cross"] = json::array();
  for (int i = 0; i < m.n_users; ++i)
    for (int k = 0; k < m.n_users; ++k)
      if (i != k)
        j["cross"].push_back({{"rx", i},
                              {"tx", k},
                              {"support", m.cross[i][k].support},
                              {"probs", m.cross[i][k].probs}});
  j["alpha"] = m.alpha;
  j["enumeration_cap"] = m.enumeration_cap;
  return j;
}

inline ChannelModel model_from_json(const json& j) {
  detail::reject_unknown(j, "model.", {"n_users", "direct", "cross", "alpha", "enumeration_cap"});
  ChannelModel m;
  m.n_users = detail::require_field<int>(j, "model.", "n_users");
  if (m.n_users < 1) throw Error("config: model.n_users must be >= 1");
  json directs = detail::require_field<json>(j, "model.", "direct");
  int di = 0;
  for (const auto& d : directs) {
    detail::reject_unknown(d, "model.direct[].", {"support", "probs"});
    LinkDist ld;
    ld.support = detail::require_field<std::vector<double>>(d, "model.direct[].", "support");
    ld.probs = detail::require_field<std::vector<double>>(d, "model.direct[].", "probs");
    m.direct.push_back(ld);
    ++di;
  }
  m.cross.assign(m.n_users, std::vector<LinkDist>(m.n_users));
  json crosses = detail::require_field<json>(j, "model.", "cross");
  for (const auto& c : crosses) {
    detail::reject_unknown(c, "model.cross[].", {"rx", "tx", "support", "probs"});
    int rx = detail::require_field<int>(c, "model.cross[].", "rx");
    int tx = detail::require_field<int>(c, "model.cross[].", "tx");
    if (rx < 0 || rx >= m.n_users || tx < 0 || tx >= m.n_users || rx == tx)
      throw Error("config: model.cross[] has invalid rx/tx pair");
    m.cross[rx][tx].support = detail::require_field<std::vector<double>>(c, "model.cross[].", "support");
    m.cross[rx][tx].probs = detail::require_field<std::vector<double>>(c, "model.cross[].", "probs");
  }
  m.alpha = detail::get_field<std::vector<double>>(j, "model.", "alpha",
                                                   std::vector<double>(m.n_users, 1.0));
  m.enumeration_cap = detail::get_field<std::size_t>(j, "model.", "enumeration_cap", 1000000);
  m.budgets.assign(m.n_users, 1.0);  // runs set budgets from the SNR grid
  return m;
}

struct BayesConfig {
  bool scaled_grid = true;                        // levels = budget * {0,0.2,...,2}
  std::vector<std::vector<double>> levels;        // explicit watt levels when not scaled
  BayesParams params;
};

struct ExperimentConfig {
  std::string preset;                 // empty when an explicit model is given
  std::optional<ChannelModel> model;  // engaged when preset is empty
  std::vector<Variant> variants{Variant::Full, Variant::Incident, Variant::Direct};
  std::vector<double> snr_db{0.0, 5.0, 10.0, 15.0, 20.0};
  std::uint64_t seed = 1;
  LogBase log_base = LogBase::Natural;
  std::string out_dir = "out";
  int jobs = 1;
  int starts = 100;         // phase1-study sample size
  int pareto_random_starts = 3;
  std::string disagreement = "zero";  // zero | ne
  SolveParams solver;
  double tau_picard = 0.1;
  double tau_residual = 1.0;
  AugLagParams auglag;
  BayesConfig bayes;

  ChannelModel base_model() const {
    if (!preset.empty()) return preset_model(preset);
    if (model) return *model;
    throw Error("config: either 'preset' or 'model' is required");
  }

  ChannelModel model_at_snr(double snr) const {
    return base_model().with_budget(snr_db_to_budget(snr));
  }

  std::vector<PowerLevels> levels_at(const ChannelModel& m) const {
    std::vector<PowerLevels> out;
    if (bayes.scaled_grid) {
      for (int i = 0; i < m.n_users; ++i) out.push_back(scaled_level_grid(m.budgets[i]));
    } else {
      if (static_cast<int>(bayes.levels.size()) != m.n_users)
        throw Error("config: bayes.levels must list one level set per user");
      for (const auto& lv : bayes.levels) out.push_back(PowerLevels{lv});
    }
    for (auto& lv : out) lv.validate();
    return out;
  }

  void validate() const {
    if (snr_db.empty()) throw Error("config: snr_db grid must be nonempty");
    if (variants.empty()) throw Error("config: variants must be nonempty");
    if (jobs < 1) throw Error("config: jobs must be >= 1");
    if (starts < 1) throw Error("config: starts must be >= 1");
    solver.validate();
    auglag.validate();
    base_model().validate();
  }
};

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  if (!c.preset.empty())
    j["preset"] = c.preset;
  else if (c.model)
    j["model"] = model_to_json(*c.model);
  json vars = json::array();
  for (Variant v : c.variants) vars.push_back(variant_name(v));
  j["variants"] = vars;
  j["snr_db"] = c.snr_db;
  j["seed"] = c.seed;
  j["log_base"] = c.log_base == LogBase::Natural ? "e" : "2";
  j["out_dir"] = c.out_dir;
  j["jobs"] = c.jobs;
  j["starts"] = c.starts;
  j["pareto_random_starts"] = c.pareto_random_starts;
  j["disagreement"] = c.disagreement;
  j["solver"] = {{"max_picard", c.solver.max_picard}, {"eps", c.solver.eps},
                 {"delta", c.solver.delta},           {"restart_cap", c.solver.restart_cap},
                 {"fd_step", c.solver.fd_step},       {"gamma0", c.solver.gamma0},
                 {"gamma_every", c.solver.gamma_every}, {"max_sweeps", c.solver.max_sweeps},
                 {"tau_picard", c.tau_picard},        {"tau_residual", c.tau_residual}};
  j["auglag"] = {{"penalty_c", c.auglag.penalty_c},
                 {"multiplier_step", c.auglag.multiplier_step},
                 {"ascent_step", c.auglag.ascent_step},
                 {"eps_gradient", c.auglag.eps_gradient},
                 {"eps_constraint", c.auglag.eps_constraint},
                 {"max_outer", c.auglag.max_outer},
                 {"max_rounds", c.auglag.max_rounds}};
  json bl;
  if (c.bayes.scaled_grid)
    bl["levels"] = "scaled-grid";
  else
    bl["levels"] = c.bayes.levels;
  bl["slot_cap"] = c.bayes.params.slot_cap;
  bl["stability_window"] = c.bayes.params.stability_window;
  bl["epsilon"] = c.bayes.params.epsilon;
  bl["smoothing_d"] = c.bayes.params.smoothing_d;
  bl["br_period"] = c.bayes.params.br_period;
  j["bayes"] = bl;
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  detail::reject_unknown(j, "", {"preset", "model", "variants", "snr_db", "seed", "log_base",
                                 "out_dir", "jobs", "starts", "pareto_random_starts",
                                 "disagreement", "solver", "auglag", "bayes"});
  ExperimentConfig c;
  if (j.contains("preset")) c.preset = detail::require_field<std::string>(j, "", "preset");
  if (j.contains("model")) {
    if (!c.preset.empty()) throw Error("config: give either 'preset' or 'model', not both");
    c.model = model_from_json(j.at("model"));
  }
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& v : j.at("variants")) {
      if (!v.is_string()) throw Error("config: field 'variants' entries must be strings");
      c.variants.push_back(parse_variant(v.get<std::string>()));
    }
  }
  c.snr_db = detail::get_field<std::vector<double>>(j, "", "snr_db", c.snr_db);
  c.seed = detail::get_field<std::uint64_t>(j, "", "seed", c.seed);
  std::string base = detail::get_field<std::string>(j, "", "log_base", "e");
  if (base == "e")
    c.log_base = LogBase::Natural;
  else if (base == "2")
    c.log_base = LogBase::Two;
  else
    throw Error("config: field 'log_base' must be 'e' or '2'");
  c.out_dir = detail::get_field<std::string>(j, "", "out_dir", c.out_dir);
  c.jobs = detail::get_field<int>(j, "", "jobs", c.jobs);
  c.starts = detail::get_field<int>(j, "", "starts", c.starts);
  c.pareto_random_starts = detail::get_field<int>(j, "", "pareto_random_starts", c.pareto_random_starts);
  c.disagreement = detail::get_field<std::string>(j, "", "disagreement", c.disagreement);
  if (c.disagreement != "zero" && c.disagreement != "ne")
    throw Error("config: field 'disagreement' must be 'zero' or 'ne'");
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    detail::reject_unknown(s, "solver.",
                           {"max_picard", "eps", "delta", "restart_cap", "fd_step", "gamma0",
                            "gamma_every", "max_sweeps", "tau_picard", "tau_residual"});
    c.solver.max_picard = detail::get_field<int>(s, "solver.", "max_picard", c.solver.max_picard);
    c.solver.eps = detail::get_field<double>(s, "solver.", "eps", c.solver.eps);
    c.solver.delta = detail::get_field<double>(s, "solver.", "delta", c.solver.delta);
    c.solver.restart_cap = detail::get_field<int>(s, "solver.", "restart_cap", c.solver.restart_cap);
    c.solver.fd_step = detail::get_field<double>(s, "solver.", "fd_step", c.solver.fd_step);
    c.solver.gamma0 = detail::get_field<double>(s, "solver.", "gamma0", c.solver.gamma0);
    c.solver.gamma_every = detail::get_field<int>(s, "solver.", "gamma_every", c.solver.gamma_every);
    c.solver.max_sweeps = detail::get_field<int>(s, "solver.", "max_sweeps", c.solver.max_sweeps);
    c.tau_picard = detail::get_field<double>(s, "solver.", "tau_picard", c.tau_picard);
    c.tau_residual = detail::get_field<double>(s, "solver.", "tau_residual", c.tau_residual);
  }
  if (j.contains("auglag")) {
    const json& a = j.at("auglag");
    detail::reject_unknown(a, "auglag.",
                           {"penalty_c", "multiplier_step", "ascent_step", "eps_gradient",
                            "eps_constraint", "max_outer", "max_rounds"});
    c.auglag.penalty_c = detail::get_field<double>(a, "auglag.", "penalty_c", c.auglag.penalty_c);
    c.auglag.multiplier_step =
        detail::get_field<double>(a, "auglag.", "multiplier_step", c.auglag.multiplier_step);
    c.auglag.ascent_step = detail::get_field<double>(a, "auglag.", "ascent_step", c.auglag.ascent_step);
    c.auglag.eps_gradient =
        detail::get_field<double>(a, "auglag.", "eps_gradient", c.auglag.eps_gradient);
    c.auglag.eps_constraint =
        detail::get_field<double>(a, "auglag.", "eps_constraint", c.auglag.eps_constraint);
    c.auglag.max_outer = detail::get_field<int>(a, "auglag.", "max_outer", c.auglag.max_outer);
    c.auglag.max_rounds = detail::get_field<int>(a, "auglag.", "max_rounds", c.auglag.max_rounds);
  }
  if (j.contains("bayes")) {
    const json& b = j.at("bayes");
    detail::reject_unknown(
        b, "bayes.", {"levels", "slot_cap", "stability_window", "epsilon", "smoothing_d", "br_period"});
    if (b.contains("levels")) {
      if (b.at("levels").is_string()) {
        if (b.at("levels").get<std::string>() != "scaled-grid")
          throw Error("config: bayes.levels string must be 'scaled-grid'");
        c.bayes.scaled_grid = true;
      } else {
        c.bayes.scaled_grid = false;
        try {
          c.bayes.levels = b.at("levels").get<std::vector<std::vector<double>>>();
        } catch (const json::exception&) {
          throw Error("config: field 'bayes.levels' has the wrong type");
        }
      }
    }
    c.bayes.params.slot_cap = detail::get_field<long>(b, "bayes.", "slot_cap", c.bayes.params.slot_cap);
    c.bayes.params.stability_window =
        detail::get_field<long>(b, "bayes.", "stability_window", c.bayes.params.stability_window);
    c.bayes.params.epsilon = detail::get_field<double>(b, "bayes.", "epsilon", c.bayes.params.epsilon);
    c.bayes.params.smoothing_d =
        detail::get_field<long>(b, "bayes.", "smoothing_d", c.bayes.params.smoothing_d);
    c.bayes.params.br_period = detail::get_field<long>(b, "bayes.", "br_period", c.bayes.params.br_period);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("config: parse error in '" + path + "': " + e.what());
  }
  ExperimentConfig c = config_from_json(j);
  c.validate();
  return c;
}

inline void save_config(const ExperimentConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("config: cannot write '" + path + "'");
  out << config_to_json(c).dump(2) << "\n";
}

}  // namespace ifpa
