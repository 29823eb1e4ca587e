#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "rctmnar/dag.hpp"
#include "rctmnar/estimators.hpp"
#include "rctmnar/montecarlo.hpp"
#include "rctmnar/report_io.hpp"
#include "rctmnar/scenario.hpp"

namespace {

using namespace rctmnar;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;      // invalid input / config
constexpr int kExitUndefined = 3;  // requested estimand wholly undefined

void print_seed(std::uint64_t seed) { std::cerr << "seed: " << seed << "\n"; }

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    const auto b = token.find_first_not_of(" \t");
    const auto e = token.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(token.substr(b, e - b + 1));
  }
  return out;
}

struct PolicyFlags {
  std::string mode = "clip_to_bounds";
  std::string fallback = "midpoint";
  int resamples = 200;
  std::string ps_method = "analytic";
  bool clip = true;

  GapPolicy build(std::uint64_t seed) const {
    GapPolicy p;
    p.mode = gap_mode_from_string(mode);
    p.fallback = fallback_from_string(fallback);
    if (resamples < 1) throw std::invalid_argument("--resamples must be >= 1");
    p.resamples = resamples;
    p.ps_method = ps_method_from_string(ps_method);
    p.clip = clip;
    p.seed = seed;
    return p;
  }
};

void add_policy_flags(CLI::App* cmd, PolicyFlags& flags) {
  cmd->add_option("--gap-policy", flags.mode,
                  "gap policy: bounds_midpoint | clip_to_bounds | smooth | skip_renormalize");
  cmd->add_option("--fallback", flags.fallback, "smoothing fallback: naive | midpoint | mar");
  cmd->add_option("--resamples", flags.resamples, "bootstrap resamples for the sign-stability weight");
  cmd->add_option("--ps-method", flags.ps_method, "sign-stability method: analytic | bootstrap");
  cmd->add_flag("--clip,!--no-clip", flags.clip, "clip evaluable estimates into the tight bounds");
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed_override) {
  ScenarioSpec spec = scenario_from_json_file(config_path);
  if (seed_override) spec.seed = *seed_override;
  print_seed(spec.seed);
  const TrialDataset data = generate(spec);
  save_csv_file(data, out_path, /*include_o_true=*/true);

  std::int64_t n_arm[2] = {0, 0}, miss[2] = {0, 0};
  for (const auto& r : data.records()) {
    ++n_arm[r.t];
    if (r.a == 0) ++miss[r.t];
  }
  std::cerr << "wrote " << data.size() << " records (" << to_string(spec.mechanism) << ") to "
            << out_path << "\n";
  for (int t = 0; t < 2; ++t) {
    const double rate = n_arm[t] > 0 ? 100.0 * miss[t] / static_cast<double>(n_arm[t]) : 0.0;
    std::cerr << "missing t=" << t << ": " << miss[t] << "/" << n_arm[t] << " ("
              << format_double(rate) << "%)\n";
  }
  return kExitOk;
}

EstimateReport wrap_point(Estimand estimand, double point) {
  EstimateReport r;
  r.estimand = estimand;
  r.point = point;
  return r;
}

int cmd_estimate(const std::string& data_path, const std::vector<std::string>& estimators,
                 const std::string& adjust, int bins, const std::string& scenario,
                 const PolicyFlags& policy_flags, const std::string& method_name, bool haldane,
                 int bootstrap, std::uint64_t seed, std::optional<double> design_p1,
                 const std::string& format_name, const std::string& out_path) {
  print_seed(seed);
  const LoadResult loaded = load_csv(data_path);
  if (!loaded.report.ok()) {
    for (const auto& e : loaded.report.errors)
      std::cerr << "row " << e.row << " [" << e.column << "]: " << e.message << "\n";
    std::cerr << loaded.report.summary() << "\n";
    return kExitInput;
  }
  const TrialDataset& data = *loaded.dataset;

  AdjustmentSpec adjustment = AdjustmentSpec::parse(adjust, bins);
  if (!scenario.empty()) {
    const ScenarioDagId id = scenario_dag_id_from_string(scenario);
    adjustment.scenario_hint = id;
    std::vector<std::string> nodes;
    bool saw_x = false;
    for (const auto& comp : adjustment.components) {
      switch (comp.kind) {
        case AdjustmentComponent::Kind::covariate:
          if (!saw_x) nodes.push_back("X");
          saw_x = true;
          break;
        case AdjustmentComponent::Kind::ice: nodes.push_back("S"); break;
        case AdjustmentComponent::Kind::pa_bins: nodes.push_back("pa"); break;
      }
    }
    const AdjustmentVerdict verdict = validate_adjustment(id, nodes);
    if (!verdict.valid) {
      std::cerr << "adjustment {" << adjustment.describe()
                << "} is not valid for this scenario: " << verdict.message << "\n";
      return kExitInput;
    }
    std::cerr << "adjustment check: " << verdict.message << "\n";
  }

  const GapPolicy policy = policy_flags.build(seed);
  const ThetaMethod method = theta_method_from_string(method_name);
  const StratifiedCounts counts = build_counts(data, adjustment);

  const ReportFormat format = report_format_from_string(format_name);
  std::vector<EstimateReport> reports;
  bool any_undefined = false;

  auto with_ci = [&](EstimateReport report, const CountsEstimator& est) {
    if (bootstrap > 0) {
      const BootstrapCi ci = bootstrap_ci(data, adjustment, est, bootstrap, seed);
      if (ci.defined > 0) report.ci = {ci.lo, ci.hi};
      if (ci.flagged)
        report.warnings.push_back("bootstrap: estimator undefined on more than half the resamples");
    }
    return report;
  };
  auto guarded = [&](const std::function<double(const StratifiedCounts&)>& f) -> CountsEstimator {
    return [f](const StratifiedCounts& c) -> std::optional<double> {
      try {
        return f(c);
      } catch (const EstimationError&) {
        return std::nullopt;
      }
    };
  };

  for (const std::string& name : estimators) {
    try {
      if (name == "naive") {
        for (int t = 0; t < 2; ++t) {
          auto est = guarded([t](const StratifiedCounts& c) { return naive_estimate(c, t); });
          reports.push_back(with_ci(
              wrap_point(t == 1 ? Estimand::p_outcome_t1 : Estimand::p_outcome_t0,
                         naive_estimate(counts, t)),
              est));
        }
      } else if (name == "phi") {
        for (int t = 0; t < 2; ++t) {
          auto est = guarded([t, policy](const StratifiedCounts& c) { return phi(c, t, policy).point; });
          reports.push_back(with_ci(phi(counts, t, policy), est));
        }
      } else if (name == "delta") {
        auto est = guarded([policy, design_p1](const StratifiedCounts& c) {
          return delta_ate(c, policy, design_p1).point;
        });
        reports.push_back(with_ci(delta_ate(counts, policy, design_p1), est));
      } else if (name == "aclor") {
        auto est = guarded([method, policy, haldane](const StratifiedCounts& c) {
          return aclor(c, method, policy, haldane).point;
        });
        reports.push_back(with_ci(aclor(counts, method, policy, haldane), est));
      } else if (name == "mar") {
        for (int t = 0; t < 2; ++t) {
          auto est = guarded([t](const StratifiedCounts& c) { return mar_estimate(c, t).point; });
          reports.push_back(with_ci(mar_estimate(counts, t), est));
        }
      } else {
        std::cerr << "unknown estimator: " << name
                  << " (expected naive, phi, delta, aclor, mar)\n";
        return kExitInput;
      }
    } catch (const EstimationError& e) {
      std::cerr << name << ": " << e.what() << "\n";
      any_undefined = true;
    }
  }
  if (reports.empty() && any_undefined) return kExitUndefined;

  for (const auto& r : reports) {
    for (const auto& w : r.warnings)
      std::cerr << "warning [" << to_string(r.estimand) << "]: " << w << "\n";
    if (r.flags.positivity_violation)
      std::cerr << "warning [" << to_string(r.estimand)
                << "]: positivity failed in some strata (see the per-stratum detail)\n";
    if (r.flags.clipped_to_bounds)
      std::cerr << "warning [" << to_string(r.estimand)
                << "]: estimates clipped into the identification bounds\n";
  }

  std::ostringstream out;
  if (format == ReportFormat::json) {
    out << "[";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (i) out << ",";
      out << emit_report(reports[i], format);
    }
    out << "]\n";
  } else if (format == ReportFormat::csv) {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const std::string block = emit_report(reports[i], format);
      if (i == 0) {
        out << block;
      } else {
        out << block.substr(block.find('\n') + 1);  // drop repeated header
      }
    }
  } else {
    for (const auto& r : reports) out << emit_report(r, format) << "\n";
  }

  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream file(out_path);
    if (!file) {
      std::cerr << "cannot write " << out_path << "\n";
      return kExitInput;
    }
    file << out.str();
  }
  return any_undefined ? kExitUndefined : kExitOk;
}

int cmd_montecarlo(const std::string& config_path, const std::string& preset,
                   std::optional<int> reps, const std::string& out_dir, int jobs,
                   std::optional<std::uint64_t> seed_override, bool plots) {
  MonteCarloGrid grid = preset.empty() ? grid_from_json_file(config_path) : preset_grid(preset);
  if (reps) {
    if (*reps < 1) throw std::invalid_argument("--reps must be >= 1");
    grid.reps = *reps;
  }
  if (seed_override) grid.base.seed = *seed_override;
  print_seed(grid.base.seed);

  const MonteCarloResult result = run_montecarlo(grid, jobs);
  std::filesystem::create_directories(out_dir);
  const std::string csv_path = out_dir + "/results.csv";
  {
    std::ofstream out(csv_path);
    if (!out) throw std::invalid_argument("cannot write " + csv_path);
    out << montecarlo_csv(result);
  }
  std::cerr << "wrote " << csv_path << " (" << result.rows.size() << " rows)\n";
  if (plots) {
    const auto files = emit_plots(result, out_dir);
    std::cerr << "wrote " << files.size() << " plot(s)\n";
  }
  return kExitOk;
}

int cmd_dsep(const std::string& dag_path, const std::string& scenario, const std::string& x,
             const std::string& y, const std::string& given) {
  print_seed(0);  // no randomness in this subcommand
  if (dag_path.empty() == scenario.empty())
    throw std::invalid_argument("provide exactly one of --dag or --scenario");
  const Dag g = dag_path.empty() ? builtin_dag(scenario_dag_id_from_string(scenario))
                                 : load_dag_file(dag_path);
  const bool separated = d_separated(g, split_list(x), split_list(y), split_list(given));
  std::cout << (separated ? "d-separated" : "d-connected") << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& data_path, const std::string& adjust, int bins) {
  print_seed(0);  // no randomness in this subcommand
  const LoadResult loaded = load_csv(data_path);
  for (const auto& e : loaded.report.errors)
    std::cout << "row " << e.row << " [" << e.column << "]: " << e.message << "\n";
  std::cout << loaded.report.summary() << "\n";
  if (!loaded.report.ok()) return kExitInput;

  // Strata occupancy under the requested (or full) adjustment.
  const TrialDataset& data = *loaded.dataset;
  std::string spec_text = adjust;
  if (spec_text.empty()) {
    for (const auto& name : data.covariate_names()) {
      if (!spec_text.empty()) spec_text += ",";
      spec_text += name;
    }
    if (!spec_text.empty()) spec_text += ",";
    spec_text += "s";
    if (data.pa_arity() != PaArity::none) spec_text += ",pa";
  }
  const StratifiedCounts counts = build_counts(data, AdjustmentSpec::parse(spec_text, bins));
  std::cout << "strata over {" << counts.adjustment().describe() << "}: "
            << counts.stratum_count() << "\n";
  for (const auto& [key, cells] : counts.strata())
    std::cout << "  " << to_string(key) << ": " << cells.total() << " rows, "
              << cells.miss[0] + cells.miss[1] << " missing\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"treatment-effect estimation in randomized trials with missing binary outcomes"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "generate a dataset from a scenario config");
  std::string sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("--config", sim_config, "scenario JSON")->required();
  simulate->add_option("--out", sim_out, "output CSV path")->required();
  simulate->add_option("--seed", sim_seed, "seed override");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "estimate treatment effects from a dataset");
  std::string est_data, est_adjust, est_scenario, est_method = "logistic", est_format = "text",
              est_out;
  std::string est_estimators = "naive,phi,delta";
  int est_bins = 5, est_bootstrap = 0;
  std::uint64_t est_seed = 0;
  bool est_haldane = false;
  std::optional<double> est_design_p1;
  PolicyFlags est_policy;
  estimate->add_option("--data", est_data, "dataset CSV")->required();
  estimate->add_option("--estimator", est_estimators, "comma list: naive, phi, delta, aclor, mar");
  estimate->add_option("--adjust", est_adjust, "adjustment set, e.g. x1,s or pa,s");
  estimate->add_option("--bins", est_bins, "equal-width bins for pa propensities");
  estimate->add_option("--scenario", est_scenario, "check the adjustment against this scenario DAG");
  estimate->add_option("--method", est_method, "aclor probabilities: contingency | logistic");
  estimate->add_flag("--haldane", est_haldane, "+0.5 cell correction for contingency aclor");
  estimate->add_option("--bootstrap", est_bootstrap, "percentile bootstrap resamples (0 = off)");
  estimate->add_option("--seed", est_seed, "seed for bootstrap and resampling");
  estimate->add_option("--design-p1", est_design_p1,
                       "known randomization probability P(T=1) for the ATE estimator");
  estimate->add_option("--format", est_format, "output format: json | csv | text");
  estimate->add_option("--out", est_out, "write the report here instead of stdout");
  add_policy_flags(estimate, est_policy);

  // montecarlo
  auto* montecarlo = app.add_subcommand("montecarlo", "run a replication experiment grid");
  std::string mc_config, mc_preset, mc_out;
  std::optional<int> mc_reps;
  int mc_jobs = 1;
  std::optional<std::uint64_t> mc_seed;
  bool mc_plots = true;
  montecarlo->add_option("--config", mc_config, "grid JSON");
  montecarlo->add_option("--preset", mc_preset, "built-in grid: paper-internal | paper-external");
  montecarlo->add_option("--reps", mc_reps, "replicates per grid cell");
  montecarlo->add_option("--out", mc_out, "output directory")->required();
  montecarlo->add_option("--jobs", mc_jobs, "concurrent replicate workers");
  montecarlo->add_option("--seed", mc_seed, "seed override");
  montecarlo->add_flag("--plots,!--no-plots", mc_plots, "emit SVG panels");

  // dsep
  auto* dsep = app.add_subcommand("dsep", "answer a d-separation query");
  std::string ds_dag, ds_scenario, ds_x, ds_y, ds_given;
  dsep->add_option("--dag", ds_dag, "DAG text file (parent -> child lines)");
  dsep->add_option("--scenario", ds_scenario, "built-in scenario DAG name");
  dsep->add_option("--x", ds_x, "first node set (comma list)")->required();
  dsep->add_option("--y", ds_y, "second node set")->required();
  dsep->add_option("--given", ds_given, "conditioning set");

  // validate
  auto* validate = app.add_subcommand("validate", "validate a dataset CSV");
  std::string val_data, val_adjust;
  int val_bins = 5;
  validate->add_option("--data", val_data, "dataset CSV")->required();
  validate->add_option("--adjust", val_adjust, "stratification for the occupancy summary");
  validate->add_option("--bins", val_bins, "equal-width bins for pa propensities");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim_config, sim_out, sim_seed);
    if (estimate->parsed())
      return cmd_estimate(est_data, split_list(est_estimators), est_adjust, est_bins, est_scenario,
                          est_policy, est_method, est_haldane, est_bootstrap, est_seed,
                          est_design_p1, est_format, est_out);
    if (montecarlo->parsed()) {
      if (mc_config.empty() == mc_preset.empty())
        throw std::invalid_argument("provide exactly one of --config or --preset");
      return cmd_montecarlo(mc_config, mc_preset, mc_reps, mc_out, mc_jobs, mc_seed, mc_plots);
    }
    if (dsep->parsed()) return cmd_dsep(ds_dag, ds_scenario, ds_x, ds_y, ds_given);
    if (validate->parsed()) return cmd_validate(val_data, val_adjust, val_bins);
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUndefined;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
