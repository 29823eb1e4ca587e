#ifndef RCTMNAR_REPORT_IO_HPP
#define RCTMNAR_REPORT_IO_HPP

#include <optional>
#include <string>
#include <vector>

#include "rctmnar/estimate_report.hpp"
#include "rctmnar/montecarlo.hpp"
#include "rctmnar/scenario.hpp"
#include "rctmnar/trial_data.hpp"

namespace rctmnar {

struct RowError {
  std::size_t row = 0;  // 1-based data row (header excluded)
  std::string column;
  std::string message;
};

struct ValidationReport {
  std::vector<RowError> errors;
  std::size_t rows = 0;
  std::size_t covariates = 0;
  PaArity pa_arity = PaArity::none;
  bool has_o_true = false;
  double missing_rate_t0 = 0.0;
  double missing_rate_t1 = 0.0;

  bool ok() const { return errors.empty(); }
  std::string summary() const;
};

struct LoadResult {
  std::optional<TrialDataset> dataset;  // present iff report.ok()
  ValidationReport report;
};

// CSV schema: header row; required columns t,s,a; o empty when a=0;
// covariates prefixed x_; propensities pa_0,pa_1 or pa_00,pa_10,pa_01,pa_11;
// optional o_true. Collects every row error instead of failing fast.
LoadResult load_csv(const std::string& path);
LoadResult parse_csv(std::istream& in);

void save_csv(const TrialDataset& data, std::ostream& out, bool include_o_true = true);
void save_csv_file(const TrialDataset& data, const std::string& path, bool include_o_true = true);

enum class ReportFormat { json, csv, text };
ReportFormat report_format_from_string(const std::string& s);

// Deterministic serialization: stable field order, 12 significant digits,
// flags always present, ci emitted as null/empty when absent.
std::string emit_report(const EstimateReport& report, ReportFormat format);

std::string montecarlo_csv(const MonteCarloResult& result);

// One self-contained SVG per panel: bias vs effect per (estimand, n), bound
// range vs n, missingness proportion vs effect per arm. Returns the files
// written.
std::vector<std::string> emit_plots(const MonteCarloResult& result, const std::string& out_dir);

// Scenario / grid configs are JSON documents (see README for the schema).
ScenarioSpec scenario_from_json_file(const std::string& path);
ScenarioSpec scenario_from_json_text(const std::string& text);
MonteCarloGrid grid_from_json_file(const std::string& path);
MonteCarloGrid grid_from_json_text(const std::string& text);

// Built-in experiment grids ("paper-internal", "paper-external").
MonteCarloGrid preset_grid(const std::string& name);
std::string format_double(double v);  // %.12g, shared by all emitters

}  // namespace rctmnar

#endif
