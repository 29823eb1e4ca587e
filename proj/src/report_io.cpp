#include "rctmnar/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rctmnar {

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

namespace {

std::string format_exact(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::optional<int> parse_binary(const std::string& s) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  return std::nullopt;
}

std::optional<double> parse_unit_interval(const std::string& s) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(s, &consumed);
    if (consumed != s.size()) return std::nullopt;
    if (!(v >= 0.0 && v <= 1.0)) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

}  // namespace

std::string ValidationReport::summary() const {
  std::ostringstream out;
  out << rows << " rows, " << covariates << " covariates, pa arity "
      << static_cast<int>(pa_arity) << (has_o_true ? ", with o_true" : "")
      << "; missing " << format_double(missing_rate_t0 * 100.0) << "% (t=0) / "
      << format_double(missing_rate_t1 * 100.0) << "% (t=1); " << errors.size() << " error(s)";
  return out.str();
}

LoadResult parse_csv(std::istream& in) {
  LoadResult result;
  ValidationReport& report = result.report;

  std::string line;
  if (!std::getline(in, line)) {
    report.errors.push_back({0, "", "empty file"});
    return result;
  }
  const std::vector<std::string> header = split_csv_line(trim(line));

  int col_t = -1, col_s = -1, col_a = -1, col_o = -1, col_o_true = -1;
  std::vector<std::pair<int, std::string>> x_cols;  // column index, name
  std::vector<int> pa_cols(4, -1);                  // pa_00, pa_10, pa_01, pa_11
  std::vector<int> pa2_cols(2, -1);                 // pa_0, pa_1
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = trim(header[i]);
    const int idx = static_cast<int>(i);
    if (name == "t") col_t = idx;
    else if (name == "s") col_s = idx;
    else if (name == "a") col_a = idx;
    else if (name == "o") col_o = idx;
    else if (name == "o_true") col_o_true = idx;
    else if (name.rfind("x_", 0) == 0) x_cols.emplace_back(idx, name.substr(2));
    else if (name == "pa_00") pa_cols[0] = idx;
    else if (name == "pa_10") pa_cols[1] = idx;
    else if (name == "pa_01") pa_cols[2] = idx;
    else if (name == "pa_11") pa_cols[3] = idx;
    else if (name == "pa_0") pa2_cols[0] = idx;
    else if (name == "pa_1") pa2_cols[1] = idx;
    else report.errors.push_back({0, name, "unknown column"});
  }
  if (col_t < 0) report.errors.push_back({0, "t", "required column missing"});
  if (col_s < 0) report.errors.push_back({0, "s", "required column missing"});
  if (col_a < 0) report.errors.push_back({0, "a", "required column missing"});
  if (col_o < 0) report.errors.push_back({0, "o", "required column missing"});

  const int pa4_present = static_cast<int>(std::count_if(
      pa_cols.begin(), pa_cols.end(), [](int c) { return c >= 0; }));
  const int pa2_present = static_cast<int>(std::count_if(
      pa2_cols.begin(), pa2_cols.end(), [](int c) { return c >= 0; }));
  PaArity arity = PaArity::none;
  if (pa4_present > 0 && pa2_present > 0) {
    report.errors.push_back({0, "pa", "mixed pa_0/pa_1 and pa_00..pa_11 columns"});
  } else if (pa4_present > 0) {
    if (pa4_present != 4)
      report.errors.push_back({0, "pa", "pa_00, pa_10, pa_01, pa_11 must all be present"});
    arity = PaArity::four;
  } else if (pa2_present > 0) {
    if (pa2_present != 2) report.errors.push_back({0, "pa", "pa_0 and pa_1 must both be present"});
    arity = PaArity::two;
  }
  if (!report.errors.empty()) return result;

  std::vector<int> pa_use;
  if (arity == PaArity::four) pa_use = pa_cols;
  if (arity == PaArity::two) pa_use = pa2_cols;

  report.covariates = x_cols.size();
  report.pa_arity = arity;
  report.has_o_true = col_o_true >= 0;

  std::vector<TrialRecord> records;
  std::size_t row_number = 0;
  std::int64_t n_arm[2] = {0, 0}, n_missing[2] = {0, 0};
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    ++row_number;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      report.errors.push_back({row_number, "", "expected " + std::to_string(header.size()) +
                                                   " fields, found " +
                                                   std::to_string(fields.size())});
      continue;
    }
    TrialRecord r;
    bool row_ok = true;
    auto take_binary = [&](int col, const char* name) -> int {
      const auto v = parse_binary(trim(fields[static_cast<std::size_t>(col)]));
      if (!v) {
        report.errors.push_back({row_number, name, "expected 0 or 1"});
        row_ok = false;
        return 0;
      }
      return *v;
    };
    r.t = take_binary(col_t, "t");
    r.s = take_binary(col_s, "s");
    r.a = take_binary(col_a, "a");

    const std::string o_field = trim(fields[static_cast<std::size_t>(col_o)]);
    if (r.a == 1) {
      if (o_field.empty()) {
        report.errors.push_back({row_number, "o", "outcome missing while available (a=1)"});
        row_ok = false;
      } else if (const auto v = parse_binary(o_field)) {
        r.o_star = *v;
      } else {
        report.errors.push_back({row_number, "o", "expected 0 or 1"});
        row_ok = false;
      }
    } else if (!o_field.empty()) {
      report.errors.push_back({row_number, "o", "outcome present while unavailable (a=0)"});
      row_ok = false;
    }

    for (const auto& [col, name] : x_cols) {
      const std::string field = trim(fields[static_cast<std::size_t>(col)]);
      try {
        std::size_t consumed = 0;
        const int v = std::stoi(field, &consumed);
        if (consumed != field.size() || v < 0) throw std::invalid_argument("");
        r.x.push_back(v);
      } catch (...) {
        report.errors.push_back({row_number, "x_" + name, "expected a nonnegative integer code"});
        row_ok = false;
        r.x.push_back(0);
      }
    }
    for (std::size_t k = 0; k < pa_use.size(); ++k) {
      const std::string field = trim(fields[static_cast<std::size_t>(pa_use[k])]);
      if (const auto v = parse_unit_interval(field)) {
        r.pa.push_back(*v);
      } else {
        report.errors.push_back({row_number, "pa", "expected a decimal in [0,1]"});
        row_ok = false;
        r.pa.push_back(0.0);
      }
    }
    if (col_o_true >= 0) {
      const auto v = parse_binary(trim(fields[static_cast<std::size_t>(col_o_true)]));
      if (!v) {
        report.errors.push_back({row_number, "o_true", "expected 0 or 1"});
        row_ok = false;
      } else {
        r.o_true = *v;
      }
    }
    if (row_ok) {
      ++n_arm[r.t];
      if (r.a == 0) ++n_missing[r.t];
      records.push_back(std::move(r));
    }
  }
  report.rows = row_number;
  if (n_arm[0] > 0)
    report.missing_rate_t0 = static_cast<double>(n_missing[0]) / static_cast<double>(n_arm[0]);
  if (n_arm[1] > 0)
    report.missing_rate_t1 = static_cast<double>(n_missing[1]) / static_cast<double>(n_arm[1]);
  if (records.empty()) report.errors.push_back({0, "", "no valid data rows"});
  if (!report.ok()) return result;

  std::vector<std::string> names;
  for (const auto& [col, name] : x_cols) names.push_back(name);
  try {
    result.dataset.emplace(std::move(records), std::move(names), arity);
  } catch (const std::invalid_argument& e) {
    report.errors.push_back({0, "", e.what()});
  }
  return result;
}

LoadResult load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    LoadResult r;
    r.report.errors.push_back({0, "", "cannot open file: " + path});
    return r;
  }
  return parse_csv(in);
}

void save_csv(const TrialDataset& data, std::ostream& out, bool include_o_true) {
  include_o_true = include_o_true && data.has_o_true();
  out << "t,s,a,o";
  for (const auto& name : data.covariate_names()) out << ",x_" << name;
  if (data.pa_arity() == PaArity::two) out << ",pa_0,pa_1";
  if (data.pa_arity() == PaArity::four) out << ",pa_00,pa_10,pa_01,pa_11";
  if (include_o_true) out << ",o_true";
  out << "\n";
  for (const TrialRecord& r : data.records()) {
    out << r.t << "," << r.s << "," << r.a << ",";
    if (r.o_star) out << *r.o_star;
    for (int v : r.x) out << "," << v;
    for (double v : r.pa) out << "," << format_exact(v);
    if (include_o_true) out << "," << *r.o_true;
    out << "\n";
  }
}

void save_csv_file(const TrialDataset& data, const std::string& path, bool include_o_true) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  save_csv(data, out, include_o_true);
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "text") return ReportFormat::text;
  throw std::invalid_argument("unknown report format: " + s);
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string opt_json(const std::optional<double>& v) {
  return v ? format_double(*v) : "null";
}

const char* bool_str(bool b) { return b ? "true" : "false"; }

std::string flags_json(const ReportFlags& f) {
  std::ostringstream out;
  out << "{\"positivity_violation\":" << bool_str(f.positivity_violation)
      << ",\"equal_impact\":" << bool_str(f.equal_impact)
      << ",\"clipped_to_bounds\":" << bool_str(f.clipped_to_bounds)
      << ",\"smoothed\":" << bool_str(f.smoothed)
      << ",\"smoothing_weight\":" << format_double(f.smoothing_weight)
      << ",\"logistic_nonconverged\":" << bool_str(f.logistic_nonconverged)
      << ",\"skipped_strata\":" << bool_str(f.skipped_strata)
      << ",\"pooled_sign_stability\":" << format_double(f.pooled_sign_stability) << "}";
  return out.str();
}

}  // namespace

std::string emit_report(const EstimateReport& report, ReportFormat format) {
  if (format == ReportFormat::json) {
    std::ostringstream out;
    out << "{\"estimand\":\"" << to_string(report.estimand) << "\""
        << ",\"point\":" << format_double(report.point)
        << ",\"lower\":" << opt_json(report.lower)
        << ",\"upper\":" << opt_json(report.upper);
    out << ",\"ci\":";
    if (report.ci)
      out << "{\"lo\":" << format_double(report.ci->first)
          << ",\"hi\":" << format_double(report.ci->second) << "}";
    else
      out << "null";
    out << ",\"flags\":" << flags_json(report.flags);
    out << ",\"warnings\":[";
    for (std::size_t i = 0; i < report.warnings.size(); ++i) {
      if (i) out << ",";
      out << "\"" << json_escape(report.warnings[i]) << "\"";
    }
    out << "],\"strata\":[";
    for (std::size_t i = 0; i < report.strata.size(); ++i) {
      const StratumDetail& d = report.strata[i];
      if (i) out << ",";
      out << "{\"key\":\"" << json_escape(to_string(d.key)) << "\""
          << ",\"raw\":" << opt_json(d.raw)
          << ",\"resolved\":" << format_double(d.resolved)
          << ",\"weight\":" << format_double(d.weight)
          << ",\"status\":\"" << to_string(d.status) << "\""
          << ",\"gap_filled\":" << bool_str(d.gap_filled)
          << ",\"clipped\":" << bool_str(d.clipped)
          << ",\"skipped\":" << bool_str(d.skipped)
          << ",\"q_s\":" << format_double(d.q_s) << ",\"bounds\":";
      if (d.bounds)
        out << "{\"lb\":" << format_double(d.bounds->lb)
            << ",\"ub\":" << format_double(d.bounds->ub) << "}";
      else
        out << "null";
      out << "}";
    }
    out << "]}";
    return out.str();
  }

  if (format == ReportFormat::csv) {
    std::ostringstream out;
    out << "estimand,point,lower,upper,ci_lo,ci_hi,positivity_violation,equal_impact,"
           "clipped_to_bounds,smoothed,smoothing_weight,logistic_nonconverged,skipped_strata,"
           "pooled_sign_stability,strata,warnings\n";
    const ReportFlags& f = report.flags;
    out << to_string(report.estimand) << "," << format_double(report.point) << ","
        << (report.lower ? format_double(*report.lower) : "") << ","
        << (report.upper ? format_double(*report.upper) : "") << ","
        << (report.ci ? format_double(report.ci->first) : "") << ","
        << (report.ci ? format_double(report.ci->second) : "") << ","
        << bool_str(f.positivity_violation) << "," << bool_str(f.equal_impact) << ","
        << bool_str(f.clipped_to_bounds) << "," << bool_str(f.smoothed) << ","
        << format_double(f.smoothing_weight) << "," << bool_str(f.logistic_nonconverged) << ","
        << bool_str(f.skipped_strata) << "," << format_double(f.pooled_sign_stability) << ","
        << report.strata.size() << "," << report.warnings.size() << "\n";
    return out.str();
  }

  std::ostringstream out;
  out << "estimand: " << to_string(report.estimand) << "\n";
  out << "point: " << format_double(report.point) << "\n";
  out << "bounds: ";
  if (report.lower)
    out << "[" << format_double(*report.lower) << ", " << format_double(*report.upper) << "]\n";
  else
    out << "none\n";
  out << "ci: ";
  if (report.ci)
    out << "[" << format_double(report.ci->first) << ", " << format_double(report.ci->second)
        << "]\n";
  else
    out << "none\n";
  const ReportFlags& f = report.flags;
  out << "flags: positivity_violation=" << bool_str(f.positivity_violation)
      << " equal_impact=" << bool_str(f.equal_impact)
      << " clipped_to_bounds=" << bool_str(f.clipped_to_bounds)
      << " smoothed=" << bool_str(f.smoothed)
      << " smoothing_weight=" << format_double(f.smoothing_weight)
      << " logistic_nonconverged=" << bool_str(f.logistic_nonconverged)
      << " skipped_strata=" << bool_str(f.skipped_strata)
      << " pooled_sign_stability=" << format_double(f.pooled_sign_stability) << "\n";
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  out << "strata (" << report.strata.size() << "):\n";
  for (const StratumDetail& d : report.strata) {
    out << "  " << to_string(d.key) << " raw=" << (d.raw ? format_double(*d.raw) : "undefined")
        << " resolved=" << format_double(d.resolved) << " weight=" << format_double(d.weight)
        << " status=" << to_string(d.status);
    if (d.bounds)
      out << " bounds=[" << format_double(d.bounds->lb) << ", " << format_double(d.bounds->ub)
          << "]";
    if (d.gap_filled) out << " gap_filled";
    if (d.clipped) out << " clipped";
    if (d.skipped) out << " skipped";
    if (d.q_s < 1.0) out << " q_s=" << format_double(d.q_s);
    out << "\n";
  }
  return out.str();
}

std::string montecarlo_csv(const MonteCarloResult& result) {
  std::ostringstream out;
  out << "n,effect,estimator,estimand,mean_bias,mean_abs_bias,ci_lo,ci_hi,"
         "mean_bound_range,missing_prop_t0,missing_prop_t1,reps\n";
  for (const MonteCarloRow& r : result.rows) {
    out << r.n << "," << format_double(r.effect) << "," << r.estimator << "," << r.estimand << ","
        << format_double(r.mean_bias) << "," << format_double(r.mean_abs_bias) << ","
        << format_double(r.ci_lo) << "," << format_double(r.ci_hi) << ","
        << format_double(r.mean_bound_range) << "," << format_double(r.missing_prop_t0) << ","
        << format_double(r.missing_prop_t1) << "," << r.reps << "\n";
  }
  return out.str();
}

namespace {

using nlohmann::json;

CovariateSpec covariate_from_json(const json& j, const std::string& default_name) {
  CovariateSpec c;
  c.name = j.value("name", default_name);
  c.probs = j.at("probs").get<std::vector<double>>();
  return c;
}

std::vector<double> coef_vector(const json& model, const char* key, std::size_t n_cov) {
  if (!model.contains(key)) return std::vector<double>(n_cov, 0.0);
  auto v = model.at(key).get<std::vector<double>>();
  if (v.size() != n_cov)
    throw std::invalid_argument(std::string("model coefficient list '") + key +
                                "' must have one entry per covariate");
  return v;
}

}  // namespace

ScenarioSpec scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    ScenarioSpec spec;
    spec.mechanism = scenario_dag_id_from_string(j.at("mechanism").get<std::string>());
    spec.n = j.value("n", spec.n);
    spec.p_treat = j.value("p_treat", spec.p_treat);
    spec.seed = j.value("seed", spec.seed);
    spec.pa_noise = j.value("pa_noise", spec.pa_noise);
    if (j.contains("covariates")) {
      int index = 1;
      for (const auto& cj : j.at("covariates"))
        spec.covariates.push_back(covariate_from_json(cj, "x" + std::to_string(index++)));
    }
    if (j.contains("u")) spec.u = covariate_from_json(j.at("u"), "u");
    const std::size_t n_cov = spec.covariates.size();
    if (j.contains("s_model")) {
      const json& m = j.at("s_model");
      spec.intercept_s = m.value("intercept", 0.0);
      spec.effect_t_on_s = m.value("t", 0.0);
      spec.x_on_s = coef_vector(m, "x", n_cov);
      spec.u_on_s = m.value("u", 0.0);
    }
    if (j.contains("o_model")) {
      const json& m = j.at("o_model");
      spec.intercept_o = m.value("intercept", 0.0);
      spec.effect_t_on_o = m.value("t", 0.0);
      spec.effect_s_on_o = m.value("s", 0.0);
      spec.x_on_o = coef_vector(m, "x", n_cov);
      if (m.contains("tx")) spec.tx_on_o = coef_vector(m, "tx", n_cov);
      spec.u_on_o = m.value("u", 0.0);
    }
    if (j.contains("a_model")) {
      const json& m = j.at("a_model");
      spec.intercept_a = m.value("intercept", 0.0);
      spec.o_on_a = m.value("o", 0.0);
      spec.s_on_a = m.value("s", 0.0);
      spec.x_on_a = coef_vector(m, "x", n_cov);
      spec.u_on_a = m.value("u", 0.0);
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad scenario config: ") + e.what());
  }
}

ScenarioSpec scenario_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return scenario_from_json_text(buffer.str());
}

namespace {

GapPolicy policy_from_json(const json& j) {
  GapPolicy p;
  p.mode = gap_mode_from_string(j.value("mode", std::string(to_string(p.mode))));
  p.fallback = fallback_from_string(j.value("fallback", std::string(to_string(p.fallback))));
  p.resamples = j.value("resamples", p.resamples);
  p.ps_method = ps_method_from_string(j.value("ps_method", std::string(to_string(p.ps_method))));
  p.clip = j.value("clip", p.clip);
  if (p.resamples < 1) throw std::invalid_argument("policy resamples must be >= 1");
  return p;
}

}  // namespace

MonteCarloGrid grid_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    MonteCarloGrid grid;
    grid.base = scenario_from_json_text(j.at("scenario").dump());
    grid.sample_sizes = j.at("sample_sizes").get<std::vector<std::int64_t>>();
    grid.effects = j.at("effects").get<std::vector<double>>();
    grid.reps = j.value("reps", grid.reps);
    grid.pa_bins = j.value("bins", grid.pa_bins);
    if (j.contains("estimators"))
      grid.estimators = j.at("estimators").get<std::vector<std::string>>();
    grid.adjustment = j.value("adjustment", grid.adjustment);
    if (j.contains("policy")) grid.policy = policy_from_json(j.at("policy"));
    if (grid.reps < 1) throw std::invalid_argument("reps must be >= 1");
    return grid;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad grid config: ") + e.what());
  }
}

MonteCarloGrid grid_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return grid_from_json_text(buffer.str());
}

MonteCarloGrid preset_grid(const std::string& name) {
  MonteCarloGrid grid;
  grid.sample_sizes = {1000, 5000, 20000};
  grid.effects = {0.5, 1.0, 2.0};
  grid.reps = 200;
  grid.pa_bins = 5;
  grid.estimators = {"naive", "mnar", "mnar_smooth"};

  ScenarioSpec base;
  base.p_treat = 0.5;
  base.covariates = {{"x1", {0.6, 0.4}}};
  base.u = {"u", {0.65, 0.35}};
  base.intercept_s = -1.2;
  base.effect_t_on_s = 1.2;
  base.x_on_s = {0.6};
  base.u_on_s = 0.7;
  base.intercept_o = -0.6;
  base.effect_t_on_o = 1.0;
  base.effect_s_on_o = -1.2;
  base.x_on_o = {0.9};
  base.u_on_o = 0.6;
  base.seed = 20240915;

  if (name == "paper-internal") {
    base.mechanism = ScenarioDagId::sa_internal;
    base.intercept_a = 1.6;
    base.o_on_a = 1.2;
    base.s_on_a = -1.8;
    base.x_on_a = {-0.6};
    base.u_on_a = 0.0;
    grid.base = base;
    return grid;
  }
  if (name == "paper-external") {
    base.mechanism = ScenarioDagId::sa_external_pr;
    base.covariates = {{"x1", {0.8, 0.2}}};
    base.intercept_a = 2.0;
    base.o_on_a = -1.5;
    base.s_on_a = -1.2;
    base.x_on_a = {-0.8};
    base.u_on_a = -1.0;
    grid.base = base;
    return grid;
  }
  throw std::invalid_argument("unknown preset: " + name + " (try paper-internal, paper-external)");
}

}  // namespace rctmnar
