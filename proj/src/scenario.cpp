#include "rctmnar/scenario.hpp"

#include <cmath>
#include <stdexcept>

#include "rctmnar/rng.hpp"

namespace rctmnar {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_probs(const CovariateSpec& c) {
  if (c.probs.empty()) throw std::invalid_argument("covariate " + c.name + " has no levels");
  double sum = 0.0;
  for (double p : c.probs) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("covariate " + c.name + " probability out of [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("covariate " + c.name + " probabilities must sum to 1");
}

bool is_external(ScenarioDagId m) {
  return m == ScenarioDagId::oa_external || m == ScenarioDagId::sa_external ||
         m == ScenarioDagId::oa_external_pr || m == ScenarioDagId::sa_external_pr;
}

bool is_pr(ScenarioDagId m) {
  return m == ScenarioDagId::oa_external_pr || m == ScenarioDagId::sa_external_pr;
}

bool s_reaches_a(ScenarioDagId m) {
  return m == ScenarioDagId::mar || m == ScenarioDagId::sa_internal ||
         m == ScenarioDagId::sa_external || m == ScenarioDagId::sa_external_pr;
}

bool o_reaches_a(ScenarioDagId m) {
  return m != ScenarioDagId::mcar && m != ScenarioDagId::mar;
}

bool x_reaches_a(ScenarioDagId m) { return m != ScenarioDagId::mcar; }

}  // namespace

PaArity ScenarioSpec::pa_arity() const {
  if (mechanism == ScenarioDagId::oa_external_pr) return PaArity::two;
  if (mechanism == ScenarioDagId::sa_external_pr) return PaArity::four;
  return PaArity::none;
}

void ScenarioSpec::validate() const {
  if (n < 1) throw std::invalid_argument("sample size must be positive");
  if (!(p_treat > 0.0 && p_treat < 1.0))
    throw std::invalid_argument("p_treat must lie strictly inside (0,1)");
  for (const auto& c : covariates) check_probs(c);
  check_probs(u);
  auto check_len = [this](const std::vector<double>& v, const char* name) {
    if (!v.empty() && v.size() != covariates.size())
      throw std::invalid_argument(std::string(name) + " must have one entry per covariate");
  };
  check_len(x_on_s, "x_on_s");
  check_len(x_on_o, "x_on_o");
  check_len(tx_on_o, "tx_on_o");
  check_len(x_on_a, "x_on_a");
  if (!(pa_noise >= 0.0 && pa_noise < 1.0))
    throw std::invalid_argument("pa_noise must lie in [0,1)");

  // The mechanism's DAG dictates which coefficients may reach A.
  auto forbid = [](double v, const char* what, const char* mech) {
    if (v != 0.0)
      throw std::invalid_argument(std::string(what) + " must be zero under " + mech);
  };
  const char* mech = to_string(mechanism);
  if (!o_reaches_a(mechanism)) forbid(o_on_a, "o_on_a", mech);
  if (!s_reaches_a(mechanism)) forbid(s_on_a, "s_on_a", mech);
  if (!x_reaches_a(mechanism))
    for (double v : x_on_a) forbid(v, "x_on_a", mech);
  if (!is_external(mechanism)) forbid(u_on_a, "u_on_a", mech);
}

namespace {

double dot(const std::vector<double>& coefs, const std::vector<int>& levels) {
  double acc = 0.0;
  for (std::size_t i = 0; i < coefs.size(); ++i) acc += coefs[i] * levels[i];
  return acc;
}

}  // namespace

TrialDataset generate_traced(const ScenarioSpec& spec, GenerationTrace* trace) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0x6765u));

  const PaArity arity = spec.pa_arity();
  const bool pr = is_pr(spec.mechanism);
  std::vector<TrialRecord> records;
  records.reserve(static_cast<std::size_t>(spec.n));
  if (trace) {
    trace->u_level.clear();
    trace->potential_a.clear();
    trace->potential_pa.clear();
  }

  for (std::int64_t i = 0; i < spec.n; ++i) {
    TrialRecord r;
    r.x.reserve(spec.covariates.size());
    for (const auto& c : spec.covariates) r.x.push_back(rng.categorical(c.probs));
    const int u = rng.categorical(spec.u.probs);
    r.t = rng.bernoulli(spec.p_treat) ? 1 : 0;

    const double eta_s = spec.intercept_s + spec.effect_t_on_s * r.t + dot(spec.x_on_s, r.x) +
                         spec.u_on_s * u;
    r.s = rng.bernoulli(sigmoid(eta_s)) ? 1 : 0;

    double eta_o = spec.intercept_o + spec.effect_t_on_o * r.t + spec.effect_s_on_o * r.s +
                   dot(spec.x_on_o, r.x) + spec.u_on_o * u;
    if (r.t == 1) eta_o += dot(spec.tx_on_o, r.x);
    const int o = rng.bernoulli(sigmoid(eta_o)) ? 1 : 0;
    r.o_true = o;

    // Availability log-odds as a function of the (s, o) scenario; the
    // mechanism's zero constraints were enforced by validate().
    auto eta_a = [&](int s_val, int o_val) {
      return spec.intercept_a + spec.o_on_a * o_val + spec.s_on_a * s_val +
             dot(spec.x_on_a, r.x) + spec.u_on_a * u;
    };

    if (pr) {
      // Draw every potential response A^{so}, then let the consistency
      // formula pick the one matching the realized (S, O).
      std::array<double, 4> pa{};
      std::array<int, 4> draws{};
      for (int o_val = 0; o_val < 2; ++o_val)
        for (int s_val = 0; s_val < 2; ++s_val) {
          const int idx = s_val + 2 * o_val;
          pa[idx] = sigmoid(eta_a(s_val, o_val));
          draws[idx] = rng.bernoulli(pa[idx]) ? 1 : 0;
        }
      r.a = draws[r.s + 2 * o];
      if (arity == PaArity::four) {
        r.pa = {pa[0], pa[1], pa[2], pa[3]};
      } else {
        // OA: s does not reach A, so pA^{0o} = pA^{1o}; report (pA^0, pA^1).
        r.pa = {pa[0], pa[2]};
      }
      if (spec.pa_noise > 0.0) {
        for (double& v : r.pa) {
          const double factor = 1.0 + spec.pa_noise * (2.0 * rng.next_double() - 1.0);
          v = std::min(1.0, std::max(0.0, v * factor));
        }
      }
      if (trace) {
        trace->potential_a.push_back(draws);
        trace->potential_pa.push_back(pa);
      }
    } else {
      r.a = rng.bernoulli(sigmoid(eta_a(r.s, o))) ? 1 : 0;
      if (trace) {
        trace->potential_a.push_back({0, 0, 0, 0});
        trace->potential_pa.push_back({0.0, 0.0, 0.0, 0.0});
      }
    }

    if (r.a == 1) r.o_star = o;
    if (trace) trace->u_level.push_back(u);
    records.push_back(std::move(r));
  }

  std::vector<std::string> names;
  for (const auto& c : spec.covariates) names.push_back(c.name);
  return TrialDataset(std::move(records), std::move(names), arity);
}

TrialDataset generate(const ScenarioSpec& spec) { return generate_traced(spec, nullptr); }

std::string default_adjustment_for(ScenarioDagId mechanism,
                                   const std::vector<CovariateSpec>& covariates) {
  std::string xs;
  for (const auto& c : covariates) {
    if (!xs.empty()) xs += ",";
    xs += c.name;
  }
  switch (mechanism) {
    case ScenarioDagId::mcar:
      return "";
    case ScenarioDagId::mar:
    case ScenarioDagId::sa_internal:
    case ScenarioDagId::sa_external:
      return xs.empty() ? "s" : xs + ",s";
    case ScenarioDagId::oa_internal:
    case ScenarioDagId::oa_external:
      return xs;
    case ScenarioDagId::oa_external_pr:
      return "pa";
    case ScenarioDagId::sa_external_pr:
      return "pa,s";
  }
  return xs;
}

}  // namespace rctmnar
