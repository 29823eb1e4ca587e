#include "rctmnar/stratified_counts.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace rctmnar {

std::string to_string(const StratumKey& key) {
  std::ostringstream out;
  out << "(";
  for (std::size_t i = 0; i < key.values.size(); ++i) {
    if (i) out << ",";
    out << key.values[i];
  }
  out << ")";
  return out.str();
}

bool AdjustmentSpec::has_pa() const {
  for (const auto& c : components)
    if (c.kind == AdjustmentComponent::Kind::pa_bins) return true;
  return false;
}

bool AdjustmentSpec::has_ice() const {
  for (const auto& c : components)
    if (c.kind == AdjustmentComponent::Kind::ice) return true;
  return false;
}

AdjustmentSpec AdjustmentSpec::parse(const std::string& text, int pa_bins) {
  AdjustmentSpec spec;
  spec.pa_bin_count = pa_bins;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    // trim
    const auto b = token.find_first_not_of(" \t");
    const auto e = token.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    token = token.substr(b, e - b + 1);
    if (token == "s" || token == "S") {
      spec.components.push_back(AdjustmentComponent::ice());
    } else if (token == "pa" || token == "PA") {
      spec.components.push_back(AdjustmentComponent::pa_bins());
    } else {
      spec.components.push_back(AdjustmentComponent::covariate(token));
    }
  }
  return spec;
}

std::string AdjustmentSpec::describe() const {
  std::string out;
  for (const auto& c : components) {
    if (!out.empty()) out += ",";
    switch (c.kind) {
      case AdjustmentComponent::Kind::covariate: out += c.name; break;
      case AdjustmentComponent::Kind::ice: out += "s"; break;
      case AdjustmentComponent::Kind::pa_bins: out += "pa"; break;
    }
  }
  return out.empty() ? "(none)" : out;
}

int pa_bin_index(double value, int bins) {
  int idx = static_cast<int>(value * bins);
  if (idx >= bins) idx = bins - 1;
  if (idx < 0) idx = 0;
  return idx;
}

StratifiedCounts StratifiedCounts::build(const TrialDataset& data,
                                         const AdjustmentSpec& adjustment) {
  // Resolve the adjustment against the dataset schema before counting.
  std::vector<int> cov_indices;
  bool wants_pa = false;
  for (const auto& comp : adjustment.components) {
    switch (comp.kind) {
      case AdjustmentComponent::Kind::covariate: {
        const int idx = data.covariate_index(comp.name);
        if (idx < 0) throw std::invalid_argument("unknown covariate in adjustment: " + comp.name);
        cov_indices.push_back(idx);
        break;
      }
      case AdjustmentComponent::Kind::ice:
        cov_indices.push_back(-1);  // sentinel handled below
        break;
      case AdjustmentComponent::Kind::pa_bins:
        wants_pa = true;
        cov_indices.push_back(-2);
        break;
    }
  }
  if (wants_pa) {
    if (data.pa_arity() == PaArity::none)
      throw std::invalid_argument("adjustment requests pa bins but dataset has no pa columns");
    if (adjustment.pa_bin_count < 1)
      throw std::invalid_argument("pa bin count must be >= 1");
  }

  std::vector<std::pair<StratumKey, StratumCells>> strata;
  auto locate = [&strata](const StratumKey& key) -> StratumCells& {
    auto it = std::lower_bound(strata.begin(), strata.end(), key,
                               [](const auto& entry, const StratumKey& k) { return entry.first < k; });
    if (it == strata.end() || it->first != key)
      it = strata.insert(it, {key, StratumCells{}});
    return it->second;
  };

  StratumKey key;
  for (const TrialRecord& r : data.records()) {
    key.values.clear();
    for (int idx : cov_indices) {
      if (idx >= 0) {
        key.values.push_back(r.x[static_cast<std::size_t>(idx)]);
      } else if (idx == -1) {
        key.values.push_back(r.s);
      } else {
        for (double v : r.pa) key.values.push_back(pa_bin_index(v, adjustment.pa_bin_count));
      }
    }
    StratumCells& cells = locate(key);
    if (r.a == 1) {
      ++cells.obs[r.t][*r.o_star];
    } else {
      ++cells.miss[r.t];
    }
  }

  StratifiedCounts counts;
  counts.strata_ = std::move(strata);
  counts.adjustment_ = adjustment;
  for (const auto& [k, cells] : counts.strata_) {
    counts.arm_totals_[0] += cells.arm_total(0);
    counts.arm_totals_[1] += cells.arm_total(1);
  }
  counts.total_ = counts.arm_totals_[0] + counts.arm_totals_[1];
  return counts;
}

StratifiedCounts StratifiedCounts::from_cells(
    std::vector<std::pair<StratumKey, StratumCells>> cells, AdjustmentSpec adjustment) {
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  StratifiedCounts counts;
  counts.strata_ = std::move(cells);
  counts.adjustment_ = std::move(adjustment);
  for (const auto& [k, c] : counts.strata_) {
    counts.arm_totals_[0] += c.arm_total(0);
    counts.arm_totals_[1] += c.arm_total(1);
  }
  counts.total_ = counts.arm_totals_[0] + counts.arm_totals_[1];
  return counts;
}

const StratumCells* StratifiedCounts::find(const StratumKey& key) const {
  auto it = std::lower_bound(strata_.begin(), strata_.end(), key,
                             [](const auto& entry, const StratumKey& k) { return entry.first < k; });
  if (it == strata_.end() || it->first != key) return nullptr;
  return &it->second;
}

StratifiedCounts build_counts(const TrialDataset& data, const AdjustmentSpec& adjustment) {
  return StratifiedCounts::build(data, adjustment);
}

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

bool valid_binary(int v) { return v == 0 || v == 1; }

}  // namespace

std::optional<double> prob(const StratifiedCounts& counts, const ProbabilityQuery& q) {
  using Kind = ProbabilityQuery::Kind;
  if (!valid_binary(q.t) || !valid_binary(q.o) || !valid_binary(q.a))
    throw std::invalid_argument("probability query arguments must be binary");

  if (q.kind == Kind::t_marginal) return ratio(counts.arm_total(q.t), counts.total());

  const StratumCells* c = counts.find(q.w);
  if (q.kind == Kind::w_marginal)
    return ratio(c ? c->total() : 0, counts.total());
  if (q.kind == Kind::w_given_t)
    return ratio(c ? c->arm_total(q.t) : 0, counts.arm_total(q.t));

  // Remaining kinds condition on the stratum; an absent stratum is a
  // zero-count conditioning event.
  if (!c) return std::nullopt;
  switch (q.kind) {
    case Kind::t_given_w:
      return ratio(c->arm_total(q.t), c->total());
    case Kind::t_given_ostar_w:
      return ratio(c->obs[q.t][q.o], c->observed_with_outcome(q.o));
    case Kind::ostar_given_t_w:
      return ratio(c->obs[q.t][q.o], c->arm_observed(q.t));
    case Kind::a_given_t_w:
      return ratio(q.a == 1 ? c->arm_observed(q.t) : c->miss[q.t], c->arm_total(q.t));
    case Kind::a_given_w:
      return ratio(q.a == 1 ? c->observed_total() : c->miss[0] + c->miss[1], c->total());
    default:
      throw std::invalid_argument("malformed probability query");
  }
}

}  // namespace rctmnar
