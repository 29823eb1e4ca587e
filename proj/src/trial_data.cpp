#include "rctmnar/trial_data.hpp"

namespace rctmnar {

namespace {

bool is_binary(int v) { return v == 0 || v == 1; }

}  // namespace

TrialDataset::TrialDataset(std::vector<TrialRecord> records,
                           std::vector<std::string> covariate_names, PaArity pa_arity)
    : records_(std::move(records)),
      covariate_names_(std::move(covariate_names)),
      pa_arity_(pa_arity) {
  if (records_.empty()) throw std::invalid_argument("dataset must contain at least one record");
  const std::size_t n_cov = covariate_names_.size();
  const std::size_t n_pa = static_cast<std::size_t>(pa_arity_);
  has_o_true_ = records_.front().o_true.has_value();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const TrialRecord& r = records_[i];
    const std::string at = " at record " + std::to_string(i);
    if (!is_binary(r.t) || !is_binary(r.s) || !is_binary(r.a))
      throw std::invalid_argument("t, s, a must be binary" + at);
    if (r.o_star.has_value() != (r.a == 1))
      throw std::invalid_argument("o_star must be present iff a == 1" + at);
    if (r.o_star && !is_binary(*r.o_star))
      throw std::invalid_argument("o_star must be binary" + at);
    if (r.o_true && !is_binary(*r.o_true))
      throw std::invalid_argument("o_true must be binary" + at);
    if (r.x.size() != n_cov)
      throw std::invalid_argument("covariate arity mismatch" + at);
    if (r.pa.size() != n_pa)
      throw std::invalid_argument("pa arity mismatch" + at);
    for (double v : r.pa)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("pa entries must lie in [0,1]" + at);
    if (r.o_true.has_value() != has_o_true_)
      throw std::invalid_argument("o_true must be present on all records or none" + at);
  }
}

int TrialDataset::covariate_index(const std::string& name) const {
  for (std::size_t i = 0; i < covariate_names_.size(); ++i)
    if (covariate_names_[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace rctmnar
