#include "rctmnar/estimate_report.hpp"

namespace rctmnar {

const char* to_string(Estimand e) {
  switch (e) {
    case Estimand::p_outcome_t0: return "p_outcome_t0";
    case Estimand::p_outcome_t1: return "p_outcome_t1";
    case Estimand::ate: return "ate";
    case Estimand::aclor: return "aclor";
  }
  return "?";
}

const char* to_string(PositivityStatus s) {
  switch (s) {
    case PositivityStatus::ok: return "ok";
    case PositivityStatus::lack_of_data: return "lack_of_data";
    case PositivityStatus::equal_impact: return "equal_impact";
  }
  return "?";
}

}  // namespace rctmnar
