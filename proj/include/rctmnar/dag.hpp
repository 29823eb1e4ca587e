#ifndef RCTMNAR_DAG_HPP
#define RCTMNAR_DAG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rctmnar {

// Directed acyclic graph over named nodes with an observability flag per node.
// Immutable once constructed; construction verifies acyclicity and rejects
// duplicate edges and self-loops.
class Dag {
 public:
  struct Node {
    std::string name;
    bool observed = true;
  };

  Dag(std::vector<Node> nodes, const std::vector<std::pair<std::string, std::string>>& edges);

  int node_index(const std::string& name) const;  // -1 when unknown
  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& parents(int i) const { return parents_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& children(int i) const { return children_[static_cast<std::size_t>(i)]; }
  std::vector<std::string> parent_names(const std::string& node) const;

 private:
  std::vector<Node> nodes_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
};

// True iff zs blocks every path between xs and ys (Bayes-ball reachability).
// The three sets must be pairwise disjoint and name existing nodes.
bool d_separated(const Dag& g, const std::vector<std::string>& xs,
                 const std::vector<std::string>& ys, const std::vector<std::string>& zs);

// The paper's RCT missingness scenarios. Non-PR variants have A wired
// directly to its causes; the _PR variants route all X,U influence on A
// through the potential-response vector node cA.
enum class ScenarioDagId {
  mcar,
  mar,
  oa_internal,
  oa_external,
  sa_internal,
  sa_external,
  oa_external_pr,
  sa_external_pr,
};

const char* to_string(ScenarioDagId id);
ScenarioDagId scenario_dag_id_from_string(const std::string& name);

Dag builtin_dag(ScenarioDagId id);

struct AdjustmentVerdict {
  bool valid = false;
  std::string message;
};

// Checks T ind. A | adjustment + {O} on the scenario DAG. "cA" (or "pa") is
// accepted as the observed propensity proxy for the latent cA node; any other
// unobserved node in the adjustment is an error.
AdjustmentVerdict validate_adjustment(ScenarioDagId id, const std::vector<std::string>& adjustment);

// Text format: one "parent -> child" line per edge, optional line
// "unobserved: U, cA". Comment lines start with '#'.
Dag parse_dag(std::istream& in);
Dag load_dag_file(const std::string& path);

}  // namespace rctmnar

#endif
