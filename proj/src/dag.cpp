#include "rctmnar/dag.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rctmnar {

Dag::Dag(std::vector<Node> nodes, const std::vector<std::pair<std::string, std::string>>& edges)
    : nodes_(std::move(nodes)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    for (std::size_t j = i + 1; j < nodes_.size(); ++j)
      if (nodes_[i].name == nodes_[j].name)
        throw std::invalid_argument("duplicate node name: " + nodes_[i].name);

  parents_.assign(nodes_.size(), {});
  children_.assign(nodes_.size(), {});
  std::set<std::pair<int, int>> seen;
  for (const auto& [from, to] : edges) {
    const int u = node_index(from);
    const int v = node_index(to);
    if (u < 0) throw std::invalid_argument("edge references unknown node: " + from);
    if (v < 0) throw std::invalid_argument("edge references unknown node: " + to);
    if (u == v) throw std::invalid_argument("self-loop on node: " + from);
    if (!seen.insert({u, v}).second)
      throw std::invalid_argument("duplicate edge: " + from + " -> " + to);
    children_[static_cast<std::size_t>(u)].push_back(v);
    parents_[static_cast<std::size_t>(v)].push_back(u);
  }

  // Kahn topological sort to verify acyclicity.
  std::vector<int> indeg(nodes_.size(), 0);
  for (std::size_t v = 0; v < nodes_.size(); ++v)
    indeg[v] = static_cast<int>(parents_[v].size());
  std::queue<int> ready;
  for (std::size_t v = 0; v < nodes_.size(); ++v)
    if (indeg[v] == 0) ready.push(static_cast<int>(v));
  std::size_t emitted = 0;
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop();
    ++emitted;
    for (int c : children_[static_cast<std::size_t>(v)])
      if (--indeg[static_cast<std::size_t>(c)] == 0) ready.push(c);
  }
  if (emitted != nodes_.size()) throw std::invalid_argument("graph contains a cycle");
}

int Dag::node_index(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> Dag::parent_names(const std::string& node) const {
  const int v = node_index(node);
  if (v < 0) throw std::invalid_argument("unknown node: " + node);
  std::vector<std::string> out;
  for (int p : parents(v)) out.push_back(nodes_[static_cast<std::size_t>(p)].name);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<int> resolve(const Dag& g, const std::vector<std::string>& names) {
  std::vector<int> out;
  for (const auto& n : names) {
    const int idx = g.node_index(n);
    if (idx < 0) throw std::invalid_argument("unknown node: " + n);
    out.push_back(idx);
  }
  return out;
}

}  // namespace

bool d_separated(const Dag& g, const std::vector<std::string>& xs,
                 const std::vector<std::string>& ys, const std::vector<std::string>& zs) {
  const std::vector<int> x = resolve(g, xs);
  const std::vector<int> y = resolve(g, ys);
  const std::vector<int> z = resolve(g, zs);

  std::vector<char> in_x(g.node_count(), 0), in_y(g.node_count(), 0), in_z(g.node_count(), 0);
  for (int v : x) in_x[static_cast<std::size_t>(v)] = 1;
  for (int v : y) in_y[static_cast<std::size_t>(v)] = 1;
  for (int v : z) in_z[static_cast<std::size_t>(v)] = 1;
  for (std::size_t v = 0; v < g.node_count(); ++v)
    if (in_x[v] + in_y[v] + in_z[v] > 1)
      throw std::invalid_argument("query sets must be pairwise disjoint");

  // Bayes ball. State is (node, direction of arrival): arriving "from child"
  // means the ball is travelling against an edge, "from parent" along one.
  //   from child,  v not in Z:  pass to parents (from child) and children (from parent)
  //   from child,  v in Z:      blocked
  //   from parent, v in Z:      bounce to parents (opened collider)
  //   from parent, v not in Z:  pass to children
  // Descendant-of-collider opening emerges from the bounce rule.
  enum { kFromChild = 0, kFromParent = 1 };
  std::vector<std::array<char, 2>> visited(g.node_count(), {0, 0});
  std::queue<std::pair<int, int>> frontier;
  for (int v : x) frontier.push({v, kFromChild});

  while (!frontier.empty()) {
    const auto [v, dir] = frontier.front();
    frontier.pop();
    auto& mark = visited[static_cast<std::size_t>(v)][static_cast<std::size_t>(dir)];
    if (mark) continue;
    mark = 1;
    if (in_y[static_cast<std::size_t>(v)]) return false;

    const bool conditioned = in_z[static_cast<std::size_t>(v)] != 0;
    if (dir == kFromChild) {
      if (!conditioned) {
        for (int p : g.parents(v)) frontier.push({p, kFromChild});
        for (int c : g.children(v)) frontier.push({c, kFromParent});
      }
    } else {
      if (conditioned) {
        for (int p : g.parents(v)) frontier.push({p, kFromChild});
      } else {
        for (int c : g.children(v)) frontier.push({c, kFromParent});
      }
    }
  }
  return true;
}

const char* to_string(ScenarioDagId id) {
  switch (id) {
    case ScenarioDagId::mcar: return "mcar";
    case ScenarioDagId::mar: return "mar";
    case ScenarioDagId::oa_internal: return "oa_internal";
    case ScenarioDagId::oa_external: return "oa_external";
    case ScenarioDagId::sa_internal: return "sa_internal";
    case ScenarioDagId::sa_external: return "sa_external";
    case ScenarioDagId::oa_external_pr: return "oa_external_pr";
    case ScenarioDagId::sa_external_pr: return "sa_external_pr";
  }
  return "?";
}

ScenarioDagId scenario_dag_id_from_string(const std::string& name) {
  for (ScenarioDagId id :
       {ScenarioDagId::mcar, ScenarioDagId::mar, ScenarioDagId::oa_internal,
        ScenarioDagId::oa_external, ScenarioDagId::sa_internal, ScenarioDagId::sa_external,
        ScenarioDagId::oa_external_pr, ScenarioDagId::sa_external_pr})
    if (name == to_string(id)) return id;
  throw std::invalid_argument("unknown scenario: " + name);
}

Dag builtin_dag(ScenarioDagId id) {
  const bool pr = id == ScenarioDagId::oa_external_pr || id == ScenarioDagId::sa_external_pr;
  std::vector<Dag::Node> nodes = {
      {"T", true}, {"S", true}, {"O", true}, {"X", true}, {"U", false}, {"A", true},
  };
  if (pr) nodes.push_back({"cA", false});

  // Common RCT structure: randomized T, ICE S, outcome O, observed and
  // unobserved confounders between S and O.
  std::vector<std::pair<std::string, std::string>> edges = {
      {"T", "O"}, {"T", "S"}, {"S", "O"}, {"X", "S"}, {"X", "O"}, {"U", "S"}, {"U", "O"},
  };
  switch (id) {
    case ScenarioDagId::mcar:
      break;  // nothing reaches A
    case ScenarioDagId::mar:
      edges.push_back({"S", "A"});
      edges.push_back({"X", "A"});
      break;
    case ScenarioDagId::oa_internal:
      edges.push_back({"O", "A"});
      edges.push_back({"X", "A"});
      break;
    case ScenarioDagId::oa_external:
      edges.push_back({"O", "A"});
      edges.push_back({"X", "A"});
      edges.push_back({"U", "A"});
      break;
    case ScenarioDagId::sa_internal:
      edges.push_back({"O", "A"});
      edges.push_back({"S", "A"});
      edges.push_back({"X", "A"});
      break;
    case ScenarioDagId::sa_external:
      edges.push_back({"O", "A"});
      edges.push_back({"S", "A"});
      edges.push_back({"X", "A"});
      edges.push_back({"U", "A"});
      break;
    case ScenarioDagId::oa_external_pr:
      edges.push_back({"O", "A"});
      edges.push_back({"X", "cA"});
      edges.push_back({"U", "cA"});
      edges.push_back({"cA", "A"});
      break;
    case ScenarioDagId::sa_external_pr:
      edges.push_back({"O", "A"});
      edges.push_back({"S", "A"});
      edges.push_back({"X", "cA"});
      edges.push_back({"U", "cA"});
      edges.push_back({"cA", "A"});
      break;
  }
  return Dag(std::move(nodes), edges);
}

AdjustmentVerdict validate_adjustment(ScenarioDagId id,
                                      const std::vector<std::string>& adjustment) {
  const Dag g = builtin_dag(id);
  std::vector<std::string> conditioning;
  for (const std::string& raw : adjustment) {
    // The elicited propensities stand in for the latent potential-response
    // vector (propensity-score argument, not a graph transformation).
    const std::string name = (raw == "pa") ? "cA" : raw;
    const int idx = g.node_index(name);
    if (idx < 0)
      throw std::invalid_argument("adjustment node not in scenario DAG: " + raw);
    if (!g.node(idx).observed && name != "cA")
      throw std::invalid_argument("adjustment contains unobserved node: " + raw);
    conditioning.push_back(name);
  }
  conditioning.push_back("O");

  AdjustmentVerdict verdict;
  verdict.valid = d_separated(g, {"T"}, {"A"}, conditioning);
  std::ostringstream msg;
  msg << "T " << (verdict.valid ? "_||_" : "~_||_") << " A | {";
  for (std::size_t i = 0; i < conditioning.size(); ++i) {
    if (i) msg << ",";
    msg << conditioning[i];
  }
  msg << "} in scenario " << to_string(id);
  verdict.message = msg.str();
  return verdict;
}

Dag parse_dag(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> unobserved;
  std::vector<std::string> order;  // first-appearance order of node names

  auto note_node = [&order](const std::string& n) {
    if (std::find(order.begin(), order.end(), n) == order.end()) order.push_back(n);
  };
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };

  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("unobserved:", 0) == 0) {
      std::stringstream list(line.substr(11));
      std::string name;
      while (std::getline(list, name, ',')) {
        name = trim(name);
        if (!name.empty()) unobserved.push_back(name);
      }
      continue;
    }
    const auto arrow = line.find("->");
    if (arrow == std::string::npos)
      throw std::invalid_argument("expected 'parent -> child' line, got: " + line);
    const std::string from = trim(line.substr(0, arrow));
    const std::string to = trim(line.substr(arrow + 2));
    if (from.empty() || to.empty())
      throw std::invalid_argument("malformed edge line: " + line);
    note_node(from);
    note_node(to);
    edges.emplace_back(from, to);
  }
  for (const auto& u : unobserved) note_node(u);

  std::vector<Dag::Node> nodes;
  for (const auto& name : order) {
    const bool hidden = std::find(unobserved.begin(), unobserved.end(), name) != unobserved.end();
    nodes.push_back({name, !hidden});
  }
  return Dag(std::move(nodes), edges);
}

Dag load_dag_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open DAG file: " + path);
  return parse_dag(in);
}

}  // namespace rctmnar
