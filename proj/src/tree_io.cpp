#include <cmath>
#include <set>

#include "nntree/errors.hpp"
#include "nntree/tree.hpp"
#include "nntree/weights_io.hpp"

namespace nntree {
namespace {

using json = nlohmann::ordered_json;

constexpr int kTreeVersion = 1;

json reals(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

std::vector<double> reals_from(const json& j, const std::string& field) {
  if (!j.is_array()) throw SchemaError(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number() || !std::isfinite(j[i].get<double>())) {
      throw SchemaError(field + "[" + std::to_string(i) + "]", "expected a finite number");
    }
    out.push_back(j[i].get<double>());
  }
  return out;
}

int int_from(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw SchemaError(field, "expected an integer");
  return j.get<int>();
}

const json& need(const json& j, const char* key, const std::string& field) {
  if (!j.is_object()) throw SchemaError(field, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(field + "." + key, "missing field");
  return *it;
}

Feasibility feasibility_from(const json& j, const std::string& field) {
  const std::string s = j.is_string() ? j.get<std::string>() : std::string();
  if (s == "unknown") return Feasibility::unknown;
  if (s == "feasible") return Feasibility::feasible;
  if (s == "infeasible") return Feasibility::infeasible;
  throw SchemaError(field, "expected unknown/feasible/infeasible");
}

}  // namespace

json tree_to_json(const DecisionTree& tree) {
  const int node_count = static_cast<int>(tree.nodes.size());
  auto id_of = [&](ChildRef ref) -> json {
    if (ref.is_node()) return ref.index;
    if (ref.is_leaf()) return node_count + ref.index;
    return nullptr;
  };

  json doc;
  doc["format"] = "nntree-tree";
  doc["version"] = kTreeVersion;
  doc["k"] = tree.k;
  doc["d"] = tree.depth;
  doc["widths"] = tree.widths;
  doc["input_dim"] = tree.input_dim;
  doc["output_dim"] = tree.output_dim;
  doc["output_activation"] =
      tree.output_activation == OutputActivation::sigmoid ? "sigmoid" : "none";
  doc["pruned"] = tree.pruned;
  doc["lossy"] = tree.lossy;
  if (tree.domain) {
    doc["domain"] = {{"lo", tree.domain->lo}, {"hi", tree.domain->hi}};
  } else {
    doc["domain"] = nullptr;
  }
  doc["root"] = id_of(tree.root);

  json nodes = json::array();
  for (int i = 0; i < node_count; ++i) {
    const DecisionNode& n = tree.nodes[i];
    json j;
    j["id"] = i;
    j["layer"] = n.layer;
    j["unit"] = n.unit;
    j["step"] = n.step;
    j["filter"] = reals(n.filter);
    j["breakpoints"] = n.breakpoints;
    json children = json::array();
    for (const ChildRef& c : n.children) children.push_back(id_of(c));
    j["children"] = std::move(children);
    if (n.rule_1d) {
      j["rule_1d"] = {{"thresholds", n.rule_1d->thresholds},
                      {"increasing", n.rule_1d->increasing}};
    }
    nodes.push_back(std::move(j));
  }
  doc["nodes"] = std::move(nodes);

  json leaves = json::array();
  for (std::size_t i = 0; i < tree.leaves.size(); ++i) {
    const LeafNode& l = tree.leaves[i];
    json j;
    j["id"] = node_count + static_cast<int>(i);
    json data = json::array();
    for (Eigen::Index r = 0; r < l.final_map.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.final_map.cols(); ++c) data.push_back(l.final_map(r, c));
    }
    j["final_map"] = {{"rows", l.final_map.rows()}, {"cols", l.final_map.cols()},
                      {"data", std::move(data)}};
    j["category"] = l.category.patterns;
    j["feasibility"] = to_string(l.feasibility);
    j["degenerate"] = l.degenerate;
    j["realized_count"] = l.realized_count;
    j["witness"] = l.witness ? reals(*l.witness) : json(nullptr);
    leaves.push_back(std::move(j));
  }
  doc["leaves"] = std::move(leaves);
  return doc;
}

DecisionTree tree_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("<document>", "expected a JSON object");
  if (int_from(need(doc, "version", "<document>"), "version") != kTreeVersion) {
    throw SchemaError("version", "unsupported tree version");
  }
  DecisionTree tree;
  tree.k = int_from(need(doc, "k", "<document>"), "k");
  tree.depth = int_from(need(doc, "d", "<document>"), "d");
  tree.input_dim = int_from(need(doc, "input_dim", "<document>"), "input_dim");
  tree.output_dim = int_from(need(doc, "output_dim", "<document>"), "output_dim");
  if (tree.input_dim < 1 || tree.output_dim < 1) {
    throw SchemaError("input_dim", "dimensions must be positive");
  }
  const json& widths = need(doc, "widths", "<document>");
  if (!widths.is_array()) throw SchemaError("widths", "expected an array");
  for (std::size_t i = 0; i < widths.size(); ++i) {
    tree.widths.push_back(int_from(widths[i], "widths[" + std::to_string(i) + "]"));
  }
  if (doc.contains("output_activation") && doc["output_activation"] == "sigmoid") {
    tree.output_activation = OutputActivation::sigmoid;
  }
  if (doc.contains("pruned")) tree.pruned = doc["pruned"].get<bool>();
  if (doc.contains("lossy")) tree.lossy = doc["lossy"].get<bool>();
  if (doc.contains("domain") && !doc["domain"].is_null()) {
    DomainBox box{reals_from(need(doc["domain"], "lo", "domain"), "domain.lo"),
                  reals_from(need(doc["domain"], "hi", "domain"), "domain.hi")};
    if (box.dims() != tree.input_dim || static_cast<int>(box.hi.size()) != tree.input_dim) {
      throw SchemaError("domain", "bounds must match input_dim");
    }
    tree.domain = std::move(box);
  }

  const json& nodes = need(doc, "nodes", "<document>");
  const json& leaves = need(doc, "leaves", "<document>");
  if (!nodes.is_array() || !leaves.is_array()) {
    throw SchemaError("<document>", "nodes and leaves must be arrays");
  }
  const int node_count = static_cast<int>(nodes.size());
  const int leaf_count = static_cast<int>(leaves.size());

  std::set<int> referenced;
  auto ref_from = [&](const json& j, const std::string& field) -> ChildRef {
    if (j.is_null()) return ChildRef::none();
    const int id = int_from(j, field);
    if (id < 0 || id >= node_count + leaf_count) {
      throw SchemaError(field, "child id " + std::to_string(id) + " does not exist");
    }
    if (!referenced.insert(id).second) {
      throw SchemaError(field, "id " + std::to_string(id) + " is referenced twice");
    }
    return id < node_count ? ChildRef::node(id) : ChildRef::leaf(id - node_count);
  };

  tree.root = ref_from(need(doc, "root", "<document>"), "root");
  if (tree.root.is_none()) throw SchemaError("root", "tree has no root");

  for (int i = 0; i < node_count; ++i) {
    const std::string field = "nodes[" + std::to_string(i) + "]";
    const json& j = nodes[i];
    if (int_from(need(j, "id", field), field + ".id") != i) {
      throw SchemaError(field + ".id", "node ids must be consecutive from 0");
    }
    DecisionNode n;
    n.layer = int_from(need(j, "layer", field), field + ".layer");
    n.unit = int_from(need(j, "unit", field), field + ".unit");
    if (j.contains("step")) n.step = int_from(j["step"], field + ".step");
    const auto filter = reals_from(need(j, "filter", field), field + ".filter");
    if (static_cast<int>(filter.size()) != tree.input_dim + 1) {
      throw SchemaError(field + ".filter", "expected input_dim + 1 entries");
    }
    n.filter = Eigen::Map<const Vector>(filter.data(), filter.size());
    n.breakpoints = reals_from(need(j, "breakpoints", field), field + ".breakpoints");
    for (std::size_t b = 1; b < n.breakpoints.size(); ++b) {
      if (!(n.breakpoints[b - 1] < n.breakpoints[b])) {
        throw SchemaError(field + ".breakpoints", "must be strictly increasing");
      }
    }
    const json& children = need(j, "children", field);
    if (!children.is_array() || children.size() != n.breakpoints.size() + 1) {
      throw SchemaError(field + ".children", "expected one child per region");
    }
    for (std::size_t c = 0; c < children.size(); ++c) {
      n.children.push_back(
          ref_from(children[c], field + ".children[" + std::to_string(c) + "]"));
    }
    if (j.contains("rule_1d")) {
      Rule1d rule;
      rule.thresholds = reals_from(need(j["rule_1d"], "thresholds", field + ".rule_1d"),
                                   field + ".rule_1d.thresholds");
      rule.increasing = need(j["rule_1d"], "increasing", field + ".rule_1d").get<bool>();
      if (rule.thresholds.size() != n.breakpoints.size() || tree.input_dim != 1) {
        throw SchemaError(field + ".rule_1d", "inconsistent with node breakpoints");
      }
      n.rule_1d = std::move(rule);
    }
    tree.nodes.push_back(std::move(n));
  }

  for (int i = 0; i < leaf_count; ++i) {
    const std::string field = "leaves[" + std::to_string(i) + "]";
    const json& j = leaves[i];
    if (int_from(need(j, "id", field), field + ".id") != node_count + i) {
      throw SchemaError(field + ".id", "leaf ids must follow node ids consecutively");
    }
    LeafNode l;
    const json& fm = need(j, "final_map", field);
    const int rows = int_from(need(fm, "rows", field + ".final_map"), field + ".final_map.rows");
    const int cols = int_from(need(fm, "cols", field + ".final_map"), field + ".final_map.cols");
    if (rows != tree.output_dim + 1 || cols != tree.input_dim + 1) {
      throw SchemaError(field + ".final_map", "expected (output_dim+1) x (input_dim+1)");
    }
    const auto data = reals_from(need(fm, "data", field + ".final_map"), field + ".final_map.data");
    if (data.size() != static_cast<std::size_t>(rows) * cols) {
      throw SchemaError(field + ".final_map.data", "size does not match rows * cols");
    }
    l.final_map.resize(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) l.final_map(r, c) = data[static_cast<std::size_t>(r) * cols + c];
    }
    for (int c = 0; c < cols; ++c) {
      if (l.final_map(rows - 1, c) != (c == cols - 1 ? 1.0 : 0.0)) {
        throw SchemaError(field + ".final_map", "last row must be [0 ... 0 1]");
      }
    }
    const json& cat = need(j, "category", field);
    if (!cat.is_array()) throw SchemaError(field + ".category", "expected an array");
    for (const json& p : cat) {
      if (!p.is_array()) throw SchemaError(field + ".category", "expected arrays of regions");
      ActivationPattern pattern;
      for (const json& r : p) pattern.push_back(int_from(r, field + ".category"));
      l.category.patterns.push_back(std::move(pattern));
    }
    if (j.contains("feasibility")) {
      l.feasibility = feasibility_from(j["feasibility"], field + ".feasibility");
    }
    if (j.contains("degenerate")) l.degenerate = j["degenerate"].get<bool>();
    if (j.contains("realized_count")) {
      l.realized_count = need(j, "realized_count", field).get<long>();
    }
    if (j.contains("witness") && !j["witness"].is_null()) {
      const auto w = reals_from(j["witness"], field + ".witness");
      l.witness = Eigen::Map<const Vector>(w.data(), w.size());
    }
    tree.leaves.push_back(std::move(l));
  }

  if (static_cast<int>(referenced.size()) != node_count + leaf_count) {
    for (int id = 0; id < node_count + leaf_count; ++id) {
      if (!referenced.contains(id)) {
        const std::string field = id < node_count ? "nodes[" + std::to_string(id) + "]"
                                                  : "leaves[" + std::to_string(id - node_count) + "]";
        throw SchemaError(field, "unreachable from the root");
      }
    }
  }
  if (tree.root.is_node() && tree.root.index != 0) {
    throw SchemaError("root", "root must be node 0");
  }
  return tree;
}

std::string export_json(const DecisionTree& tree) { return tree_to_json(tree).dump(2) + "\n"; }

DecisionTree parse_tree(const std::string& text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw SchemaError("<document>", e.what());
  }
  try {
    return tree_from_json(doc);
  } catch (const nlohmann::ordered_json::exception& e) {
    throw SchemaError("<document>", e.what());
  }
}

void save_tree(const DecisionTree& tree, const std::filesystem::path& path) {
  write_text_file(path, export_json(tree));
}

DecisionTree import_json(const std::filesystem::path& path) {
  return parse_tree(read_text_file(path));
}

}  // namespace nntree
