#ifndef TREECUT_REGION_TREE_HPP
#define TREECUT_REGION_TREE_HPP

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "treecut/cut.hpp"
#include "treecut/errors.hpp"
#include "treecut/image.hpp"
#include "treecut/numeric.hpp"

namespace treecut {

struct RegionNode {
  int id = 0;
  std::optional<int> parent;
  std::vector<int> children;     // node ids, kept sorted ascending
  std::vector<int> superpixels;  // governed superpixel ids, sorted ascending
  std::optional<double> ucm_weight;

  bool is_leaf() const { return children.empty(); }
};

// Rooted tree whose leaves are superpixels. Construction validates every
// structural invariant and pins down traversal order, after which the tree
// is immutable.
class RegionTree {
 public:
  RegionTree(std::vector<RegionNode> nodes, int root_id)
      : nodes_(std::move(nodes)), root_id_(root_id) {
    finalize();
  }

  int size() const { return static_cast<int>(nodes_.size()); }
  int root_id() const { return root_id_; }
  int root_index() const { return index_.at(root_id_); }
  const std::vector<RegionNode>& nodes() const { return nodes_; }
  const RegionNode& node(int index) const { return nodes_[index]; }

  int index_of(int id) const {
    auto it = index_.find(id);
    if (it == index_.end())
      throw std::invalid_argument("region tree: unknown node id " + std::to_string(id));
    return it->second;
  }
  bool has_id(int id) const { return index_.count(id) > 0; }

  // Child indexes of the node at `index`, matching node(index).children.
  const std::vector<int>& children_of(int index) const { return child_index_[index]; }

  // Every child index appears before its parent.
  const std::vector<int>& post_order() const { return post_order_; }

  int num_leaves() const { return num_leaves_; }
  int num_superpixels() const {
    return static_cast<int>(nodes_[root_index()].superpixels.size());
  }

 private:
  void finalize() {
    if (nodes_.empty()) throw ValidationError("region tree: no nodes");
    index_.reserve(nodes_.size());
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
      auto& n = nodes_[i];
      if (!index_.emplace(n.id, i).second)
        throw ValidationError("region tree: duplicate node id " + std::to_string(n.id));
      std::sort(n.children.begin(), n.children.end());
      std::sort(n.superpixels.begin(), n.superpixels.end());
    }
    if (!index_.count(root_id_))
      throw ValidationError("region tree: root id " + std::to_string(root_id_) +
                            " not present");
    if (nodes_[index_.at(root_id_)].parent)
      throw ValidationError("region tree: root node " + std::to_string(root_id_) +
                            " has a parent");

    child_index_.resize(nodes_.size());
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
      const auto& n = nodes_[i];
      if (n.id != root_id_) {
        if (!n.parent)
          throw ValidationError("region tree: non-root node " + std::to_string(n.id) +
                                " has no parent");
        auto pit = index_.find(*n.parent);
        if (pit == index_.end())
          throw ValidationError("region tree: node " + std::to_string(n.id) +
                                " names missing parent " + std::to_string(*n.parent));
        const auto& pc = nodes_[pit->second].children;
        if (!std::binary_search(pc.begin(), pc.end(), n.id))
          throw ValidationError("region tree: node " + std::to_string(n.id) +
                                " is not listed among its parent's children");
      }
      if (n.children.size() == 1)
        throw ValidationError("region tree: internal node " + std::to_string(n.id) +
                              " has exactly one child");
      if (n.is_leaf() && n.superpixels.size() != 1)
        throw ValidationError("region tree: leaf node " + std::to_string(n.id) +
                              " must govern exactly one superpixel, has " +
                              std::to_string(n.superpixels.size()));
      child_index_[i].reserve(n.children.size());
      for (int cid : n.children) {
        auto cit = index_.find(cid);
        if (cit == index_.end())
          throw ValidationError("region tree: node " + std::to_string(n.id) +
                                " names missing child " + std::to_string(cid));
        const auto& c = nodes_[cit->second];
        if (!c.parent || *c.parent != n.id)
          throw ValidationError("region tree: child " + std::to_string(cid) +
                                " does not name " + std::to_string(n.id) +
                                " as its parent");
        child_index_[i].push_back(cit->second);
      }
    }

    // Reachability doubles as the cycle check: every node must be visited
    // exactly once walking down from the root.
    post_order_.reserve(nodes_.size());
    std::vector<char> visited(nodes_.size(), 0);
    std::vector<std::pair<int, std::size_t>> stack{{root_index(), 0}};
    visited[root_index()] = 1;
    while (!stack.empty()) {
      auto& [idx, next_child] = stack.back();
      if (next_child < child_index_[idx].size()) {
        const int c = child_index_[idx][next_child++];
        if (visited[c])
          throw ValidationError("region tree: node " + std::to_string(nodes_[c].id) +
                                " reachable twice (cycle or shared child)");
        visited[c] = 1;
        stack.push_back({c, 0});
      } else {
        post_order_.push_back(idx);
        stack.pop_back();
      }
    }
    if (post_order_.size() != nodes_.size())
      throw ValidationError("region tree: " +
                            std::to_string(nodes_.size() - post_order_.size()) +
                            " node(s) unreachable from the root");

    // Each node's superpixel set must be the disjoint union of its
    // children's sets; leaves carry singletons, so the root set follows.
    num_leaves_ = 0;
    for (int idx : post_order_) {
      const auto& n = nodes_[idx];
      if (n.is_leaf()) {
        ++num_leaves_;
        continue;
      }
      std::vector<int> merged;
      for (int c : child_index_[idx]) {
        const auto& cs = nodes_[c].superpixels;
        merged.insert(merged.end(), cs.begin(), cs.end());
      }
      std::sort(merged.begin(), merged.end());
      if (std::adjacent_find(merged.begin(), merged.end()) != merged.end())
        throw ValidationError("region tree: children of node " + std::to_string(n.id) +
                              " overlap in superpixels");
      if (merged != n.superpixels)
        throw ValidationError("region tree: node " + std::to_string(n.id) +
                              " does not govern the union of its children");
    }
  }

  std::vector<RegionNode> nodes_;
  int root_id_;
  std::unordered_map<int, int> index_;
  std::vector<std::vector<int>> child_index_;
  std::vector<int> post_order_;
  int num_leaves_ = 0;
};

inline bool operator==(const RegionTree& a, const RegionTree& b) {
  if (a.root_id() != b.root_id() || a.size() != b.size()) return false;
  for (const auto& n : a.nodes()) {
    if (!b.has_id(n.id)) return false;
    const auto& m = b.node(b.index_of(n.id));
    if (n.parent != m.parent || n.children != m.children ||
        n.superpixels != m.superpixels || n.ucm_weight != m.ucm_weight)
      return false;
  }
  return true;
}

// The tree's leaves must partition exactly the superpixel ids 0..S-1 of the
// map it is paired with.
inline void check_tree_matches(const RegionTree& tree, const SuperpixelMap& sp) {
  const auto& governed = tree.node(tree.root_index()).superpixels;
  if (static_cast<int>(governed.size()) != sp.num_superpixels)
    throw std::invalid_argument("tree governs " + std::to_string(governed.size()) +
                                " superpixels but map has " +
                                std::to_string(sp.num_superpixels));
  for (int i = 0; i < sp.num_superpixels; ++i)
    if (governed[i] != i)
      throw std::invalid_argument("tree superpixel ids are not 0..S-1");
}

// ---- JSON (de)serialization -------------------------------------------
//
// Schema: { "root": id, "nodes": [ { "id": int, "parent": int|null,
//           "children": [int], "superpixels": [int],
//           "ucm_weight": float|null } ] }

inline RegionTree import_tree(const std::string& document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("tree document: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("root") || !doc.contains("nodes") ||
      !doc["root"].is_number_integer() || !doc["nodes"].is_array())
    throw ValidationError("tree document: expected object with 'root' and 'nodes'");
  std::vector<RegionNode> nodes;
  nodes.reserve(doc["nodes"].size());
  for (const auto& jn : doc["nodes"]) {
    if (!jn.is_object() || !jn.contains("id") || !jn.contains("parent") ||
        !jn.contains("children") || !jn.contains("superpixels") ||
        !jn.contains("ucm_weight"))
      throw ValidationError("tree document: node missing a required field");
    RegionNode n;
    if (!jn["id"].is_number_integer())
      throw ValidationError("tree document: node id must be an integer");
    n.id = jn["id"].get<int>();
    const std::string where = "tree document: node " + std::to_string(n.id);
    if (jn["parent"].is_number_integer())
      n.parent = jn["parent"].get<int>();
    else if (!jn["parent"].is_null())
      throw ValidationError(where + ": parent must be int or null");
    if (!jn["children"].is_array() || !jn["superpixels"].is_array())
      throw ValidationError(where + ": children/superpixels must be arrays");
    for (const auto& c : jn["children"]) {
      if (!c.is_number_integer())
        throw ValidationError(where + ": child ids must be integers");
      n.children.push_back(c.get<int>());
    }
    for (const auto& s : jn["superpixels"]) {
      if (!s.is_number_integer() || s.get<int>() < 0)
        throw ValidationError(where + ": superpixel ids must be non-negative integers");
      n.superpixels.push_back(s.get<int>());
    }
    if (jn["ucm_weight"].is_number()) {
      n.ucm_weight = jn["ucm_weight"].get<double>();
      if (*n.ucm_weight < 0)
        throw ValidationError(where + ": ucm_weight must be non-negative");
    } else if (!jn["ucm_weight"].is_null()) {
      throw ValidationError(where + ": ucm_weight must be a number or null");
    }
    nodes.push_back(std::move(n));
  }
  return RegionTree(std::move(nodes), doc["root"].get<int>());
}

// Canonical form: nodes sorted by id, keys in fixed (alphabetical) order,
// so equal trees export byte-identical documents.
inline std::string export_tree(const RegionTree& tree) {
  std::vector<const RegionNode*> order;
  order.reserve(tree.nodes().size());
  for (const auto& n : tree.nodes()) order.push_back(&n);
  std::sort(order.begin(), order.end(),
            [](const RegionNode* a, const RegionNode* b) { return a->id < b->id; });
  nlohmann::json doc;
  doc["root"] = tree.root_id();
  doc["nodes"] = nlohmann::json::array();
  for (const RegionNode* n : order) {
    nlohmann::json jn;
    jn["id"] = n->id;
    jn["parent"] = n->parent ? nlohmann::json(*n->parent) : nlohmann::json(nullptr);
    jn["children"] = n->children;
    jn["superpixels"] = n->superpixels;
    jn["ucm_weight"] =
        n->ucm_weight ? nlohmann::json(*n->ucm_weight) : nlohmann::json(nullptr);
    doc["nodes"].push_back(std::move(jn));
  }
  return doc.dump(2) + "\n";
}

// Cut made of the shallowest nodes whose subtree contains no internal node
// with ucm_weight > k.
inline CutConfig threshold_tree(const RegionTree& tree, double k) {
  for (const auto& n : tree.nodes())
    if (!n.is_leaf() && !n.ucm_weight)
      throw std::invalid_argument("threshold_tree: internal node " +
                                  std::to_string(n.id) + " has no ucm_weight");
  std::vector<double> subtree_max(tree.size(), kNegInf);
  for (int idx : tree.post_order()) {
    const auto& n = tree.node(idx);
    double m = n.is_leaf() ? kNegInf : *n.ucm_weight;
    for (int c : tree.children_of(idx)) m = std::max(m, subtree_max[c]);
    subtree_max[idx] = m;
  }
  CutConfig cut;
  std::vector<int> stack{tree.root_index()};
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    if (subtree_max[idx] <= k) {
      cut.active.push_back(tree.node(idx).id);
    } else {
      for (int c : tree.children_of(idx)) stack.push_back(c);
    }
  }
  cut.normalize();
  return cut;
}

}  // namespace treecut

#endif
