#ifndef TREECUT_MODEL_HPP
#define TREECUT_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "treecut/cut.hpp"
#include "treecut/errors.hpp"
#include "treecut/image.hpp"
#include "treecut/numeric.hpp"
#include "treecut/region_tree.hpp"

namespace treecut {

// Per-node activation probabilities, indexed like tree.nodes(). Leaves are
// pinned to 1: a reached leaf must activate or its superpixel would go
// unexplained.
struct ModelParams {
  std::vector<double> p;
};

inline ModelParams global_params(const RegionTree& tree, double p_internal) {
  if (!(p_internal >= 0.0 && p_internal <= 1.0))
    throw std::invalid_argument("global_params: p must lie in [0,1]");
  ModelParams params;
  params.p.resize(tree.size());
  for (int i = 0; i < tree.size(); ++i)
    params.p[i] = tree.node(i).is_leaf() ? 1.0 : p_internal;
  return params;
}

inline void validate_params(const RegionTree& tree, const ModelParams& params) {
  if (static_cast<int>(params.p.size()) != tree.size())
    throw std::invalid_argument("model params: size does not match tree");
  for (int i = 0; i < tree.size(); ++i) {
    if (tree.node(i).is_leaf()) {
      if (params.p[i] != 1.0)
        throw std::invalid_argument("model params: leaf node " +
                                    std::to_string(tree.node(i).id) +
                                    " must have p = 1");
    } else if (!(params.p[i] >= 0.0 && params.p[i] <= 1.0)) {
      throw std::invalid_argument("model params: p outside [0,1] at node " +
                                  std::to_string(tree.node(i).id));
    }
  }
}

// True iff every root-to-leaf path contains exactly one active node.
inline bool satisfies_oonapp(const RegionTree& tree, const CutConfig& cut) {
  std::vector<char> active(tree.size(), 0);
  for (int id : cut.active) {
    if (!tree.has_id(id)) return false;
    if (active[tree.index_of(id)]) return false;
    active[tree.index_of(id)] = 1;
  }
  // DFS counting actives along the path; every leaf must see exactly one.
  struct Frame {
    int idx;
    int count;
  };
  std::vector<Frame> stack{{tree.root_index(), 0}};
  while (!stack.empty()) {
    auto [idx, count] = stack.back();
    stack.pop_back();
    count += active[idx] ? 1 : 0;
    if (count > 1) return false;
    if (tree.node(idx).is_leaf()) {
      if (count != 1) return false;
      continue;
    }
    for (int c : tree.children_of(idx)) stack.push_back({c, count});
  }
  return true;
}

inline void require_oonapp(const RegionTree& tree, const CutConfig& cut,
                           const char* who) {
  if (!satisfies_oonapp(tree, cut))
    throw std::invalid_argument(std::string(who) +
                                ": cut violates the one-active-node-per-path "
                                "constraint");
}

// The z assignment a cut implies: 0 on the inactive ancestors, 1 on the
// active nodes and everything below them.
inline std::vector<std::uint8_t> cut_z_assignment(const RegionTree& tree,
                                                  const CutConfig& cut) {
  require_oonapp(tree, cut, "cut_z_assignment");
  std::vector<std::uint8_t> z(tree.size(), 1);
  std::vector<char> active(tree.size(), 0);
  for (int id : cut.active) active[tree.index_of(id)] = 1;
  std::vector<int> stack{tree.root_index()};
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    if (active[idx]) continue;
    z[idx] = 0;
    for (int c : tree.children_of(idx)) stack.push_back(c);
  }
  return z;
}

// log p(z) for a cut: inactive ancestors contribute log(1-p_i), active nodes
// log(p_j), and the forced activations below the cut contribute log 1 = 0.
inline double prior_log_prob(const RegionTree& tree, const ModelParams& params,
                             const CutConfig& cut) {
  validate_params(tree, params);
  require_oonapp(tree, cut, "prior_log_prob");
  std::vector<char> active(tree.size(), 0);
  for (int id : cut.active) active[tree.index_of(id)] = 1;
  double logp = 0.0;
  std::vector<int> stack{tree.root_index()};
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    if (active[idx]) {
      logp += log_prob(params.p[idx]);
    } else {
      logp += log_one_minus(params.p[idx]);
      for (int c : tree.children_of(idx)) stack.push_back(c);
    }
  }
  return logp;
}

// Exact enumeration of every OONAPP configuration; the oracle used to
// validate the dynamic-programming passes on small trees.
//   cuts(leaf) = { {leaf} }
//   cuts(node) = { {node} }  u  cartesian product of children's cuts
inline std::vector<CutConfig> enumerate_cuts(const RegionTree& tree,
                                             std::size_t cap = 1000000) {
  // Count first so the cap check cannot blow memory.
  std::vector<double> count(tree.size());
  for (int idx : tree.post_order()) {
    if (tree.node(idx).is_leaf()) {
      count[idx] = 1;
    } else {
      double prod = 1;
      for (int c : tree.children_of(idx)) prod *= count[c];
      count[idx] = 1 + prod;
    }
    if (count[idx] > static_cast<double>(cap))
      throw ResourceLimitError("enumerate_cuts: more than " + std::to_string(cap) +
                               " configurations");
  }

  std::vector<std::vector<std::vector<int>>> cuts(tree.size());
  for (int idx : tree.post_order()) {
    const auto& node = tree.node(idx);
    if (node.is_leaf()) {
      cuts[idx] = {{node.id}};
      continue;
    }
    std::vector<std::vector<int>> list;
    list.push_back({node.id});
    // Odometer over the children's cut lists.
    const auto& kids = tree.children_of(idx);
    std::vector<std::size_t> pick(kids.size(), 0);
    while (true) {
      std::vector<int> combo;
      for (std::size_t i = 0; i < kids.size(); ++i) {
        const auto& part = cuts[kids[i]][pick[i]];
        combo.insert(combo.end(), part.begin(), part.end());
      }
      list.push_back(std::move(combo));
      std::size_t i = 0;
      for (; i < kids.size(); ++i) {
        if (++pick[i] < cuts[kids[i]].size()) break;
        pick[i] = 0;
      }
      if (i == kids.size()) break;
    }
    for (int c : kids) cuts[c].clear();
    cuts[idx] = std::move(list);
  }

  std::vector<CutConfig> result;
  result.reserve(cuts[tree.root_index()].size());
  for (auto& ids : cuts[tree.root_index()]) {
    CutConfig cut;
    cut.active = std::move(ids);
    cut.normalize();
    result.push_back(std::move(cut));
  }
  return result;
}

// Bottom-up tables of the two recursions, all in log space:
//   total:  p(Y_i)  = p_i p(Y_{di}) + (1-p_i) prod_j p(Y_j)
//   best:  p*(Y_i)  = max[ p_i p(Y_{di}), (1-p_i) prod_j p*(Y_j) ]
// "direct" is the mass from activating node i, "indirect" the mass from
// delegating to its children; leaves have no indirect branch.
struct PosteriorTables {
  std::vector<double> direct;    // log p_i + loglik_i
  std::vector<double> indirect;  // log(1-p_i) + sum_children total
  std::vector<double> total;     // log_add(direct, indirect)
  std::vector<double> best;      // MAP value of the subtree
  std::vector<char> choose_direct;  // argmax at each node, ties -> direct
};

inline PosteriorTables compute_posterior_tables(const RegionTree& tree,
                                                const ModelParams& params,
                                                std::span<const double> logliks) {
  validate_params(tree, params);
  if (logliks.size() != static_cast<std::size_t>(tree.size()))
    throw std::invalid_argument("posterior tables: likelihood table size does "
                                "not match tree");
  PosteriorTables t;
  t.direct.resize(tree.size());
  t.indirect.resize(tree.size());
  t.total.resize(tree.size());
  t.best.resize(tree.size());
  t.choose_direct.resize(tree.size());
  for (int idx : tree.post_order()) {
    t.direct[idx] = log_prob(params.p[idx]) + logliks[idx];
    double children_total = 0.0;
    double children_best = 0.0;
    for (int c : tree.children_of(idx)) {
      children_total += t.total[c];
      children_best += t.best[c];
    }
    const double off = log_one_minus(params.p[idx]);
    t.indirect[idx] = tree.node(idx).is_leaf() ? kNegInf : off + children_total;
    t.total[idx] = log_add(t.direct[idx], t.indirect[idx]);
    const double indirect_best =
        tree.node(idx).is_leaf() ? kNegInf : off + children_best;
    t.choose_direct[idx] = t.direct[idx] >= indirect_best;
    t.best[idx] = t.choose_direct[idx] ? t.direct[idx] : indirect_best;
  }
  return t;
}

inline double total_log_prob(const RegionTree& tree, const ModelParams& params,
                             std::span<const double> logliks) {
  return compute_posterior_tables(tree, params, logliks).total[tree.root_index()];
}

// MAP cut by top-down backtracking of the stored argmax decisions.
inline std::pair<CutConfig, double> map_cut(const RegionTree& tree,
                                            const PosteriorTables& tables) {
  CutConfig cut;
  std::vector<int> stack{tree.root_index()};
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    if (tables.choose_direct[idx]) {
      cut.active.push_back(tree.node(idx).id);
    } else {
      for (int c : tree.children_of(idx)) stack.push_back(c);
    }
  }
  cut.normalize();
  return {std::move(cut), tables.best[tree.root_index()]};
}

inline std::pair<CutConfig, double> map_cut(const RegionTree& tree,
                                            const ModelParams& params,
                                            std::span<const double> logliks) {
  return map_cut(tree, compute_posterior_tables(tree, params, logliks));
}

// Exact ancestral sample from p(z|Y): activate each reached node with
// probability p_D / (p_D + p_I), computed in log space, else recurse.
inline CutConfig sample_cut(const RegionTree& tree, const PosteriorTables& tables,
                            Rng& rng) {
  CutConfig cut;
  std::vector<int> stack{tree.root_index()};
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    const double log_activate = tables.direct[idx] - tables.total[idx];
    if (std::log(rng.uniform01()) < log_activate) {
      cut.active.push_back(tree.node(idx).id);
    } else {
      for (int c : tree.children_of(idx)) stack.push_back(c);
    }
  }
  cut.normalize();
  return cut;
}

inline CutConfig sample_cut(const RegionTree& tree, const ModelParams& params,
                            std::span<const double> logliks, std::uint64_t seed) {
  const auto tables = compute_posterior_tables(tree, params, logliks);
  Rng rng(seed);
  return sample_cut(tree, tables, rng);
}

// Posterior node quantities from one top-down pass.
//   reach_i   = P(no ancestor of i active | Y), root = 1
//   active_i  = P(i in the cut | Y) = reach_i * p_D/p(Y_i)
//   z1_i      = P(z_i = 1 | Y)     = (1 - reach_i) + active_i
struct Marginals {
  std::vector<double> active;
  std::vector<double> z1;
};

inline Marginals node_marginals(const RegionTree& tree, const PosteriorTables& tables) {
  Marginals m;
  m.active.resize(tree.size());
  m.z1.resize(tree.size());
  std::vector<double> log_reach(tree.size(), 0.0);
  // Walk parents before children: reverse post-order works.
  const auto& order = tree.post_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int idx = *it;
    const double log_dshare = tables.direct[idx] - tables.total[idx];
    const double log_ishare = tables.indirect[idx] - tables.total[idx];
    const double reach = std::exp(log_reach[idx]);
    m.active[idx] = std::exp(log_reach[idx] + log_dshare);
    m.z1[idx] = (1.0 - reach) + m.active[idx];
    for (int c : tree.children_of(idx))
      log_reach[c] = log_reach[idx] + log_ishare;
  }
  return m;
}

inline Marginals node_marginals(const RegionTree& tree, const ModelParams& params,
                                std::span<const double> logliks) {
  return node_marginals(tree, compute_posterior_tables(tree, params, logliks));
}

// Label map induced by a cut: each pixel takes the index of the unique
// active node governing its superpixel, renumbered 0..|cut|-1 in ascending
// node-id order.
inline Segmentation cut_to_segmentation(const CutConfig& cut, const RegionTree& tree,
                                        const SuperpixelMap& sp) {
  check_tree_matches(tree, sp);
  require_oonapp(tree, cut, "cut_to_segmentation");
  CutConfig sorted = cut;
  sorted.normalize();
  std::vector<int> sp_to_region(sp.num_superpixels, -1);
  for (std::size_t r = 0; r < sorted.active.size(); ++r)
    for (int spid : tree.node(tree.index_of(sorted.active[r])).superpixels)
      sp_to_region[spid] = static_cast<int>(r);
  Segmentation seg;
  seg.width = sp.width;
  seg.height = sp.height;
  seg.num_regions = static_cast<int>(sorted.active.size());
  seg.labels.resize(sp.labels.size());
  for (std::size_t p = 0; p < sp.labels.size(); ++p)
    seg.labels[p] = sp_to_region[sp.labels[p]];
  return seg;
}

// ---- CutConfig JSON ----------------------------------------------------

inline std::string export_cut(const CutConfig& cut) {
  nlohmann::json doc;
  doc["active"] = cut.active;
  return doc.dump() + "\n";
}

inline CutConfig import_cut(const std::string& document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("cut document: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("active") || !doc["active"].is_array())
    throw ValidationError("cut document: expected object with 'active' array");
  CutConfig cut;
  for (const auto& v : doc["active"]) {
    if (!v.is_number_integer())
      throw ValidationError("cut document: active ids must be integers");
    cut.active.push_back(v.get<int>());
  }
  cut.normalize();
  return cut;
}

}  // namespace treecut

#endif
