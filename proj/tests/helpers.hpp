#ifndef TREECUT_TESTS_HELPERS_HPP
#define TREECUT_TESTS_HELPERS_HPP

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "treecut/treecut.hpp"

namespace testutil {

using namespace treecut;

// ---- Fixed fixture trees -------------------------------------------------

// Leaves 0,1 (superpixels 0,1), root 2.
inline RegionTree two_leaf_tree() {
  std::vector<RegionNode> nodes(3);
  nodes[0] = {0, 2, {}, {0}, std::nullopt};
  nodes[1] = {1, 2, {}, {1}, std::nullopt};
  nodes[2] = {2, std::nullopt, {0, 1}, {0, 1}, std::nullopt};
  return RegionTree(std::move(nodes), 2);
}

// Root 4 over internal node 3 (leaves 0,1) and leaf 2. The worked 3-level
// example: root p=0.9, node a p=0.5.
inline RegionTree three_level_tree() {
  std::vector<RegionNode> nodes(5);
  nodes[0] = {0, 3, {}, {0}, std::nullopt};
  nodes[1] = {1, 3, {}, {1}, std::nullopt};
  nodes[2] = {2, 4, {}, {2}, std::nullopt};
  nodes[3] = {3, 4, {0, 1}, {0, 1}, std::nullopt};
  nodes[4] = {4, std::nullopt, {2, 3}, {0, 1, 2}, std::nullopt};
  return RegionTree(std::move(nodes), 4);
}

// Full binary tree with 4 leaves: exactly 5 OONAPP cuts.
inline RegionTree depth3_binary_tree() {
  std::vector<RegionNode> nodes(7);
  nodes[0] = {0, 4, {}, {0}, std::nullopt};
  nodes[1] = {1, 4, {}, {1}, std::nullopt};
  nodes[2] = {2, 5, {}, {2}, std::nullopt};
  nodes[3] = {3, 5, {}, {3}, std::nullopt};
  nodes[4] = {4, 6, {0, 1}, {0, 1}, std::nullopt};
  nodes[5] = {5, 6, {2, 3}, {2, 3}, std::nullopt};
  nodes[6] = {6, std::nullopt, {4, 5}, {0, 1, 2, 3}, std::nullopt};
  return RegionTree(std::move(nodes), 6);
}

// ---- Random structures ---------------------------------------------------

namespace detail {

inline int build_random_subtree(Rng& rng, int lo, int hi, int max_arity,
                                std::vector<RegionNode>& nodes) {
  const int size = hi - lo;
  if (size == 1) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({id, std::nullopt, {}, {lo}, std::nullopt});
    return id;
  }
  const int arity_cap = std::min(max_arity, size);
  const int k = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(arity_cap - 1)));
  std::set<int> cuts;
  while (static_cast<int>(cuts.size()) < k - 1)
    cuts.insert(lo + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - 1))));
  std::vector<int> bounds{lo};
  bounds.insert(bounds.end(), cuts.begin(), cuts.end());
  bounds.push_back(hi);
  std::vector<int> children;
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i)
    children.push_back(build_random_subtree(rng, bounds[i], bounds[i + 1], max_arity, nodes));
  const int id = static_cast<int>(nodes.size());
  std::vector<int> superpixels;
  for (int s = lo; s < hi; ++s) superpixels.push_back(s);
  nodes.push_back({id, std::nullopt, children, superpixels, std::nullopt});
  for (int c : children) nodes[c].parent = id;
  return id;
}

}  // namespace detail

// Random tree with the given number of leaves and arity 2..max_arity.
inline RegionTree random_tree(Rng& rng, int leaves, int max_arity = 4) {
  std::vector<RegionNode> nodes;
  const int root = detail::build_random_subtree(rng, 0, leaves, max_arity, nodes);
  return RegionTree(std::move(nodes), root);
}

inline ModelParams random_params(Rng& rng, const RegionTree& tree) {
  ModelParams params;
  params.p.resize(tree.size());
  for (int i = 0; i < tree.size(); ++i)
    params.p[i] = tree.node(i).is_leaf() ? 1.0 : rng.uniform01();
  return params;
}

inline std::vector<double> random_logliks(Rng& rng, const RegionTree& tree, double lo,
                                          double hi) {
  std::vector<double> table(tree.size());
  for (auto& v : table) v = rng.uniform(lo, hi);
  return table;
}

// ---- Independent oracles -------------------------------------------------
//
// These recompute scores from the prior's definition (walking ancestor
// chains upward) rather than through the library's recursions, so the
// dynamic-programming passes are checked against a second route.

inline double oracle_cut_score(const RegionTree& tree, const ModelParams& params,
                               std::span<const double> logliks, const CutConfig& cut) {
  std::vector<char> is_ancestor(tree.size(), 0);
  double score = 0.0;
  for (int id : cut.active) {
    const int idx = tree.index_of(id);
    score += std::log(params.p[idx]) + logliks[idx];
    auto parent = tree.node(idx).parent;
    while (parent) {
      const int pidx = tree.index_of(*parent);
      if (!is_ancestor[pidx]) {
        is_ancestor[pidx] = 1;
        score += std::log1p(-params.p[pidx]);
      }
      parent = tree.node(pidx).parent;
    }
  }
  return score;
}

inline double oracle_log_sum(const std::vector<double>& vals) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : vals) hi = std::max(hi, v);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  double sum = 0.0;
  for (double v : vals) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

struct OracleSummary {
  double total;
  CutConfig map;
  double map_score;
  std::map<std::string, double> posterior;   // cut key -> probability
  std::vector<double> active_marginal;       // by node index
};

inline std::string cut_key(const CutConfig& cut) {
  std::string key;
  for (int id : cut.active) key += std::to_string(id) + ",";
  return key;
}

inline OracleSummary oracle_summary(const RegionTree& tree, const ModelParams& params,
                                    std::span<const double> logliks,
                                    const std::vector<CutConfig>& cuts) {
  OracleSummary out;
  std::vector<double> scores;
  scores.reserve(cuts.size());
  for (const auto& cut : cuts) scores.push_back(oracle_cut_score(tree, params, logliks, cut));
  out.total = oracle_log_sum(scores);
  std::size_t arg = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[arg]) arg = i;
  out.map = cuts[arg];
  out.map_score = scores[arg];
  out.active_marginal.assign(tree.size(), 0.0);
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double w = std::exp(scores[i] - out.total);
    out.posterior[cut_key(cuts[i])] = w;
    for (int id : cuts[i].active) out.active_marginal[tree.index_of(id)] += w;
  }
  return out;
}

// ---- Images ----------------------------------------------------------------

inline Image make_image(int w, int h, const std::function<Color(int, int)>& paint) {
  Image img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = paint(x, y);
  return img;
}

// Left half black, right half white.
inline Image halves_image(int w, int h) {
  return make_image(w, h, [w](int x, int) -> Color {
    return x < w / 2 ? Color{0, 0, 0} : Color{1, 1, 1};
  });
}

// ---- Planted two-scale dataset --------------------------------------------
//
// 32x32 images over a 4-pixel superpixel grid, tuned for lambda = 0.15 and
// epsilon = 0.01 so that a 0.6-vs-0.999 global-p grid separates the scales:
//
//   coarse image: two strong halves (bases 0.2 / 0.75) carrying a weak 8x8
//     checkerboard (+-0.0385). The checkerboard split pays off at p = 0.6
//     but not at p = 0.999; the halves split at both. Ground truth: 2
//     segments.
//   fine image: an 8x8 grid of 4x4 blocks (+-0.086 around 0.5). Block
//     boundaries pay off at p = 0.6 only. Ground truth: 64 segments.

inline Image coarse_scale_image(int phase) {
  return make_image(32, 32, [phase](int x, int y) -> Color {
    const double base = x < 16 ? 0.2 : 0.75;
    const double v = base + (((x / 8 + y / 8 + phase) % 2 == 0) ? -0.0385 : 0.0385);
    return {v, v, v};
  });
}

inline Image fine_scale_image(int phase) {
  return make_image(32, 32, [phase](int x, int y) -> Color {
    const double v = 0.5 + (((x / 4 + y / 4 + phase) % 2 == 0) ? -0.086 : 0.086);
    return {v, v, v};
  });
}

inline Segmentation coarse_scale_gt() {
  std::vector<int> labels(32 * 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) labels[y * 32 + x] = x < 16 ? 0 : 1;
  return Segmentation::from_labels(32, 32, labels);
}

inline Segmentation fine_scale_gt() {
  std::vector<int> labels(32 * 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) labels[y * 32 + x] = (y / 4) * 8 + x / 4;
  return Segmentation::from_labels(32, 32, labels);
}

inline LikelihoodConfig two_scale_config() {
  LikelihoodConfig cfg;
  cfg.lambda = 0.15;
  cfg.epsilon = 0.01;
  return cfg;
}

inline TuningItem make_tuning_item(const std::string& id, Image img, Segmentation gt) {
  auto sp = grid_superpixels(img, 4);
  auto tree = build_tree_agglomerative(img, sp);
  AnnotationSet gts{id, {std::move(gt)}};
  return TuningItem{id, std::move(img), std::move(sp), std::move(tree), std::move(gts)};
}

// Two coarse and two fine images (phase-shifted copies).
inline std::vector<TuningItem> two_scale_items() {
  std::vector<TuningItem> items;
  items.push_back(make_tuning_item("coarse0", coarse_scale_image(0), coarse_scale_gt()));
  items.push_back(make_tuning_item("coarse1", coarse_scale_image(1), coarse_scale_gt()));
  items.push_back(make_tuning_item("fine0", fine_scale_image(0), fine_scale_gt()));
  items.push_back(make_tuning_item("fine1", fine_scale_image(1), fine_scale_gt()));
  return items;
}

}  // namespace testutil

#endif
