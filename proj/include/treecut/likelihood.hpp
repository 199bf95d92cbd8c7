#ifndef TREECUT_LIKELIHOOD_HPP
#define TREECUT_LIKELIHOOD_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "treecut/errors.hpp"
#include "treecut/image.hpp"
#include "treecut/region_tree.hpp"

namespace treecut {

constexpr int kColorDim = 3;

// Sufficient statistics for a region: pixel count, per-channel sums, and the
// summed outer products y y^T. Stats of a parent are the componentwise sums
// of its children's, which makes every per-region likelihood O(1) after one
// bottom-up pass.
struct RegionStats {
  long long n = 0;
  std::array<double, 3> sum{0, 0, 0};
  std::array<double, 9> outer{0, 0, 0, 0, 0, 0, 0, 0, 0};  // row major 3x3

  void add_pixel(const Color& y) {
    ++n;
    for (int i = 0; i < 3; ++i) {
      sum[i] += y[i];
      for (int j = 0; j < 3; ++j) outer[i * 3 + j] += y[i] * y[j];
    }
  }

  void add(const RegionStats& o) {
    n += o.n;
    for (int i = 0; i < 3; ++i) sum[i] += o.sum[i];
    for (int i = 0; i < 9; ++i) outer[i] += o.outer[i];
  }
};

inline RegionStats aggregate_stats(std::span<const RegionStats> children) {
  if (children.empty())
    throw std::invalid_argument("aggregate_stats: empty child list");
  RegionStats total;
  for (const RegionStats& c : children) total.add(c);
  return total;
}

// Per-label pixel counts n_ij within one region.
struct LabelCounts {
  std::vector<long long> counts;

  long long total() const {
    long long t = 0;
    for (long long c : counts) t += c;
    return t;
  }
};

enum class LikelihoodMode { gaussian, ground_truth };

struct LikelihoodConfig {
  double lambda = 1.0;    // scale on the log likelihood, > 0
  double epsilon = 1e-6;  // ridge added to the empirical covariance, >= 0
  LikelihoodMode mode = LikelihoodMode::gaussian;
};

inline void validate(const LikelihoodConfig& cfg) {
  if (!(cfg.lambda > 0))
    throw std::invalid_argument("likelihood config: lambda must be positive");
  if (!(cfg.epsilon >= 0))
    throw std::invalid_argument("likelihood config: epsilon must be non-negative");
}

namespace detail {

// Cholesky of a symmetric 3x3; returns log det, or nothing if a pivot is
// not positive.
inline std::optional<double> logdet_spd3(const std::array<double, 9>& m) {
  std::array<double, 9> l{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m[i * 3 + j];
      for (int k = 0; k < j; ++k) s -= l[i * 3 + k] * l[j * 3 + k];
      if (i == j) {
        if (!(s > 0)) return std::nullopt;
        l[i * 3 + i] = std::sqrt(s);
      } else {
        l[i * 3 + j] = s / l[j * 3 + j];
      }
    }
  }
  return 2.0 * (std::log(l[0]) + std::log(l[4]) + std::log(l[8]));
}

}  // namespace detail

// Log likelihood of the region's pixels under a Gaussian fitted at the
// (ridge-regularized) maximum likelihood solution:
//   L = -(N/2) [ D log(2 pi) + log |Sigma| + D ],   scaled by lambda.
inline double gaussian_loglik(const RegionStats& stats, const LikelihoodConfig& cfg) {
  if (stats.n < 1) throw std::invalid_argument("gaussian_loglik: empty region");
  const double n = static_cast<double>(stats.n);
  std::array<double, 3> mu;
  for (int i = 0; i < 3; ++i) mu[i] = stats.sum[i] / n;
  std::array<double, 9> cov;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      cov[i * 3 + j] = stats.outer[i * 3 + j] / n - mu[i] * mu[j];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j) {
      const double sym = 0.5 * (cov[i * 3 + j] + cov[j * 3 + i]);
      cov[i * 3 + j] = cov[j * 3 + i] = sym;
    }
  for (int i = 0; i < 3; ++i) cov[i * 3 + i] += cfg.epsilon;
  const auto logdet = detail::logdet_spd3(cov);
  if (!logdet)
    throw EvaluationError("gaussian_loglik: regularized covariance is not "
                          "positive definite");
  const double d = static_cast<double>(kColorDim);
  return cfg.lambda * (-0.5 * n * (d * std::log(2.0 * std::numbers::pi) + *logdet + d));
}

// Ground-truth likelihood from annotation label counts:
//   L = n_i. * sum_j pi_ij log pi_ij,  pi_ij = n_ij / n_i.,  0 log 0 := 0.
inline double gt_loglik(const LabelCounts& counts, const LikelihoodConfig& cfg) {
  const long long total = counts.total();
  if (total < 1) throw std::invalid_argument("gt_loglik: all label counts are zero");
  double sum = 0.0;
  for (long long c : counts.counts) {
    if (c < 0) throw std::invalid_argument("gt_loglik: negative label count");
    if (c > 0)
      sum += static_cast<double>(c) *
             std::log(static_cast<double>(c) / static_cast<double>(total));
  }
  return cfg.lambda * sum;
}

// Gaussian stats of every superpixel, from one pass over the image.
inline std::vector<RegionStats> superpixel_stats(const Image& img,
                                                 const SuperpixelMap& sp) {
  if (img.width != sp.width || img.height != sp.height)
    throw std::invalid_argument("superpixel_stats: image and superpixel "
                                "dimensions differ");
  std::vector<RegionStats> stats(sp.num_superpixels);
  for (std::size_t p = 0; p < sp.labels.size(); ++p)
    stats[sp.labels[p]].add_pixel(img.pixels[p]);
  return stats;
}

inline std::vector<LabelCounts> superpixel_label_counts(const Segmentation& gt,
                                                        const SuperpixelMap& sp) {
  if (gt.width != sp.width || gt.height != sp.height)
    throw std::invalid_argument("superpixel_label_counts: ground truth and "
                                "superpixel dimensions differ");
  std::vector<LabelCounts> counts(sp.num_superpixels);
  for (auto& c : counts) c.counts.assign(gt.num_regions, 0);
  for (std::size_t p = 0; p < sp.labels.size(); ++p)
    ++counts[sp.labels[p]].counts[gt.labels[p]];
  return counts;
}

// Per-node log likelihoods, indexed like tree.nodes(): one bottom-up pass
// aggregates sufficient statistics and evaluates the configured model at
// every node.
inline std::vector<double> region_loglik_table(const RegionTree& tree, const Image& img,
                                               const SuperpixelMap& sp,
                                               const Segmentation* gt,
                                               const LikelihoodConfig& cfg) {
  validate(cfg);
  check_tree_matches(tree, sp);
  std::vector<double> table(tree.size());
  if (cfg.mode == LikelihoodMode::gaussian) {
    const auto sp_stats = superpixel_stats(img, sp);
    std::vector<RegionStats> node_stats(tree.size());
    for (int idx : tree.post_order()) {
      const auto& node = tree.node(idx);
      if (node.is_leaf()) {
        node_stats[idx] = sp_stats[node.superpixels.front()];
      } else {
        for (int c : tree.children_of(idx)) node_stats[idx].add(node_stats[c]);
      }
      table[idx] = gaussian_loglik(node_stats[idx], cfg);
    }
  } else {
    if (gt == nullptr)
      throw std::invalid_argument("region_loglik_table: ground-truth mode "
                                  "requires a ground-truth segmentation");
    const auto sp_counts = superpixel_label_counts(*gt, sp);
    std::vector<LabelCounts> node_counts(tree.size());
    for (int idx : tree.post_order()) {
      const auto& node = tree.node(idx);
      if (node.is_leaf()) {
        node_counts[idx] = sp_counts[node.superpixels.front()];
      } else {
        node_counts[idx].counts.assign(gt->num_regions, 0);
        for (int c : tree.children_of(idx))
          for (std::size_t j = 0; j < node_counts[c].counts.size(); ++j)
            node_counts[idx].counts[j] += node_counts[c].counts[j];
      }
      table[idx] = gt_loglik(node_counts[idx], cfg);
    }
  }
  return table;
}

}  // namespace treecut

#endif
