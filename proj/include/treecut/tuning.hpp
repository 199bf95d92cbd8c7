#ifndef TREECUT_TUNING_HPP
#define TREECUT_TUNING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "treecut/image.hpp"
#include "treecut/likelihood.hpp"
#include "treecut/metrics.hpp"
#include "treecut/model.hpp"
#include "treecut/parallel.hpp"
#include "treecut/region_tree.hpp"

namespace treecut {

struct ParamGrid {
  std::vector<double> p_values;       // in (0,1), strictly increasing
  std::vector<double> lambda_values;  // positive, strictly increasing
  std::vector<double> k_values;       // optional, in (0,1], strictly increasing
};

inline void validate(const ParamGrid& grid) {
  auto check_increasing = [](const std::vector<double>& v, const char* name) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i] > v[i - 1]))
        throw std::invalid_argument(std::string("param grid: ") + name +
                                    " must be strictly increasing");
  };
  for (double p : grid.p_values)
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("param grid: p values must lie in (0,1)");
  for (double l : grid.lambda_values)
    if (!(l > 0.0))
      throw std::invalid_argument("param grid: lambda values must be positive");
  for (double k : grid.k_values)
    if (!(k > 0.0 && k <= 1.0))
      throw std::invalid_argument("param grid: k values must lie in (0,1]");
  check_increasing(grid.p_values, "p values");
  check_increasing(grid.lambda_values, "lambda values");
  check_increasing(grid.k_values, "k values");
}

// p grid with gridpoints denser towards 1: p = 1 - 10^(-u) for u equally
// spaced between -log10(1-p_min) and -log10(1-p_max).
inline std::vector<double> dense_p_grid(int count, double p_min, double p_max) {
  if (count < 1 || !(p_min > 0.0) || !(p_max < 1.0) || !(p_min <= p_max))
    throw std::invalid_argument("dense_p_grid: need count >= 1 and 0 < p_min <= p_max < 1");
  const double u_min = -std::log10(1.0 - p_min);
  const double u_max = -std::log10(1.0 - p_max);
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) {
    const double u =
        count == 1 ? u_min : u_min + (u_max - u_min) * i / static_cast<double>(count - 1);
    grid[i] = 1.0 - std::pow(10.0, -u);
  }
  return grid;
}

// One training/evaluation unit: an image with its superpixels, region tree,
// and human annotations.
struct TuningItem {
  std::string id;
  Image image;
  SuperpixelMap superpixels;
  RegionTree tree;
  AnnotationSet annotations;
};

struct GridRow {
  double p = 0.0;
  double lambda = 0.0;
  double score = 0.0;
};

struct GridSearchResult {
  double best_p = 0.0;
  double best_lambda = 0.0;
  double score = 0.0;
  std::vector<GridRow> rows;
};

namespace detail {

// Likelihood tables at lambda = 1; both likelihood models scale linearly in
// lambda, so one table per item covers the whole sweep.
inline std::vector<std::vector<double>> unit_tables(const std::vector<TuningItem>& items,
                                                    const LikelihoodConfig& cfg) {
  std::vector<std::vector<double>> tables;
  tables.reserve(items.size());
  LikelihoodConfig unit = cfg;
  unit.lambda = 1.0;
  for (const auto& item : items) {
    const Segmentation* gt = cfg.mode == LikelihoodMode::ground_truth
                                 ? &item.annotations.segmentations.front()
                                 : nullptr;
    tables.push_back(
        region_loglik_table(item.tree, item.image, item.superpixels, gt, unit));
  }
  return tables;
}

}  // namespace detail

// Exhaustive (p, lambda) sweep maximizing the dataset-mean metric of the MAP
// segmentation (minimizing, for VI). Ties break toward larger p, then
// larger lambda.
inline GridSearchResult grid_search(const std::vector<TuningItem>& items,
                                    const ParamGrid& grid, Metric metric,
                                    const LikelihoodConfig& cfg, int jobs = 1) {
  if (items.empty()) throw std::invalid_argument("grid_search: empty dataset");
  if (grid.p_values.empty() || grid.lambda_values.empty())
    throw std::invalid_argument("grid_search: empty parameter grid");
  validate(grid);
  for (const auto& item : items) validate(item.annotations);

  const auto tables = detail::unit_tables(items, cfg);

  std::vector<GridRow> rows(grid.p_values.size() * grid.lambda_values.size());
  parallel_for(rows.size(), jobs, [&](std::size_t g) {
    const double p = grid.p_values[g / grid.lambda_values.size()];
    const double lambda = grid.lambda_values[g % grid.lambda_values.size()];
    double sum = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      std::vector<double> scaled(tables[i].size());
      for (std::size_t j = 0; j < scaled.size(); ++j) scaled[j] = lambda * tables[i][j];
      const auto params = global_params(items[i].tree, p);
      const auto cut = map_cut(items[i].tree, params, scaled).first;
      const auto seg = cut_to_segmentation(cut, items[i].tree, items[i].superpixels);
      switch (metric) {
        case Metric::covering:
          sum += covering_vs_annotations(seg, items[i].annotations);
          break;
        case Metric::pri:
          sum += pri(seg, items[i].annotations);
          break;
        case Metric::vi:
          sum += vi_vs_annotations(seg, items[i].annotations);
          break;
      }
    }
    rows[g] = {p, lambda, sum / static_cast<double>(items.size())};
  });

  GridSearchResult result;
  result.rows = rows;
  bool first = true;
  for (const auto& row : rows) {
    const bool better =
        first || metric_improves(metric, row.score, result.score) ||
        (row.score == result.score &&
         (row.p > result.best_p ||
          (row.p == result.best_p && row.lambda > result.best_lambda)));
    if (better) {
      result.best_p = row.p;
      result.best_lambda = row.lambda;
      result.score = row.score;
      first = false;
    }
  }
  return result;
}

struct ThresholdRow {
  double k = 0.0;
  double score = 0.0;
};

struct ThresholdSearchResult {
  double best_k = 0.0;
  double score = 0.0;
  std::vector<ThresholdRow> rows;
};

// Baseline sweep over UCM thresholds, mirroring the grid search contract.
// Ties break toward larger k.
inline ThresholdSearchResult grid_search_threshold(const std::vector<TuningItem>& items,
                                                   const std::vector<double>& k_values,
                                                   Metric metric, int jobs = 1) {
  if (items.empty()) throw std::invalid_argument("grid_search_threshold: empty dataset");
  if (k_values.empty())
    throw std::invalid_argument("grid_search_threshold: empty parameter grid");
  for (const auto& item : items) validate(item.annotations);

  std::vector<ThresholdRow> rows(k_values.size());
  parallel_for(rows.size(), jobs, [&](std::size_t g) {
    const double k = k_values[g];
    double sum = 0.0;
    for (const auto& item : items) {
      const auto cut = threshold_tree(item.tree, k);
      const auto seg = cut_to_segmentation(cut, item.tree, item.superpixels);
      switch (metric) {
        case Metric::covering:
          sum += covering_vs_annotations(seg, item.annotations);
          break;
        case Metric::pri:
          sum += pri(seg, item.annotations);
          break;
        case Metric::vi:
          sum += vi_vs_annotations(seg, item.annotations);
          break;
      }
    }
    rows[g] = {k, sum / static_cast<double>(items.size())};
  });

  ThresholdSearchResult result;
  result.rows = rows;
  bool first = true;
  for (const auto& row : rows) {
    const bool better = first || metric_improves(metric, row.score, result.score) ||
                        (row.score == result.score && row.k > result.best_k);
    if (better) {
      result.best_k = row.k;
      result.score = row.score;
      first = false;
    }
  }
  return result;
}

// ---- Scale-specific evaluation protocol ---------------------------------

enum class ScaleBucket { coarse = 0, medium = 1, fine = 2, all = 3 };

inline const char* scale_bucket_name(ScaleBucket b) {
  switch (b) {
    case ScaleBucket::coarse: return "coarse";
    case ScaleBucket::medium: return "medium";
    case ScaleBucket::fine: return "fine";
    case ScaleBucket::all: return "all";
  }
  return "?";
}

// Partition of image indices by ground-truth segment count: coarse 1-8,
// medium 9-31, fine >= 32.
struct ScaleSplit {
  std::vector<std::size_t> coarse, medium, fine;

  const std::vector<std::size_t>& bucket(ScaleBucket b) const {
    switch (b) {
      case ScaleBucket::coarse: return coarse;
      case ScaleBucket::medium: return medium;
      default: return fine;
    }
  }
  std::vector<std::size_t> all() const {
    std::vector<std::size_t> out;
    out.insert(out.end(), coarse.begin(), coarse.end());
    out.insert(out.end(), medium.begin(), medium.end());
    out.insert(out.end(), fine.begin(), fine.end());
    std::sort(out.begin(), out.end());
    return out;
  }
};

// An image's segment count is the lower median of its annotations' region
// counts.
inline int annotation_segment_count(const AnnotationSet& gts) {
  validate(gts);
  std::vector<int> counts;
  counts.reserve(gts.segmentations.size());
  for (const auto& s : gts.segmentations) counts.push_back(s.num_regions);
  std::sort(counts.begin(), counts.end());
  return counts[(counts.size() - 1) / 2];
}

inline ScaleSplit scale_split(const std::vector<AnnotationSet>& annotations) {
  ScaleSplit split;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const int segments = annotation_segment_count(annotations[i]);
    if (segments <= 8)
      split.coarse.push_back(i);
    else if (segments <= 31)
      split.medium.push_back(i);
    else
      split.fine.push_back(i);
  }
  return split;
}

// Train on each scale bucket (and on all images), evaluate on every test
// bucket. Rows with an empty training bucket are skipped and stay unset;
// so do cells with an empty test bucket.
template <typename TrainFn, typename EvalFn>
auto cross_scale_matrix(const ScaleSplit& train_split, const ScaleSplit& test_split,
                        TrainFn&& train, EvalFn&& eval) {
  using Params = std::invoke_result_t<TrainFn&, const std::vector<std::size_t>&>;
  struct Matrix {
    std::array<std::optional<Params>, 4> trained;
    std::array<std::array<std::optional<double>, 3>, 4> scores;
  };
  Matrix m;
  for (int row = 0; row < 4; ++row) {
    const auto train_ids = row == 3
                               ? train_split.all()
                               : train_split.bucket(static_cast<ScaleBucket>(row));
    if (train_ids.empty()) continue;  // skipped-row marker: trained stays unset
    m.trained[row] = train(train_ids);
    for (int col = 0; col < 3; ++col) {
      const auto& test_ids = test_split.bucket(static_cast<ScaleBucket>(col));
      if (test_ids.empty()) continue;
      m.scores[row][col] = eval(*m.trained[row], test_ids);
    }
  }
  return m;
}

}  // namespace treecut

#endif
