#ifndef TREECUT_METRICS_HPP
#define TREECUT_METRICS_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "treecut/image.hpp"

namespace treecut {

// Human annotations for one image.
struct AnnotationSet {
  std::string image_id;
  std::vector<Segmentation> segmentations;
};

inline void validate(const AnnotationSet& gts) {
  if (gts.segmentations.empty())
    throw std::invalid_argument("annotation set is empty");
  for (const auto& s : gts.segmentations)
    if (s.width != gts.segmentations.front().width ||
        s.height != gts.segmentations.front().height)
      throw std::invalid_argument("annotation set has mismatched dimensions");
}

namespace detail {

// Sparse joint label histogram between two segmentations of the same image.
struct Contingency {
  std::vector<long long> a_sizes, b_sizes;
  std::unordered_map<std::uint64_t, long long> joint;  // key = a * nb + b
  long long n = 0;
};

inline Contingency contingency(const Segmentation& a, const Segmentation& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("segmentation dimensions differ");
  Contingency t;
  t.a_sizes.assign(a.num_regions, 0);
  t.b_sizes.assign(b.num_regions, 0);
  t.n = static_cast<long long>(a.labels.size());
  const std::uint64_t nb = static_cast<std::uint64_t>(b.num_regions);
  for (std::size_t p = 0; p < a.labels.size(); ++p) {
    ++t.a_sizes[a.labels[p]];
    ++t.b_sizes[b.labels[p]];
    ++t.joint[static_cast<std::uint64_t>(a.labels[p]) * nb + b.labels[p]];
  }
  return t;
}

inline long long pairs2(long long n) { return n * (n - 1) / 2; }

}  // namespace detail

// Covering of S by S': (1/N) sum_{R in S} |R| max_{R' in S'} IoU(R, R').
// Asymmetric in its arguments.
inline double covering(const Segmentation& s, const Segmentation& s_prime) {
  const auto t = detail::contingency(s, s_prime);
  std::vector<double> best(s.num_regions, 0.0);
  const std::uint64_t nb = static_cast<std::uint64_t>(s_prime.num_regions);
  for (const auto& [key, inter] : t.joint) {
    const int r = static_cast<int>(key / nb);
    const int rp = static_cast<int>(key % nb);
    const double uni =
        static_cast<double>(t.a_sizes[r] + t.b_sizes[rp] - inter);
    const double iou = static_cast<double>(inter) / uni;
    if (iou > best[r]) best[r] = iou;
  }
  double sum = 0.0;
  for (int r = 0; r < s.num_regions; ++r)
    sum += static_cast<double>(t.a_sizes[r]) * best[r];
  return sum / static_cast<double>(t.n);
}

// Benchmark convention: covering of the ground truth by the machine
// segmentation, averaged over annotators.
inline double covering_vs_annotations(const Segmentation& s, const AnnotationSet& gts) {
  validate(gts);
  double sum = 0.0;
  for (const auto& gt : gts.segmentations) sum += covering(gt, s);
  return sum / static_cast<double>(gts.segmentations.size());
}

// Variation of information, H(S) + H(S') - 2 I(S;S'), in nats.
inline double vi(const Segmentation& s, const Segmentation& s_prime) {
  const auto t = detail::contingency(s, s_prime);
  const double n = static_cast<double>(t.n);
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (long long c : t.a_sizes)
    if (c > 0) ha -= (c / n) * std::log(c / n);
  for (long long c : t.b_sizes)
    if (c > 0) hb -= (c / n) * std::log(c / n);
  const std::uint64_t nb = static_cast<std::uint64_t>(s_prime.num_regions);
  for (const auto& [key, c] : t.joint) {
    const int r = static_cast<int>(key / nb);
    const int rp = static_cast<int>(key % nb);
    const double pj = c / n;
    mi += pj * std::log(pj / ((t.a_sizes[r] / n) * (t.b_sizes[rp] / n)));
  }
  const double v = ha + hb - 2.0 * mi;
  return v < 0.0 ? 0.0 : v;  // clamp the last ulp of rounding
}

inline double vi_vs_annotations(const Segmentation& s, const AnnotationSet& gts) {
  validate(gts);
  double sum = 0.0;
  for (const auto& gt : gts.segmentations) sum += vi(s, gt);
  return sum / static_cast<double>(gts.segmentations.size());
}

// Rand index between two segmentations via pair counting on the
// contingency table; no O(N^2) pixel-pair loop.
inline double rand_index(const Segmentation& s, const Segmentation& gt) {
  const auto t = detail::contingency(s, gt);
  long long together_both = 0;
  for (const auto& [key, c] : t.joint) together_both += detail::pairs2(c);
  long long together_a = 0, together_b = 0;
  for (long long c : t.a_sizes) together_a += detail::pairs2(c);
  for (long long c : t.b_sizes) together_b += detail::pairs2(c);
  const long long all = detail::pairs2(t.n);
  const long long agreements = all + 2 * together_both - together_a - together_b;
  return static_cast<double>(agreements) / static_cast<double>(all);
}

// Probabilistic Rand Index: mean Rand index against the annotation set.
inline double pri(const Segmentation& s, const AnnotationSet& gts) {
  validate(gts);
  double sum = 0.0;
  for (const auto& gt : gts.segmentations) sum += rand_index(s, gt);
  return sum / static_cast<double>(gts.segmentations.size());
}

struct MetricReport {
  double covering = 0.0;
  double pri = 0.0;
  double vi = 0.0;
};

inline MetricReport evaluate(const Segmentation& s, const AnnotationSet& gts) {
  return {covering_vs_annotations(s, gts), pri(s, gts), vi_vs_annotations(s, gts)};
}

enum class Metric { covering, pri, vi };

inline double metric_value(const MetricReport& r, Metric m) {
  switch (m) {
    case Metric::covering: return r.covering;
    case Metric::pri: return r.pri;
    case Metric::vi: return r.vi;
  }
  return 0.0;
}

// Lower is better only for VI.
inline bool metric_improves(Metric m, double candidate, double incumbent) {
  return m == Metric::vi ? candidate < incumbent : candidate > incumbent;
}

// One image's scores across a shared parameter sweep.
struct ImageSweep {
  std::string image_id;
  std::vector<double> params;
  std::vector<MetricReport> reports;
};

struct OdsOis {
  double ods = 0.0;        // dataset mean at the single best shared parameter
  double best_param = 0.0;
  double ois = 0.0;        // mean of each image's own best score
};

// Optimal dataset scale / optimal image scale over a rectangular sweep.
inline OdsOis ods_ois_eval(const std::vector<ImageSweep>& results, Metric metric) {
  if (results.empty()) throw std::invalid_argument("ods_ois_eval: no images");
  const auto& params = results.front().params;
  if (params.empty()) throw std::invalid_argument("ods_ois_eval: empty parameter grid");
  for (const auto& img : results)
    if (img.params != params || img.reports.size() != params.size())
      throw std::invalid_argument("ods_ois_eval: ragged parameter grid");

  OdsOis out;
  bool first = true;
  for (std::size_t j = 0; j < params.size(); ++j) {
    double mean = 0.0;
    for (const auto& img : results) mean += metric_value(img.reports[j], metric);
    mean /= static_cast<double>(results.size());
    if (first || metric_improves(metric, mean, out.ods)) {
      out.ods = mean;
      out.best_param = params[j];
      first = false;
    }
  }
  double ois_sum = 0.0;
  for (const auto& img : results) {
    double best = metric_value(img.reports[0], metric);
    for (std::size_t j = 1; j < params.size(); ++j) {
      const double v = metric_value(img.reports[j], metric);
      if (metric_improves(metric, v, best)) best = v;
    }
    ois_sum += best;
  }
  out.ois = ois_sum / static_cast<double>(results.size());
  return out;
}

}  // namespace treecut

#endif
