#ifndef TREECUT_SUPERPIXELS_HPP
#define TREECUT_SUPERPIXELS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <stdexcept>
#include <vector>

#include "treecut/image.hpp"
#include "treecut/numeric.hpp"

namespace treecut {

// Axis-aligned tiling; the rightmost/bottom cells absorb the remainder.
// Ids run in row-major cell order.
inline SuperpixelMap grid_superpixels(const Image& img, int cell) {
  if (cell < 1 || cell > std::min(img.width, img.height))
    throw std::invalid_argument("grid_superpixels: cell size " + std::to_string(cell) +
                                " out of range for " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + " image");
  const int nx = img.width / cell;
  const int ny = img.height / cell;
  SuperpixelMap sp;
  sp.width = img.width;
  sp.height = img.height;
  sp.num_superpixels = nx * ny;
  sp.labels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    const int cy = std::min(y / cell, ny - 1);
    for (int x = 0; x < img.width; ++x) {
      const int cx = std::min(x / cell, nx - 1);
      sp.labels[static_cast<std::size_t>(y) * img.width + x] = cy * nx + cx;
    }
  }
  return sp;
}

namespace detail {

// Relabels connected components that are not their label's largest one to
// the most frequent 4-neighbor label, repeating until every label is one
// 4-connected region, then renumbers contiguously in row-major
// first-appearance order. Each relabel absorbs a component into an adjacent
// one, so the loop terminates.
inline SuperpixelMap enforce_connectivity(int width, int height,
                                          std::vector<int> labels) {
  const std::size_t n = labels.size();
  struct Component {
    int label;
    std::vector<std::size_t> pixels;
  };
  const int dx[4] = {1, -1, 0, 0};
  const int dy[4] = {0, 0, 1, -1};

  while (true) {
    std::vector<int> comp(n, -1);
    std::vector<Component> comps;
    for (std::size_t start = 0; start < n; ++start) {
      if (comp[start] >= 0) continue;
      const int id = static_cast<int>(comps.size());
      comps.push_back({labels[start], {}});
      std::queue<std::size_t> frontier;
      frontier.push(start);
      comp[start] = id;
      while (!frontier.empty()) {
        const std::size_t p = frontier.front();
        frontier.pop();
        comps[id].pixels.push_back(p);
        const int x = static_cast<int>(p % width);
        const int y = static_cast<int>(p / width);
        for (int k = 0; k < 4; ++k) {
          const int nx2 = x + dx[k];
          const int ny2 = y + dy[k];
          if (nx2 < 0 || nx2 >= width || ny2 < 0 || ny2 >= height) continue;
          const std::size_t q = static_cast<std::size_t>(ny2) * width + nx2;
          if (comp[q] < 0 && labels[q] == labels[start]) {
            comp[q] = id;
            frontier.push(q);
          }
        }
      }
    }

    // Largest component keeps its label; ties go to the earliest component.
    std::map<int, int> keeper;  // label -> component id
    for (int id = 0; id < static_cast<int>(comps.size()); ++id) {
      auto it = keeper.find(comps[id].label);
      if (it == keeper.end())
        keeper[comps[id].label] = id;
      else if (comps[id].pixels.size() > comps[it->second].pixels.size())
        it->second = id;
    }

    // Orphans, in discovery order, take their dominant 4-neighbor label;
    // labels mutate as the sweep runs, and each relabel fuses the orphan
    // with an adjacent region, so the component count drops every sweep.
    bool any_orphan = false;
    for (int id = 0; id < static_cast<int>(comps.size()); ++id) {
      if (keeper[comps[id].label] == id) continue;
      any_orphan = true;
      std::map<int, int> votes;
      for (std::size_t p : comps[id].pixels) {
        const int x = static_cast<int>(p % width);
        const int y = static_cast<int>(p / width);
        for (int k = 0; k < 4; ++k) {
          const int nx2 = x + dx[k];
          const int ny2 = y + dy[k];
          if (nx2 < 0 || nx2 >= width || ny2 < 0 || ny2 >= height) continue;
          const std::size_t q = static_cast<std::size_t>(ny2) * width + nx2;
          if (comp[q] != id) ++votes[labels[q]];
        }
      }
      int best_label = comps[id].label;
      int best_votes = -1;
      for (const auto& [label, count] : votes)
        if (count > best_votes) {
          best_votes = count;
          best_label = label;
        }
      for (std::size_t p : comps[id].pixels) labels[p] = best_label;
    }
    if (!any_orphan) break;
  }

  std::vector<int> remap;
  int next = 0;
  SuperpixelMap sp;
  sp.width = width;
  sp.height = height;
  sp.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int v = labels[i];
    if (static_cast<std::size_t>(v) >= remap.size())
      remap.resize(static_cast<std::size_t>(v) + 1, -1);
    if (remap[v] < 0) remap[v] = next++;
    sp.labels[i] = remap[v];
  }
  sp.num_superpixels = next;
  return sp;
}

}  // namespace detail

// SLIC-style local k-means over (color, scaled position), grid seeded,
// followed by a connectivity-enforcement pass. Deterministic for a fixed
// seed; the seed only matters when empty clusters need reseeding.
inline SuperpixelMap color_superpixels(const Image& img, int target_count,
                                       std::uint64_t seed) {
  const long long total = static_cast<long long>(img.width) * img.height;
  if (target_count < 1 || target_count > total)
    throw std::invalid_argument("color_superpixels: target_count " +
                                std::to_string(target_count) + " out of range");

  const double step = std::sqrt(static_cast<double>(total) / target_count);
  const int nx = std::clamp(static_cast<int>(std::lround(img.width / step)), 1, img.width);
  const int ny = std::clamp(static_cast<int>(std::lround(img.height / step)), 1, img.height);
  const int k = nx * ny;
  const double spatial = 0.15 / step;  // compactness weight per pixel of offset

  struct Center {
    Color color;
    double x, y;
  };
  std::vector<Center> centers(k);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int sx = std::min(static_cast<int>((i + 0.5) * img.width / nx), img.width - 1);
      const int sy = std::min(static_cast<int>((j + 0.5) * img.height / ny), img.height - 1);
      centers[j * nx + i] = {img.at(sx, sy), static_cast<double>(sx),
                             static_cast<double>(sy)};
    }

  Rng rng(seed);
  std::vector<int> assign(static_cast<std::size_t>(total), -1);
  const int iters = 10;
  for (int iter = 0; iter < iters; ++iter) {
    std::vector<double> best(static_cast<std::size_t>(total),
                             std::numeric_limits<double>::infinity());
    std::fill(assign.begin(), assign.end(), -1);
    const int radius = static_cast<int>(std::ceil(2.0 * step));
    for (int c = 0; c < k; ++c) {
      const int x0 = std::max(0, static_cast<int>(centers[c].x) - radius);
      const int x1 = std::min(img.width - 1, static_cast<int>(centers[c].x) + radius);
      const int y0 = std::max(0, static_cast<int>(centers[c].y) - radius);
      const int y1 = std::min(img.height - 1, static_cast<int>(centers[c].y) + radius);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const Color& px = img.at(x, y);
          const double dc0 = px[0] - centers[c].color[0];
          const double dc1 = px[1] - centers[c].color[1];
          const double dc2 = px[2] - centers[c].color[2];
          const double dsx = spatial * (x - centers[c].x);
          const double dsy = spatial * (y - centers[c].y);
          const double d = dc0 * dc0 + dc1 * dc1 + dc2 * dc2 + dsx * dsx + dsy * dsy;
          const std::size_t p = static_cast<std::size_t>(y) * img.width + x;
          if (d < best[p]) {
            best[p] = d;
            assign[p] = c;
          }
        }
    }
    // Pixels outside every search window fall back to a global scan.
    for (std::size_t p = 0; p < assign.size(); ++p) {
      if (assign[p] >= 0) continue;
      const int x = static_cast<int>(p % img.width);
      const int y = static_cast<int>(p / img.width);
      const Color& px = img.pixels[p];
      for (int c = 0; c < k; ++c) {
        const double dc0 = px[0] - centers[c].color[0];
        const double dc1 = px[1] - centers[c].color[1];
        const double dc2 = px[2] - centers[c].color[2];
        const double dsx = spatial * (x - centers[c].x);
        const double dsy = spatial * (y - centers[c].y);
        const double d = dc0 * dc0 + dc1 * dc1 + dc2 * dc2 + dsx * dsx + dsy * dsy;
        if (d < best[p]) {
          best[p] = d;
          assign[p] = c;
        }
      }
    }

    std::vector<Center> sums(k, {{0, 0, 0}, 0, 0});
    std::vector<long long> counts(k, 0);
    for (std::size_t p = 0; p < assign.size(); ++p) {
      const int c = assign[p];
      const Color& px = img.pixels[p];
      for (int ch = 0; ch < 3; ++ch) sums[c].color[ch] += px[ch];
      sums[c].x += static_cast<double>(p % img.width);
      sums[c].y += static_cast<double>(p / img.width);
      ++counts[c];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Reseed an empty cluster at a random pixel.
        const std::size_t p = rng.below(static_cast<std::uint64_t>(total));
        centers[c] = {img.pixels[p], static_cast<double>(p % img.width),
                      static_cast<double>(p / img.width)};
        continue;
      }
      for (int ch = 0; ch < 3; ++ch) centers[c].color[ch] = sums[c].color[ch] / counts[c];
      centers[c].x = sums[c].x / counts[c];
      centers[c].y = sums[c].y / counts[c];
    }
  }

  return detail::enforce_connectivity(img.width, img.height, assign);
}

}  // namespace treecut

#endif
