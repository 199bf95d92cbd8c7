#ifndef TREECUT_IMAGE_HPP
#define TREECUT_IMAGE_HPP

#include <array>
#include <cstddef>
#include <queue>
#include <string>
#include <vector>

#include "treecut/errors.hpp"

namespace treecut {

using Color = std::array<double, 3>;  // RGB, each channel in [0, 1]

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Color> pixels;  // row major

  std::size_t size() const { return pixels.size(); }
  const Color& at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  Color& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

// Leaves of the region tree: ids are contiguous 0..S-1, every id occurs,
// and each id's pixel set is 4-connected.
struct SuperpixelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // row major superpixel ids
  int num_superpixels = 0;

  int at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
};

// A per-pixel partition with contiguous region ids 0..R-1.
struct Segmentation {
  int width = 0;
  int height = 0;
  std::vector<int> labels;
  int num_regions = 0;

  int at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }

  // Builds a Segmentation from an arbitrary non-negative label map,
  // renumbering ids contiguously in order of first appearance.
  static Segmentation from_labels(int width, int height,
                                  const std::vector<int>& raw) {
    if (width < 1 || height < 1 ||
        raw.size() != static_cast<std::size_t>(width) * height)
      throw ValidationError("segmentation: label array does not match dimensions");
    Segmentation seg;
    seg.width = width;
    seg.height = height;
    seg.labels.resize(raw.size());
    std::vector<int> remap;
    int next = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const int v = raw[i];
      if (v < 0) throw ValidationError("segmentation: negative label");
      if (static_cast<std::size_t>(v) >= remap.size())
        remap.resize(static_cast<std::size_t>(v) + 1, -1);
      if (remap[v] < 0) remap[v] = next++;
      seg.labels[i] = remap[v];
    }
    seg.num_regions = next;
    return seg;
  }
};

inline void validate(const Image& img) {
  if (img.width < 1 || img.height < 1)
    throw ValidationError("image: non-positive dimensions");
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
    throw ValidationError("image: pixel array does not match dimensions");
  for (const Color& c : img.pixels)
    for (double v : c)
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("image: channel value outside [0,1]");
}

namespace detail {

// Number of 4-connected components carrying the given label that contain
// at least one pixel. Used to verify superpixel connectivity.
inline int count_components(int width, int height, const std::vector<int>& labels,
                            int label) {
  std::vector<char> seen(labels.size(), 0);
  int components = 0;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (labels[start] != label || seen[start]) continue;
    ++components;
    std::queue<std::size_t> frontier;
    frontier.push(start);
    seen[start] = 1;
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop();
      const int x = static_cast<int>(p % width);
      const int y = static_cast<int>(p / width);
      const int dx[4] = {1, -1, 0, 0};
      const int dy[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int nx = x + dx[k];
        const int ny = y + dy[k];
        if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
        const std::size_t q = static_cast<std::size_t>(ny) * width + nx;
        if (!seen[q] && labels[q] == label) {
          seen[q] = 1;
          frontier.push(q);
        }
      }
    }
  }
  return components;
}

}  // namespace detail

inline void validate(const SuperpixelMap& sp) {
  if (sp.width < 1 || sp.height < 1)
    throw ValidationError("superpixels: non-positive dimensions");
  if (sp.labels.size() != static_cast<std::size_t>(sp.width) * sp.height)
    throw ValidationError("superpixels: label array does not match dimensions");
  if (sp.num_superpixels < 1)
    throw ValidationError("superpixels: empty map");
  std::vector<char> present(sp.num_superpixels, 0);
  for (int v : sp.labels) {
    if (v < 0 || v >= sp.num_superpixels)
      throw ValidationError("superpixels: label " + std::to_string(v) +
                            " outside 0.." + std::to_string(sp.num_superpixels - 1));
    present[v] = 1;
  }
  for (int id = 0; id < sp.num_superpixels; ++id)
    if (!present[id])
      throw ValidationError("superpixels: id " + std::to_string(id) + " never occurs");
  for (int id = 0; id < sp.num_superpixels; ++id)
    if (detail::count_components(sp.width, sp.height, sp.labels, id) != 1)
      throw ValidationError("superpixels: id " + std::to_string(id) +
                            " is not 4-connected");
}

inline void validate(const Segmentation& seg) {
  if (seg.width < 1 || seg.height < 1)
    throw ValidationError("segmentation: non-positive dimensions");
  if (seg.labels.size() != static_cast<std::size_t>(seg.width) * seg.height)
    throw ValidationError("segmentation: label array does not match dimensions");
  std::vector<char> present(seg.num_regions, 0);
  for (int v : seg.labels) {
    if (v < 0 || v >= seg.num_regions)
      throw ValidationError("segmentation: label outside 0..R-1");
    present[v] = 1;
  }
  for (int id = 0; id < seg.num_regions; ++id)
    if (!present[id])
      throw ValidationError("segmentation: region id " + std::to_string(id) +
                            " never occurs");
}

}  // namespace treecut

#endif
