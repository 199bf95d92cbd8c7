#ifndef TREECUT_AGGLOMERATE_HPP
#define TREECUT_AGGLOMERATE_HPP

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "treecut/image.hpp"
#include "treecut/region_tree.hpp"

namespace treecut {

// Binary tree built by repeatedly merging the pair of spatially adjacent
// regions whose mean colors are closest (Euclidean). Ties break on the
// (min node id, max node id) pair, so trees are bit-reproducible. Leaf node
// ids equal superpixel ids; merge nodes continue upward from S. Internal
// nodes record the merge distance, scaled into [0,1], as ucm_weight.
inline RegionTree build_tree_agglomerative(const Image& img, const SuperpixelMap& sp) {
  if (img.width != sp.width || img.height != sp.height)
    throw std::invalid_argument("build_tree_agglomerative: image and superpixel "
                                "dimensions differ");
  const int s = sp.num_superpixels;

  struct Region {
    Color sum{0, 0, 0};
    long long count = 0;
    std::set<int> adjacent;  // node ids of adjacent live regions
  };
  std::vector<Region> regions(2 * s - 1);
  std::vector<RegionNode> nodes(2 * s - 1);
  for (int i = 0; i < s; ++i) {
    nodes[i].id = i;
    nodes[i].superpixels = {i};
  }
  for (int y = 0; y < sp.height; ++y)
    for (int x = 0; x < sp.width; ++x) {
      const int a = sp.at(x, y);
      const Color& px = img.at(x, y);
      for (int ch = 0; ch < 3; ++ch) regions[a].sum[ch] += px[ch];
      ++regions[a].count;
      if (x + 1 < sp.width && sp.at(x + 1, y) != a) {
        regions[a].adjacent.insert(sp.at(x + 1, y));
        regions[sp.at(x + 1, y)].adjacent.insert(a);
      }
      if (y + 1 < sp.height && sp.at(x, y + 1) != a) {
        regions[a].adjacent.insert(sp.at(x, y + 1));
        regions[sp.at(x, y + 1)].adjacent.insert(a);
      }
    }

  std::set<int> live;
  for (int i = 0; i < s; ++i) live.insert(i);

  auto mean_dist2 = [&](int a, int b) {
    double d = 0;
    for (int ch = 0; ch < 3; ++ch) {
      const double diff = regions[a].sum[ch] / regions[a].count -
                          regions[b].sum[ch] / regions[b].count;
      d += diff * diff;
    }
    return d;
  };

  int next_id = s;
  for (int merge = 0; merge < s - 1; ++merge) {
    int best_a = -1, best_b = -1;
    double best_d = 0;
    for (int a : live)
      for (int b : regions[a].adjacent) {
        if (b <= a) continue;
        const double d = mean_dist2(a, b);
        if (best_a < 0 || d < best_d ||
            (d == best_d && (a < best_a || (a == best_a && b < best_b)))) {
          best_d = d;
          best_a = a;
          best_b = b;
        }
      }
    if (best_a < 0)
      throw ValidationError("build_tree_agglomerative: disconnected superpixel map");

    const int id = next_id++;
    nodes[id].id = id;
    nodes[id].children = {best_a, best_b};
    nodes[id].superpixels = nodes[best_a].superpixels;
    nodes[id].superpixels.insert(nodes[id].superpixels.end(),
                                 nodes[best_b].superpixels.begin(),
                                 nodes[best_b].superpixels.end());
    nodes[id].ucm_weight = std::sqrt(best_d / 3.0);  // max RGB distance is sqrt(3)
    nodes[best_a].parent = id;
    nodes[best_b].parent = id;

    Region& merged = regions[id];
    for (int ch = 0; ch < 3; ++ch)
      merged.sum[ch] = regions[best_a].sum[ch] + regions[best_b].sum[ch];
    merged.count = regions[best_a].count + regions[best_b].count;
    for (int n : regions[best_a].adjacent)
      if (n != best_b) merged.adjacent.insert(n);
    for (int n : regions[best_b].adjacent)
      if (n != best_a) merged.adjacent.insert(n);
    for (int n : merged.adjacent) {
      regions[n].adjacent.erase(best_a);
      regions[n].adjacent.erase(best_b);
      regions[n].adjacent.insert(id);
    }
    live.erase(best_a);
    live.erase(best_b);
    live.insert(id);
  }

  return RegionTree(std::move(nodes), next_id - 1);
}

}  // namespace treecut

#endif
