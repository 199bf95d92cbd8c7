#ifndef TREECUT_CUT_HPP
#define TREECUT_CUT_HPP

#include <algorithm>
#include <vector>

namespace treecut {

// A set of active node ids. Valid cuts satisfy OONAPP: exactly one active
// node on every root-to-leaf path.
struct CutConfig {
  std::vector<int> active;  // sorted ascending, unique

  void normalize() {
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
  }

  bool operator==(const CutConfig& other) const { return active == other.active; }
};

}  // namespace treecut

#endif
