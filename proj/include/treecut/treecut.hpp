#ifndef TREECUT_TREECUT_HPP
#define TREECUT_TREECUT_HPP

#include "treecut/agglomerate.hpp"
#include "treecut/cut.hpp"
#include "treecut/errors.hpp"
#include "treecut/image.hpp"
#include "treecut/likelihood.hpp"
#include "treecut/metrics.hpp"
#include "treecut/model.hpp"
#include "treecut/numeric.hpp"
#include "treecut/parallel.hpp"
#include "treecut/pnm.hpp"
#include "treecut/region_tree.hpp"
#include "treecut/superpixels.hpp"
#include "treecut/tuning.hpp"

#endif
