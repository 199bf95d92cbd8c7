#include <catch2/catch.hpp>

#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"

using namespace treecut;
using testutil::cut_key;

namespace {

RegionTree single_leaf_tree() {
  std::vector<RegionNode> nodes(1);
  nodes[0] = {0, std::nullopt, {}, {0}, std::nullopt};
  return RegionTree(std::move(nodes), 0);
}

// The worked two-leaf example: p_root = 0.5, region likelihoods 0.2 at the
// root and 0.6, 0.5 at the leaves, so p(Y) = 0.5*0.2 + 0.5*(0.6*0.5) = 0.25.
struct TwoLeafExample {
  RegionTree tree = testutil::two_leaf_tree();
  ModelParams params{{1.0, 1.0, 0.5}};
  std::vector<double> logliks{std::log(0.6), std::log(0.5), std::log(0.2)};
};

}  // namespace

TEST_CASE("prior of the root-only cut is log p_root", "[model]") {
  const auto tree = testutil::two_leaf_tree();
  const ModelParams params{{1.0, 1.0, 0.9}};
  CHECK(prior_log_prob(tree, params, CutConfig{{2}}) ==
        Approx(std::log(0.9)).margin(1e-12));
}

TEST_CASE("three-level worked priors enumerate and sum to one", "[model]") {
  const auto tree = testutil::three_level_tree();
  ModelParams params{{1.0, 1.0, 1.0, 0.5, 0.9}};

  CHECK(std::exp(prior_log_prob(tree, params, CutConfig{{4}})) == Approx(0.9).margin(1e-12));
  CHECK(std::exp(prior_log_prob(tree, params, CutConfig{{2, 3}})) ==
        Approx(0.1 * 0.5).margin(1e-12));
  CHECK(std::exp(prior_log_prob(tree, params, CutConfig{{0, 1, 2}})) ==
        Approx(0.1 * 0.5).margin(1e-12));

  const auto cuts = enumerate_cuts(tree);
  REQUIRE(cuts.size() == 3);
  double mass = 0.0;
  for (const auto& cut : cuts) mass += std::exp(prior_log_prob(tree, params, cut));
  CHECK(mass == Approx(1.0).margin(1e-12));
}

TEST_CASE("prior rejects cuts violating OONAPP", "[model]") {
  const auto tree = testutil::three_level_tree();
  const auto params = global_params(tree, 0.5);
  CHECK_THROWS_AS(prior_log_prob(tree, params, CutConfig{{4, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(prior_log_prob(tree, params, CutConfig{{3}}), std::invalid_argument);
  CHECK_THROWS_AS(prior_log_prob(tree, params, CutConfig{}), std::invalid_argument);
}

TEST_CASE("prior normalization holds on random trees", "[model]") {
  Rng rng(20240101);
  for (int trial = 0; trial < 100; ++trial) {
    const int leaves = 2 + static_cast<int>(rng.below(11));
    const auto tree = testutil::random_tree(rng, leaves);
    const auto params = testutil::random_params(rng, tree);
    const auto cuts = enumerate_cuts(tree);
    double mass = 0.0;
    for (const auto& cut : cuts) mass += std::exp(prior_log_prob(tree, params, cut));
    REQUIRE(mass == Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("enumerate_cuts covers the expected configurations", "[model]") {
  CHECK(enumerate_cuts(single_leaf_tree()).size() == 1);

  const auto two = enumerate_cuts(testutil::two_leaf_tree());
  REQUIRE(two.size() == 2);
  std::set<std::string> keys;
  for (const auto& cut : two) keys.insert(cut_key(cut));
  CHECK(keys == std::set<std::string>{"2,", "0,1,"});

  // Full binary tree of depth 3: C(leaf)=1, C(mid)=2, C(root)=1+2*2=5.
  const auto tree = testutil::depth3_binary_tree();
  const auto cuts = enumerate_cuts(tree);
  REQUIRE(cuts.size() == 5);
  std::set<std::string> unique;
  for (const auto& cut : cuts) {
    CHECK(satisfies_oonapp(tree, cut));
    unique.insert(cut_key(cut));
  }
  CHECK(unique.size() == 5);
}

TEST_CASE("enumerate_cuts enforces its configuration cap", "[model]") {
  CHECK_THROWS_AS(enumerate_cuts(testutil::depth3_binary_tree(), 4), ResourceLimitError);
  CHECK_NOTHROW(enumerate_cuts(testutil::depth3_binary_tree(), 5));
}

TEST_CASE("total probability bottoms out at the leaf likelihood", "[model]") {
  const auto tree = single_leaf_tree();
  const ModelParams params{{1.0}};
  const std::vector<double> logliks{-3.25};
  CHECK(total_log_prob(tree, params, logliks) == Approx(-3.25).margin(1e-12));
}

TEST_CASE("two-leaf worked example sums both cuts", "[model]") {
  TwoLeafExample ex;
  CHECK(total_log_prob(ex.tree, ex.params, ex.logliks) ==
        Approx(std::log(0.25)).margin(1e-12));
}

TEST_CASE("total probability matches the enumeration oracle", "[model]") {
  Rng rng(7701);
  for (int trial = 0; trial < 50; ++trial) {
    const int leaves = 2 + static_cast<int>(rng.below(9));
    const auto tree = testutil::random_tree(rng, leaves);
    const auto params = testutil::random_params(rng, tree);
    const auto logliks = testutil::random_logliks(rng, tree, -5.0, 5.0);
    const auto cuts = enumerate_cuts(tree);
    const auto oracle = testutil::oracle_summary(tree, params, logliks, cuts);
    REQUIRE(total_log_prob(tree, params, logliks) ==
            Approx(oracle.total).margin(1e-9));
  }
}

TEST_CASE("MAP picks the better cut in the worked example", "[model]") {
  TwoLeafExample ex;
  const auto [cut, score] = map_cut(ex.tree, ex.params, ex.logliks);
  CHECK(cut == CutConfig{{0, 1}});
  CHECK(score == Approx(std::log(0.15)).margin(1e-12));
}

TEST_CASE("p_root = 1 forces the root regardless of likelihoods", "[model]") {
  const auto tree = testutil::two_leaf_tree();
  const ModelParams params{{1.0, 1.0, 1.0}};
  const std::vector<double> logliks{100.0, 100.0, -100.0};
  const auto [cut, score] = map_cut(tree, params, logliks);
  CHECK(cut == CutConfig{{2}});
  CHECK(score == Approx(-100.0).margin(1e-12));
  CHECK(sample_cut(tree, params, logliks, 1) == CutConfig{{2}});
}

TEST_CASE("MAP matches the enumeration oracle", "[model]") {
  Rng rng(7702);
  for (int trial = 0; trial < 50; ++trial) {
    const int leaves = 2 + static_cast<int>(rng.below(9));
    const auto tree = testutil::random_tree(rng, leaves);
    const auto params = testutil::random_params(rng, tree);
    const auto logliks = testutil::random_logliks(rng, tree, -5.0, 5.0);
    const auto oracle =
        testutil::oracle_summary(tree, params, logliks, enumerate_cuts(tree));
    const auto [cut, score] = map_cut(tree, params, logliks);
    REQUIRE(cut == oracle.map);
    REQUIRE(score == Approx(oracle.map_score).margin(1e-9));
    // Score consistency: the reported value is reproducible from the cut.
    REQUIRE(score ==
            Approx(prior_log_prob(tree, params, cut) +
                   [&] {
                     double lik = 0.0;
                     for (int id : cut.active) lik += logliks[tree.index_of(id)];
                     return lik;
                   }())
                .margin(1e-9));
  }
}

TEST_CASE("MAP ties break toward the coarser direct choice", "[model]") {
  // Constant likelihood contributions and p = 0.5 make root vs leaves tie
  // exactly: 0.5 * L vs 0.5 * (1 * L)(1 * ...) with matched tables.
  const auto tree = testutil::two_leaf_tree();
  const ModelParams params{{1.0, 1.0, 0.5}};
  const std::vector<double> logliks{std::log(0.5), std::log(0.5), 2 * std::log(0.5)};
  const auto [cut, score] = map_cut(tree, params, logliks);
  CHECK(cut == CutConfig{{2}});
}

TEST_CASE("sampling the worked example activates the root 40% of the time", "[model]") {
  TwoLeafExample ex;
  const auto tables = compute_posterior_tables(ex.tree, ex.params, ex.logliks);
  Rng rng(424242);
  const int n = 100000;
  int roots = 0;
  for (int i = 0; i < n; ++i)
    if (sample_cut(ex.tree, tables, rng).active == std::vector<int>{2}) ++roots;
  CHECK(std::abs(roots / static_cast<double>(n) - 0.4) < 0.005);
}

TEST_CASE("sampled cut frequencies match the exact posterior", "[model]") {
  const auto tree = testutil::depth3_binary_tree();
  ModelParams params{{1, 1, 1, 1, 0.35, 0.6, 0.45}};
  const std::vector<double> logliks{-0.2, 0.4, -0.7, 0.3, 0.25, -0.5, 0.6};
  const auto cuts = enumerate_cuts(tree);
  REQUIRE(cuts.size() == 5);
  const auto oracle = testutil::oracle_summary(tree, params, logliks, cuts);

  const auto tables = compute_posterior_tables(tree, params, logliks);
  Rng rng(99);
  std::map<std::string, double> freq;
  const int n = 100000;
  for (int i = 0; i < n; ++i) freq[cut_key(sample_cut(tree, tables, rng))] += 1.0 / n;

  double tv = 0.0;
  for (const auto& [key, prob] : oracle.posterior) tv += std::abs(prob - freq[key]);
  for (const auto& [key, prob] : freq)
    if (!oracle.posterior.count(key)) tv += prob;
  tv /= 2.0;
  CHECK(tv < 0.01);
}

TEST_CASE("sampling stays exact on n-ary trees", "[model]") {
  // Ternary root over a pair node and two leaves; arity must not matter.
  std::vector<RegionNode> nodes(6);
  nodes[0] = {0, 4, {}, {0}, std::nullopt};
  nodes[1] = {1, 4, {}, {1}, std::nullopt};
  nodes[2] = {2, 5, {}, {2}, std::nullopt};
  nodes[3] = {3, 5, {}, {3}, std::nullopt};
  nodes[4] = {4, 5, {0, 1}, {0, 1}, std::nullopt};
  nodes[5] = {5, std::nullopt, {2, 3, 4}, {0, 1, 2, 3}, std::nullopt};
  const RegionTree tree(std::move(nodes), 5);
  const ModelParams params{{1, 1, 1, 1, 0.55, 0.3}};
  const std::vector<double> logliks{0.1, -0.4, 0.2, -0.3, 0.5, 0.35};

  const auto cuts = enumerate_cuts(tree);
  REQUIRE(cuts.size() == 3);  // {root}, {2,3,4}, {0,1,2,3}
  const auto oracle = testutil::oracle_summary(tree, params, logliks, cuts);
  const auto tables = compute_posterior_tables(tree, params, logliks);
  Rng rng(4242);
  std::map<std::string, double> freq;
  const int n = 100000;
  for (int i = 0; i < n; ++i) freq[cut_key(sample_cut(tree, tables, rng))] += 1.0 / n;
  double tv = 0.0;
  for (const auto& [key, prob] : oracle.posterior)
    tv += std::abs(prob - (freq.count(key) ? freq.at(key) : 0.0));
  tv /= 2.0;
  CHECK(tv < 0.01);
}

TEST_CASE("cuts expose their implied z assignment", "[model]") {
  const auto tree = testutil::three_level_tree();
  // Active {a=3, b=2}: root off, everything else on.
  const auto z = cut_z_assignment(tree, CutConfig{{2, 3}});
  CHECK(z[tree.index_of(4)] == 0);
  for (int id : {0, 1, 2, 3}) CHECK(z[tree.index_of(id)] == 1);

  const auto z_root = cut_z_assignment(tree, CutConfig{{4}});
  for (int i = 0; i < tree.size(); ++i) CHECK(z_root[i] == 1);

  const auto z_leaves = cut_z_assignment(tree, CutConfig{{0, 1, 2}});
  CHECK(z_leaves[tree.index_of(4)] == 0);
  CHECK(z_leaves[tree.index_of(3)] == 0);
  CHECK_THROWS_AS(cut_z_assignment(tree, CutConfig{{3}}), std::invalid_argument);
}

TEST_CASE("sampling is deterministic and structurally valid", "[model]") {
  Rng rng(5150);
  const auto tree = testutil::random_tree(rng, 7);
  const auto params = testutil::random_params(rng, tree);
  const auto logliks = testutil::random_logliks(rng, tree, -3.0, 3.0);
  CHECK(sample_cut(tree, params, logliks, 77) == sample_cut(tree, params, logliks, 77));

  const auto tables = compute_posterior_tables(tree, params, logliks);
  Rng sampler(13);
  for (int i = 0; i < 200; ++i)
    REQUIRE(satisfies_oonapp(tree, sample_cut(tree, tables, sampler)));
}

TEST_CASE("root activation marginal equals its direct posterior share", "[model]") {
  TwoLeafExample ex;
  const auto tables = compute_posterior_tables(ex.tree, ex.params, ex.logliks);
  const auto marg = node_marginals(ex.tree, tables);
  const int root = ex.tree.root_index();
  CHECK(marg.active[root] ==
        Approx(std::exp(tables.direct[root] - tables.total[root])).margin(1e-12));
  CHECK(marg.active[root] == Approx(0.4).margin(1e-12));
  CHECK(marg.z1[root] == Approx(marg.active[root]).margin(1e-12));
}

TEST_CASE("node marginals match the enumeration oracle", "[model]") {
  Rng rng(7703);
  for (int trial = 0; trial < 50; ++trial) {
    const int leaves = 2 + static_cast<int>(rng.below(9));
    const auto tree = testutil::random_tree(rng, leaves);
    const auto params = testutil::random_params(rng, tree);
    const auto logliks = testutil::random_logliks(rng, tree, -5.0, 5.0);
    const auto cuts = enumerate_cuts(tree);
    const auto oracle = testutil::oracle_summary(tree, params, logliks, cuts);
    const auto marg = node_marginals(tree, params, logliks);
    for (int i = 0; i < tree.size(); ++i)
      REQUIRE(marg.active[i] == Approx(oracle.active_marginal[i]).margin(1e-9));

    // z_i = 1 exactly when the path's active node is i or one of its
    // ancestors; recompute that from the enumeration.
    std::vector<double> z1(tree.size(), 0.0);
    for (const auto& cut : cuts) {
      const double w = oracle.posterior.at(cut_key(cut));
      std::set<int> active(cut.active.begin(), cut.active.end());
      for (int i = 0; i < tree.size(); ++i) {
        int walk = i;
        bool on = false;
        while (true) {
          if (active.count(tree.node(walk).id)) {
            on = true;
            break;
          }
          if (!tree.node(walk).parent) break;
          walk = tree.index_of(*tree.node(walk).parent);
        }
        if (on) z1[i] += w;
      }
    }
    for (int i = 0; i < tree.size(); ++i)
      REQUIRE(marg.z1[i] == Approx(z1[i]).margin(1e-9));
  }
}

TEST_CASE("activation mass covers each pixel exactly once", "[model]") {
  Rng rng(7704);
  for (int trial = 0; trial < 30; ++trial) {
    const int leaves = 2 + static_cast<int>(rng.below(11));
    const auto tree = testutil::random_tree(rng, leaves);
    const auto params = testutil::random_params(rng, tree);
    const auto logliks = testutil::random_logliks(rng, tree, -50.0, 50.0);

    // Leaf weights stand in for superpixel pixel counts.
    std::vector<double> weight(tree.size(), 0.0);
    double total_pixels = 0.0;
    for (int idx : tree.post_order()) {
      if (tree.node(idx).is_leaf()) {
        weight[idx] = 1.0 + static_cast<double>(rng.below(64));
        total_pixels += weight[idx];
      } else {
        for (int c : tree.children_of(idx)) weight[idx] += weight[c];
      }
    }

    const auto marg = node_marginals(tree, params, logliks);
    double mass = 0.0;
    for (int i = 0; i < tree.size(); ++i) mass += marg.active[i] * weight[i];
    REQUIRE(mass == Approx(total_pixels).epsilon(1e-6));
  }
}

TEST_CASE("extreme global p forces the extreme segmentations", "[model]") {
  // With |loglik| <= 0.5 the total likelihood advantage of any cut is below
  // |log 1e-9| = 20.7, so the prior decides at both extremes.
  Rng rng(7705);
  for (int trial = 0; trial < 25; ++trial) {
    const int leaves = 2 + static_cast<int>(rng.below(9));
    const auto tree = testutil::random_tree(rng, leaves);
    const auto logliks = testutil::random_logliks(rng, tree, -0.5, 0.5);

    const auto coarse = map_cut(tree, global_params(tree, 1.0 - 1e-9), logliks).first;
    REQUIRE(coarse == CutConfig{{tree.root_id()}});

    const auto fine = map_cut(tree, global_params(tree, 1e-9), logliks).first;
    REQUIRE(static_cast<int>(fine.active.size()) == tree.num_leaves());
    for (int id : fine.active) REQUIRE(tree.node(tree.index_of(id)).is_leaf());
  }
}

TEST_CASE("hard 0/1 activation probabilities stay exact", "[model]") {
  // A mix of p = 0, p = 1, and interior values exercises the -inf branches
  // of the log-space recursions.
  Rng rng(7706);
  for (int trial = 0; trial < 30; ++trial) {
    const int leaves = 2 + static_cast<int>(rng.below(7));
    const auto tree = testutil::random_tree(rng, leaves);
    ModelParams params;
    params.p.resize(tree.size());
    for (int i = 0; i < tree.size(); ++i) {
      if (tree.node(i).is_leaf()) {
        params.p[i] = 1.0;
      } else {
        const auto roll = rng.below(4);
        params.p[i] = roll == 0 ? 0.0 : roll == 1 ? 1.0 : rng.uniform01();
      }
    }
    const auto logliks = testutil::random_logliks(rng, tree, -4.0, 4.0);
    const auto cuts = enumerate_cuts(tree);
    const auto oracle = testutil::oracle_summary(tree, params, logliks, cuts);
    REQUIRE(std::isfinite(oracle.total));
    REQUIRE(total_log_prob(tree, params, logliks) ==
            Approx(oracle.total).margin(1e-9));
    const auto [cut, score] = map_cut(tree, params, logliks);
    REQUIRE(score == Approx(oracle.map_score).margin(1e-9));
    REQUIRE(satisfies_oonapp(tree, cut));
    const auto marg = node_marginals(tree, params, logliks);
    for (int i = 0; i < tree.size(); ++i)
      REQUIRE(marg.active[i] == Approx(oracle.active_marginal[i]).margin(1e-9));
  }
}

TEST_CASE("cuts render to segmentations region by region", "[model]") {
  const auto img = testutil::halves_image(4, 4);
  const auto sp = grid_superpixels(img, 2);
  const auto tree = testutil::depth3_binary_tree();
  check_tree_matches(tree, sp);

  const auto root_seg = cut_to_segmentation(CutConfig{{6}}, tree, sp);
  CHECK(root_seg.num_regions == 1);
  for (int v : root_seg.labels) CHECK(v == 0);

  const auto leaf_seg = cut_to_segmentation(CutConfig{{0, 1, 2, 3}}, tree, sp);
  CHECK(leaf_seg.num_regions == 4);
  CHECK(leaf_seg.labels == sp.labels);

  const auto mixed = cut_to_segmentation(CutConfig{{4, 2, 3}}, tree, sp);
  CHECK(mixed.num_regions == 3);

  CHECK_THROWS_AS(cut_to_segmentation(CutConfig{{4, 5, 6}}, tree, sp),
                  std::invalid_argument);
}

TEST_CASE("a four-node cut yields a four-region segmentation", "[model]") {
  const auto img = testutil::halves_image(8, 8);
  const auto sp = grid_superpixels(img, 2);  // 16 superpixels
  const auto tree = build_tree_agglomerative(img, sp);
  const auto cuts = enumerate_cuts(tree, 2000000);
  for (const auto& cut : cuts) {
    if (cut.active.size() == 4) {
      const auto seg = cut_to_segmentation(cut, tree, sp);
      CHECK(seg.num_regions == 4);
      std::set<int> distinct(seg.labels.begin(), seg.labels.end());
      CHECK(distinct.size() == 4);
      return;
    }
  }
  FAIL("no 4-node cut found");
}

TEST_CASE("cut JSON round-trips", "[model]") {
  const CutConfig cut{{0, 3, 7}};
  CHECK(import_cut(export_cut(cut)) == cut);
  CHECK(export_cut(cut) == "{\"active\":[0,3,7]}\n");
  CHECK_THROWS_AS(import_cut("{\"active\": [1.5]}"), ValidationError);
  CHECK_THROWS_AS(import_cut("not json"), ValidationError);
}

TEST_CASE("model params validate leaf pinning and range", "[model]") {
  const auto tree = testutil::two_leaf_tree();
  CHECK_THROWS_AS(validate_params(tree, ModelParams{{0.5, 1.0, 0.5}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_params(tree, ModelParams{{1.0, 1.0, 1.5}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(global_params(tree, -0.1), std::invalid_argument);
  CHECK_NOTHROW(validate_params(tree, global_params(tree, 0.0)));
  CHECK_NOTHROW(validate_params(tree, global_params(tree, 1.0)));
}
