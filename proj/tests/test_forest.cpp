#include <catch2/catch_amalgamated.hpp>
#include <chrono>
#include <cmath>

#include "expertise/forest.hpp"

using namespace expertise;
using Catch::Matchers::ContainsSubstring;

namespace {

// Build a labeled dataset from per-column value lists (nullopt = missing).
Dataset make_dataset(const std::vector<Label>& labels,
                     const std::vector<std::pair<std::string, std::vector<std::optional<double>>>>& cols) {
  Dataset d;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    d.session_ids.push_back("s" + std::to_string(i));
    d.labels.push_back(labels[i]);
  }
  for (const auto& [name, values] : cols) d.add_column(name, values);
  return d;
}

// 2-feature set separable on x0: novices in [0,1], experts in [2,3].
Dataset separable_dataset(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Label> labels;
  std::vector<std::optional<double>> x0, x1;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    bool expert = i >= per_class;
    labels.push_back(expert ? Label::Expert : Label::Novice);
    x0.push_back(rng.uniform01() + (expert ? 2.0 : 0.0));
    x1.push_back(rng.uniform01());
  }
  return make_dataset(labels, {{"x0", x0}, {"x1", x1}});
}

}  // namespace

TEST_CASE("gini impurity endpoints") {
  CHECK(gini_impurity({5, 5}) == 0.5);
  CHECK(gini_impurity({10, 0}) == 0.0);
  CHECK(gini_impurity({3, 1}) == 0.375);
  CHECK_THROWS_AS(gini_impurity({0, 0}), Error);
}

TEST_CASE("best split on a 1-D separable node") {
  Dataset d = make_dataset({Label::Novice, Label::Novice, Label::Expert, Label::Expert},
                           {{"x", {{1.0}, {2.0}, {8.0}, {9.0}}}});
  auto split = best_split(d, {0, 1, 2, 3}, {0});
  REQUIRE(split.has_value());
  CHECK(split->column == 0);
  CHECK(split->threshold == 5.0);
  CHECK(split->score == 0.0);

  SECTION("exhaustive midpoint oracle agrees") {
    // Candidate thresholds 1.5, 5.0, 8.5; recompute weighted Gini directly.
    double best_score = 1e9, best_threshold = 0.0;
    for (double t : {1.5, 5.0, 8.5}) {
      std::array<std::int64_t, 2> l{0, 0}, r{0, 0};
      for (std::size_t i = 0; i < 4; ++i) {
        bool expert = i >= 2;
        if (*d.rows[i][0] <= t)
          ++l[expert ? 1 : 0];
        else
          ++r[expert ? 1 : 0];
      }
      double nl = static_cast<double>(l[0] + l[1]), nr = static_cast<double>(r[0] + r[1]);
      double s = (nl * gini_impurity(l) + nr * gini_impurity(r)) / 4.0;
      if (s < best_score) {
        best_score = s;
        best_threshold = t;
      }
    }
    CHECK(split->threshold == best_threshold);
    CHECK(split->score == best_score);
  }

  SECTION("pure nodes and constant features yield no split") {
    CHECK_FALSE(best_split(d, {0, 1}, {0}).has_value());  // pure
    Dataset c = make_dataset({Label::Novice, Label::Expert, Label::Novice, Label::Expert},
                             {{"x", {{3.0}, {3.0}, {3.0}, {3.0}}}});
    CHECK_FALSE(best_split(c, {0, 1, 2, 3}, {0}).has_value());
  }
}

TEST_CASE("missing values route to the heavier child, ties left") {
  SECTION("tie goes left") {
    Dataset d = make_dataset(
        {Label::Novice, Label::Novice, Label::Expert, Label::Expert, Label::Expert},
        {{"x", {{1.0}, {2.0}, {8.0}, {9.0}, std::nullopt}}});
    auto split = best_split(d, {0, 1, 2, 3, 4}, {0});
    REQUIRE(split.has_value());
    CHECK(split->threshold == 5.0);
    CHECK(split->missing_left);
    // The missing Expert lands left: left counts (2,1), right (0,2).
    double expected = (3.0 * gini_impurity({2, 1}) + 2.0 * gini_impurity({0, 2})) / 5.0;
    CHECK(split->score == expected);
  }
  SECTION("heavier side wins") {
    Dataset d = make_dataset({Label::Novice, Label::Expert, Label::Expert, Label::Expert},
                             {{"x", {{1.0}, {8.0}, {9.0}, std::nullopt}}});
    auto split = best_split(d, {0, 1, 2, 3}, {0});
    REQUIRE(split.has_value());
    CHECK(split->threshold == 4.5);
    CHECK_FALSE(split->missing_left);  // right has 2 present rows vs 1
    CHECK(split->score == 0.0);
  }
}

TEST_CASE("split ties prefer the lower column index") {
  // Two identical perfectly-separating columns.
  Dataset d = make_dataset({Label::Novice, Label::Novice, Label::Expert, Label::Expert},
                           {{"a", {{1.0}, {2.0}, {8.0}, {9.0}}},
                            {"b", {{1.0}, {2.0}, {8.0}, {9.0}}}});
  auto split = best_split(d, {0, 1, 2, 3}, {1, 0});
  REQUIRE(split.has_value());
  CHECK(split->column == 0);
}

TEST_CASE("bootstrap samples draw n rows with replacement") {
  Rng rng(99);
  std::size_t n = 10000;
  std::vector<std::size_t> rows = bootstrap_rows(rng, n);
  REQUIRE(rows.size() == n);
  std::vector<char> seen(n, 0);
  for (std::size_t r : rows) {
    REQUIRE(r < n);
    seen[r] = 1;
  }
  double unique = static_cast<double>(std::count(seen.begin(), seen.end(), 1));
  CHECK_THAT(unique / static_cast<double>(n), Catch::Matchers::WithinAbs(0.632, 0.02));
}

TEST_CASE("forest training is deterministic and memorizes separable data") {
  Dataset d = separable_dataset(30, 7);
  ForestConfig config;
  config.n_trees = 50;
  config.master_seed = 11;

  ForestModel m1 = train_forest(d, config);
  ForestModel m2 = train_forest(d, config);
  CHECK(m1 == m2);
  REQUIRE(m1.trees.size() == 50);
  CHECK(m1.mtry == 2);  // floor(log2 2) + 1

  std::size_t correct = 0;
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    ForestPrediction p = predict_forest_row(m1, d.rows[r]);
    CHECK_THAT(p.vote_fraction[0] + p.vote_fraction[1],
               Catch::Matchers::WithinAbs(1.0, 1e-12));
    if (p.label == d.labels[r]) ++correct;
  }
  CHECK(correct == d.n_rows());

  SECTION("out-of-bag accuracy is high on separable data") {
    REQUIRE(m1.oob_accuracy.has_value());
    CHECK(*m1.oob_accuracy > 0.9);
  }

  SECTION("a different master seed gives a different forest") {
    ForestConfig other = config;
    other.master_seed = 12;
    CHECK_FALSE(train_forest(d, other) == m1);
  }
}

TEST_CASE("single-tree leaf counts account for every bootstrap draw") {
  Dataset d = separable_dataset(20, 3);
  ForestConfig config;
  config.n_trees = 1;
  config.master_seed = 5;
  ForestModel m = train_forest(d, config);
  std::int64_t total = 0;
  for (const TreeNode& node : m.trees[0].nodes)
    if (node.feature < 0) total += node.counts[0] + node.counts[1];
  CHECK(total == static_cast<std::int64_t>(d.n_rows()));
}

TEST_CASE("forest training rejects degenerate inputs") {
  Dataset single = make_dataset({Label::Novice, Label::Novice},
                                {{"x", {{1.0}, {2.0}}}});
  CHECK_THROWS_WITH(train_forest(single, ForestConfig{}), ContainsSubstring("single class"));

  Dataset unlabeled = make_dataset({Label::Novice, Label::Unlabeled},
                                   {{"x", {{1.0}, {2.0}}}});
  CHECK_THROWS_WITH(train_forest(unlabeled, ForestConfig{}), ContainsSubstring("unlabeled"));

  Dataset ok = separable_dataset(3, 1);
  ForestConfig bad;
  bad.n_trees = 0;
  CHECK_THROWS_AS(train_forest(ok, bad), Error);
  ForestConfig wide;
  wide.mtry = 3;
  CHECK_THROWS_WITH(train_forest(ok, wide), ContainsSubstring("mtry"));
}

TEST_CASE("forest ties break toward novice") {
  // Hand-built forest: one tree always votes Novice, one always Expert.
  ForestModel m;
  m.feature_names = {"x"};
  m.n_trees = 2;
  m.mtry = 1;
  Tree novice_tree, expert_tree;
  TreeNode leaf;
  leaf.counts = {5, 0};
  novice_tree.nodes.push_back(leaf);
  leaf.counts = {0, 5};
  expert_tree.nodes.push_back(leaf);
  m.trees = {novice_tree, expert_tree};

  ForestPrediction p = predict_forest_row(m, {{1.0}});
  CHECK(p.label == Label::Novice);
  CHECK(p.vote_fraction[0] == 0.5);

  SECTION("a leaf tie also votes novice") {
    Tree tied;
    leaf.counts = {3, 3};
    tied.nodes.push_back(leaf);
    CHECK(tied.vote({{0.0}}) == Label::Novice);
  }
}

TEST_CASE("prediction enforces the model's feature list") {
  Dataset d = separable_dataset(5, 2);
  ForestConfig config;
  config.n_trees = 3;
  ForestModel m = train_forest(d, config);
  CHECK_THROWS_WITH(predict_forest_row(m, {{1.0}}), ContainsSubstring("feature-list mismatch"));
}

namespace {

struct TransformedPair {
  Dataset plain;
  Dataset mapped;
};

// Random labeled dataset plus a copy with `map` applied to feature "b"
// (which also carries occasional missing values).
template <typename Map>
TransformedPair transformed_datasets(std::uint64_t trial, Map map) {
  Rng rng(mix_seed(505, trial));
  std::vector<Label> labels;
  std::vector<std::optional<double>> a, b, c;
  for (int i = 0; i < 30; ++i) {
    labels.push_back(rng.bernoulli(0.5) ? Label::Expert : Label::Novice);
    a.push_back(rng.uniform01());
    b.push_back(rng.bernoulli(0.1) ? std::optional<double>() : rng.uniform01());
    c.push_back(rng.uniform01());
  }
  auto mapped_col = b;
  for (auto& v : mapped_col)
    if (v) v = map(*v);
  return {make_dataset(labels, {{"a", a}, {"b", b}, {"c", c}}),
          make_dataset(labels, {{"a", a}, {"b", mapped_col}, {"c", c}})};
}

}  // namespace

TEST_CASE("predictions are invariant to increasing affine transforms") {
  // Affine maps keep each value's relative position inside every split gap,
  // so all routing decisions -- including out-of-bag rows -- are preserved.
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    auto [plain, mapped] =
        transformed_datasets(trial, [](double v) { return 2.5 * v + 7.0; });
    ForestConfig config;
    config.n_trees = 25;
    config.master_seed = trial;
    ForestModel m_plain = train_forest(plain, config);
    ForestModel m_mapped = train_forest(mapped, config);

    for (std::size_t r = 0; r < plain.n_rows(); ++r) {
      ForestPrediction p1 = predict_forest_row(m_plain, plain.rows[r]);
      ForestPrediction p2 = predict_forest_row(m_mapped, mapped.rows[r]);
      REQUIRE(p1.label == p2.label);
      REQUIRE(p1.vote_fraction == p2.vote_fraction);
    }
  }
}

TEST_CASE("tree structure depends only on feature order statistics") {
  // Under any strictly increasing map the chosen split boundaries, tree
  // shapes, and leaf compositions are unchanged (thresholds move with the
  // map, so they are excluded from the comparison).
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    auto [plain, mapped] =
        transformed_datasets(trial, [](double v) { return std::exp(3.0 * v); });
    ForestConfig config;
    config.n_trees = 25;
    config.master_seed = trial;
    ForestModel m_plain = train_forest(plain, config);
    ForestModel m_mapped = train_forest(mapped, config);

    REQUIRE(m_plain.trees.size() == m_mapped.trees.size());
    for (std::size_t t = 0; t < m_plain.trees.size(); ++t) {
      const auto& n1 = m_plain.trees[t].nodes;
      const auto& n2 = m_mapped.trees[t].nodes;
      REQUIRE(n1.size() == n2.size());
      for (std::size_t k = 0; k < n1.size(); ++k) {
        REQUIRE(n1[k].feature == n2[k].feature);
        REQUIRE(n1[k].left == n2[k].left);
        REQUIRE(n1[k].right == n2[k].right);
        REQUIRE(n1[k].missing_left == n2[k].missing_left);
        REQUIRE(n1[k].counts == n2[k].counts);
      }
    }
  }
}

TEST_CASE("a 1000-tree forest trains within the desk budget") {
  Dataset d = separable_dataset(80, 21);
  ForestConfig config;  // defaults: 1000 trees
  config.master_seed = 1;
  auto t0 = std::chrono::steady_clock::now();
  ForestModel m = train_forest(d, config);
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(m.trees.size() == 1000);
  CHECK(elapsed < 60.0);
}
