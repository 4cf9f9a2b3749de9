// Bagged decision-tree classifier: bootstrap per tree, random candidate
// features per node, Gini splits at midpoints, class-count leaves, majority
// vote across trees. Deterministic given (dataset, config).
#pragma once

#include <array>
#include <cmath>

#include "dataset.hpp"

namespace expertise {

// counts = (novice, expert); 1 - sum p_i^2.
inline double gini_impurity(const std::array<std::int64_t, 2>& counts) {
  double n = static_cast<double>(counts[0] + counts[1]);
  if (n <= 0.0) throw Error("gini_impurity: all-zero counts");
  double p0 = static_cast<double>(counts[0]) / n;
  double p1 = static_cast<double>(counts[1]) / n;
  return 1.0 - (p0 * p0 + p1 * p1);
}

struct SplitChoice {
  std::size_t column = 0;
  double threshold = 0.0;   // value <= threshold goes left
  bool missing_left = true; // routing chosen from training row counts
  double score = 0.0;       // weighted child Gini
};

namespace detail {

inline int label_bin(Label l) {
  if (l == Label::Unlabeled) throw Error("unlabeled row in training data");
  return l == Label::Expert ? 1 : 0;
}

}  // namespace detail

// Minimizes weighted child Gini over midpoints of consecutive distinct
// values of each candidate column. Missing values follow the child holding
// more present rows (tie -> left). Ties across splits prefer the lower
// column index, then the lower threshold. Returns nothing when no split
// strictly reduces impurity.
inline std::optional<SplitChoice> best_split(const Dataset& d,
                                             const std::vector<std::size_t>& rows,
                                             std::vector<std::size_t> candidates,
                                             int min_samples_leaf = 1) {
  std::array<std::int64_t, 2> parent{0, 0};
  for (std::size_t r : rows) ++parent[static_cast<std::size_t>(detail::label_bin(d.labels[r]))];
  if (parent[0] + parent[1] < 2) return std::nullopt;
  double parent_gini = gini_impurity(parent);
  if (parent_gini == 0.0) return std::nullopt;

  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::optional<SplitChoice> best;
  double total = static_cast<double>(rows.size());
  std::vector<std::pair<double, int>> present;  // (value, label)
  for (std::size_t col : candidates) {
    present.clear();
    std::array<std::int64_t, 2> missing{0, 0};
    for (std::size_t r : rows) {
      int lbl = detail::label_bin(d.labels[r]);
      if (d.rows[r][col])
        present.emplace_back(*d.rows[r][col], lbl);
      else
        ++missing[static_cast<std::size_t>(lbl)];
    }
    if (present.size() < 2) continue;
    std::sort(present.begin(), present.end());

    std::array<std::int64_t, 2> left{0, 0};
    std::array<std::int64_t, 2> right{parent[0] - missing[0], parent[1] - missing[1]};
    std::int64_t n_missing = missing[0] + missing[1];
    for (std::size_t i = 1; i < present.size(); ++i) {
      ++left[static_cast<std::size_t>(present[i - 1].second)];
      --right[static_cast<std::size_t>(present[i - 1].second)];
      if (present[i - 1].first == present[i].first) continue;
      double threshold = 0.5 * (present[i - 1].first + present[i].first);
      if (!(threshold < present[i].first)) continue;  // midpoint rounded up to the next value

      std::int64_t n_left = static_cast<std::int64_t>(i);
      std::int64_t n_right = static_cast<std::int64_t>(present.size() - i);
      bool missing_left = n_left >= n_right;
      std::array<std::int64_t, 2> lc = left, rc = right;
      if (missing_left) {
        lc[0] += missing[0];
        lc[1] += missing[1];
        n_left += n_missing;
      } else {
        rc[0] += missing[0];
        rc[1] += missing[1];
        n_right += n_missing;
      }
      if (n_left < min_samples_leaf || n_right < min_samples_leaf) continue;
      double score = (static_cast<double>(n_left) * gini_impurity(lc) +
                      static_cast<double>(n_right) * gini_impurity(rc)) /
                     total;
      if (!(score < parent_gini)) continue;
      bool wins = !best || score < best->score ||
                  (score == best->score &&
                   (col < best->column || (col == best->column && threshold < best->threshold)));
      if (wins) best = SplitChoice{col, threshold, missing_left, score};
    }
  }
  return best;
}

// Flat node array per tree; root at index 0. Internal nodes have feature>=0.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  bool missing_left = true;
  std::array<std::int64_t, 2> counts{0, 0};  // leaf class counts (novice, expert)
};

struct Tree {
  std::vector<TreeNode> nodes;

  // Leaf majority; tie -> Novice (first class in class order).
  Label vote(const std::vector<std::optional<double>>& x) const {
    const TreeNode* node = &nodes[0];
    while (node->feature >= 0) {
      const std::optional<double>& v = x[static_cast<std::size_t>(node->feature)];
      bool go_left = v ? (*v <= node->threshold) : node->missing_left;
      node = &nodes[static_cast<std::size_t>(go_left ? node->left : node->right)];
    }
    return node->counts[1] > node->counts[0] ? Label::Expert : Label::Novice;
  }
};

struct ForestConfig {
  int n_trees = 1000;
  int mtry = 0;            // 0 -> floor(log2 M) + 1
  int max_depth = 0;       // 0 -> unlimited
  int min_samples_leaf = 1;
  std::uint64_t master_seed = 0;
};

struct ForestModel {
  std::vector<std::string> feature_names;  // column order for prediction input
  int n_trees = 0;
  int mtry = 0;
  int max_depth = 0;
  int min_samples_leaf = 1;
  std::uint64_t master_seed = 0;
  std::vector<Tree> trees;
  std::optional<double> oob_accuracy;

  bool operator==(const ForestModel&) const = default;
};

inline bool operator==(const TreeNode& a, const TreeNode& b) {
  return a.feature == b.feature && a.threshold == b.threshold && a.left == b.left &&
         a.right == b.right && a.missing_left == b.missing_left && a.counts == b.counts;
}
inline bool operator==(const Tree& a, const Tree& b) { return a.nodes == b.nodes; }

inline int default_mtry(std::size_t n_features) {
  return static_cast<int>(std::floor(std::log2(static_cast<double>(n_features)))) + 1;
}

namespace detail {

inline int grow_node(const Dataset& d, std::vector<std::size_t>& rows, Tree& tree, Rng& rng,
                     int mtry, int depth, int max_depth, int min_samples_leaf) {
  std::array<std::int64_t, 2> counts{0, 0};
  for (std::size_t r : rows) ++counts[static_cast<std::size_t>(label_bin(d.labels[r]))];

  int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  bool stop = counts[0] == 0 || counts[1] == 0 || rows.size() < 2 ||
              (max_depth > 0 && depth >= max_depth);
  std::optional<SplitChoice> split;
  if (!stop) {
    // Partial Fisher-Yates: the first mtry entries are a uniform sample
    // without replacement from all columns.
    std::vector<std::size_t> cols(d.n_cols());
    for (std::size_t c = 0; c < cols.size(); ++c) cols[c] = c;
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(mtry), cols.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(cols.size() - i));
      std::swap(cols[i], cols[j]);
    }
    cols.resize(take);
    split = best_split(d, rows, cols, min_samples_leaf);
  }
  if (!split) {
    tree.nodes[static_cast<std::size_t>(index)].counts = counts;
    return index;
  }

  std::vector<std::size_t> left_rows, right_rows;
  for (std::size_t r : rows) {
    const std::optional<double>& v = d.rows[r][split->column];
    bool go_left = v ? (*v <= split->threshold) : split->missing_left;
    (go_left ? left_rows : right_rows).push_back(r);
  }
  rows.clear();
  rows.shrink_to_fit();

  int left = grow_node(d, left_rows, tree, rng, mtry, depth + 1, max_depth, min_samples_leaf);
  int right = grow_node(d, right_rows, tree, rng, mtry, depth + 1, max_depth, min_samples_leaf);
  TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
  node.feature = static_cast<int>(split->column);
  node.threshold = split->threshold;
  node.missing_left = split->missing_left;
  node.left = left;
  node.right = right;
  return index;
}

}  // namespace detail

// n index draws with replacement; the tree's training sample.
inline std::vector<std::size_t> bootstrap_rows(Rng& rng, std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::size_t>(rng.below(n));
  return rows;
}

// Grows config.n_trees trees sequentially; tree t uses the independent
// stream mix_seed(master_seed, t) for its bootstrap and candidate sampling,
// so any parallel schedule producing the same per-tree results is allowed.
inline ForestModel train_forest(const Dataset& d, const ForestConfig& config) {
  if (config.n_trees < 1) throw Error("train_forest: n_trees must be >= 1");
  if (d.n_rows() < 2) throw Error("train_forest: need at least 2 rows");
  if (d.n_cols() == 0) throw Error("train_forest: need at least 1 feature");
  auto counts = d.class_counts();
  if (counts[static_cast<std::size_t>(Label::Unlabeled)] > 0)
    throw Error("unlabeled row in training data");
  if (counts[static_cast<std::size_t>(Label::Novice)] == 0 ||
      counts[static_cast<std::size_t>(Label::Expert)] == 0)
    throw Error("train_forest: training set has a single class");

  ForestModel model;
  model.feature_names = d.column_names;
  model.n_trees = config.n_trees;
  model.mtry = config.mtry > 0 ? config.mtry : default_mtry(d.n_cols());
  if (static_cast<std::size_t>(model.mtry) > d.n_cols())
    throw Error("train_forest: mtry exceeds the feature count");
  model.max_depth = config.max_depth;
  model.min_samples_leaf = config.min_samples_leaf;
  model.master_seed = config.master_seed;
  model.trees.reserve(static_cast<std::size_t>(config.n_trees));

  std::size_t n = d.n_rows();
  std::vector<std::array<std::int64_t, 2>> oob_votes(n, {0, 0});
  std::vector<char> in_bag(n);
  for (int t = 0; t < config.n_trees; ++t) {
    Rng rng(mix_seed(config.master_seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows = bootstrap_rows(rng, n);
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (std::size_t r : rows) in_bag[r] = 1;
    Tree tree;
    detail::grow_node(d, rows, tree, rng, model.mtry, 0, config.max_depth,
                      config.min_samples_leaf);
    for (std::size_t r = 0; r < n; ++r) {
      if (in_bag[r]) continue;
      Label v = tree.vote(d.rows[r]);
      ++oob_votes[r][v == Label::Expert ? 1 : 0];
    }
    model.trees.push_back(std::move(tree));
  }

  std::int64_t oob_correct = 0, oob_total = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (oob_votes[r][0] + oob_votes[r][1] == 0) continue;
    Label pred = oob_votes[r][1] > oob_votes[r][0] ? Label::Expert : Label::Novice;
    ++oob_total;
    if (pred == d.labels[r]) ++oob_correct;
  }
  if (oob_total > 0)
    model.oob_accuracy = static_cast<double>(oob_correct) / static_cast<double>(oob_total);
  return model;
}

struct ForestPrediction {
  Label label = Label::Novice;
  std::array<double, 2> vote_fraction{0.0, 0.0};  // (novice, expert), sums to 1
};

// x is parallel to model.feature_names.
inline ForestPrediction predict_forest_row(const ForestModel& model,
                                           const std::vector<std::optional<double>>& x) {
  if (x.size() != model.feature_names.size())
    throw Error("predict_forest: feature-list mismatch");
  std::array<std::int64_t, 2> votes{0, 0};
  for (const Tree& t : model.trees) ++votes[t.vote(x) == Label::Expert ? 1 : 0];
  ForestPrediction p;
  double n = static_cast<double>(model.trees.size());
  p.vote_fraction = {static_cast<double>(votes[0]) / n, static_cast<double>(votes[1]) / n};
  p.label = votes[1] > votes[0] ? Label::Expert : Label::Novice;
  return p;
}

// Maps the model's named columns through the vector's feature domain.
inline ForestPrediction predict_forest(const ForestModel& model, const FeatureVector& x) {
  std::vector<std::optional<double>> row;
  row.reserve(model.feature_names.size());
  for (const std::string& name : model.feature_names) {
    FeatureId id = feature_from_name(name);  // throws on unknown names
    if (!x.contains(id))
      throw Error("predict_forest: feature-list mismatch: '" + name + "' not in input domain");
    row.push_back(x.get(id));
  }
  return predict_forest_row(model, row);
}

}  // namespace expertise
