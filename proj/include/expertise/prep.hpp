// Dataset conditioning between extraction and learning: 1:1 class balancing,
// train-split mean imputation and min-max normalization, and correlation-based
// forward best-first feature selection.
#pragma once

#include <cmath>
#include <map>
#include <set>

#include "dataset.hpp"

namespace expertise {

// Downsamples every class to the minority count, uniformly without
// replacement; surviving rows keep their input order.
inline Dataset spread_subsample(const Dataset& d, std::uint64_t seed) {
  std::vector<std::size_t> novice, expert;
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    switch (d.labels[r]) {
      case Label::Novice: novice.push_back(r); break;
      case Label::Expert: expert.push_back(r); break;
      default: throw Error("spread_subsample: unlabeled row '" + d.session_ids[r] + "'");
    }
  }
  if (novice.empty() || expert.empty())
    throw Error("spread_subsample: a class has zero rows");
  std::size_t target = std::min(novice.size(), expert.size());
  std::vector<std::size_t> keep;
  int class_index = 0;
  for (auto* cls : {&novice, &expert}) {
    if (cls->size() > target) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(class_index)));
      rng.shuffle(*cls);
      cls->resize(target);
    }
    keep.insert(keep.end(), cls->begin(), cls->end());
    ++class_index;
  }
  std::sort(keep.begin(), keep.end());
  return select_rows(d, keep);
}

// Train-split statistics baked into models: missing values become the
// training mean; normalization (SVM path only) maps the training range to
// [0,1] without clamping, so unseen values may fall outside it.
struct Conditioner {
  std::vector<std::string> column_names;
  std::vector<double> means;
  std::vector<double> mins;
  std::vector<double> maxs;
  bool normalize = true;

  static Conditioner fit(const Dataset& d, bool normalize = true) {
    Conditioner c;
    c.normalize = normalize;
    c.column_names = d.column_names;
    for (std::size_t col = 0; col < d.n_cols(); ++col) {
      double sum = 0.0, lo = 0.0, hi = 0.0;
      std::size_t n = 0;
      for (std::size_t r = 0; r < d.n_rows(); ++r) {
        if (!d.rows[r][col]) continue;
        double v = *d.rows[r][col];
        if (n == 0) {
          lo = hi = v;
        } else {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        sum += v;
        ++n;
      }
      if (n == 0)
        throw Error("feature '" + d.column_names[col] + "' is entirely missing in the training split");
      c.means.push_back(sum / static_cast<double>(n));
      c.mins.push_back(lo);
      c.maxs.push_back(hi);
    }
    return c;
  }

  double condition_value(std::size_t col, const std::optional<double>& v) const {
    double x = v ? *v : means[col];
    if (!normalize) return x;
    double span = maxs[col] - mins[col];
    return span > 0.0 ? (x - mins[col]) / span : 0.0;
  }

  Dataset apply(const Dataset& d) const {
    if (d.column_names != column_names)
      throw Error("conditioner schema mismatch");
    Dataset out = d;
    for (std::size_t r = 0; r < d.n_rows(); ++r)
      for (std::size_t col = 0; col < d.n_cols(); ++col)
        out.rows[r][col] = condition_value(col, d.rows[r][col]);
    return out;
  }
};

// --- discretization and information measures ---

// Cutpoints at equal-frequency quantiles (midpoints between neighbors),
// giving at most max_bins bins; a value's bin is the count of cuts <= it.
inline std::vector<double> equal_frequency_cuts(std::vector<double> values, int max_bins = 10) {
  std::sort(values.begin(), values.end());
  std::vector<double> cuts;
  std::size_t n = values.size();
  if (n < 2 || max_bins < 2) return cuts;
  for (int b = 1; b < max_bins; ++b) {
    std::size_t i = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(max_bins);
    if (i == 0) continue;
    // Slide the boundary forward past tied values so repeated values (e.g.
    // binary features) still get a cut at the nearest value change.
    while (i < n && values[i - 1] == values[i]) ++i;
    if (i >= n) continue;
    cuts.push_back(0.5 * (values[i - 1] + values[i]));
  }
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

inline int bin_of(double v, const std::vector<double>& cuts) {
  return static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

// SU = 2*I(X;Y) / (H(X)+H(Y)) with natural-log entropies; zero by convention
// when either variable is constant.
inline double symmetrical_uncertainty(const std::vector<int>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw Error("symmetrical_uncertainty: length mismatch");
  if (x.empty()) throw Error("symmetrical_uncertainty: empty input");
  std::map<int, std::size_t> cx, cy;
  std::map<std::pair<int, int>, std::size_t> cxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++cx[x[i]];
    ++cy[y[i]];
    ++cxy[{x[i], y[i]}];
  }
  double n = static_cast<double>(x.size());
  auto entropy = [n](const auto& counts) {
    double h = 0.0;
    for (const auto& [_, c] : counts) {
      double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
    return h;
  };
  double hx = entropy(cx), hy = entropy(cy), hxy = entropy(cxy);
  if (hx <= 0.0 || hy <= 0.0) return 0.0;
  double mi = hx + hy - hxy;
  double su = 2.0 * mi / (hx + hy);
  return std::clamp(su, 0.0, 1.0);
}

// Shared discretized view of a dataset, with cached pairwise correlations.
// Missing values are imputed with the column mean before binning.
class CfsContext {
 public:
  explicit CfsContext(const Dataset& d, int max_bins = 10) {
    if (d.n_cols() == 0) throw Error("feature selection needs at least one feature");
    Conditioner imputer = Conditioner::fit(d, /*normalize=*/false);
    labels_.reserve(d.n_rows());
    for (Label l : d.labels) {
      if (l == Label::Unlabeled) throw Error("feature selection needs labeled rows");
      labels_.push_back(l == Label::Expert ? 1 : 0);
    }
    columns_.resize(d.n_cols());
    for (std::size_t c = 0; c < d.n_cols(); ++c) {
      std::vector<double> raw;
      raw.reserve(d.n_rows());
      for (std::size_t r = 0; r < d.n_rows(); ++r)
        raw.push_back(imputer.condition_value(c, d.rows[r][c]));
      std::vector<double> cuts = equal_frequency_cuts(raw, max_bins);
      columns_[c].reserve(raw.size());
      for (double v : raw) columns_[c].push_back(bin_of(v, cuts));
    }
    su_class_.resize(d.n_cols());
    for (std::size_t c = 0; c < d.n_cols(); ++c)
      su_class_[c] = symmetrical_uncertainty(columns_[c], labels_);
  }

  std::size_t n_cols() const { return columns_.size(); }
  double su_with_class(std::size_t c) const { return su_class_[c]; }

  double su_between(std::size_t a, std::size_t b) const {
    if (a == b) return 1.0;
    auto key = std::minmax(a, b);
    auto it = su_pair_.find(key);
    if (it != su_pair_.end()) return it->second;
    double su = symmetrical_uncertainty(columns_[key.first], columns_[key.second]);
    su_pair_.emplace(key, su);
    return su;
  }

  // merit = k*r_cf / sqrt(k + k(k-1)*r_ff)
  double merit(const std::vector<std::size_t>& subset) const {
    if (subset.empty()) return 0.0;
    double k = static_cast<double>(subset.size());
    double r_cf = 0.0;
    for (std::size_t c : subset) r_cf += su_class_[c];
    r_cf /= k;
    double r_ff = 0.0;
    if (subset.size() > 1) {
      std::size_t pairs = 0;
      for (std::size_t i = 0; i < subset.size(); ++i)
        for (std::size_t j = i + 1; j < subset.size(); ++j) {
          r_ff += su_between(subset[i], subset[j]);
          ++pairs;
        }
      r_ff /= static_cast<double>(pairs);
    }
    return k * r_cf / std::sqrt(k + k * (k - 1.0) * r_ff);
  }

 private:
  std::vector<std::vector<int>> columns_;
  std::vector<int> labels_;
  std::vector<double> su_class_;
  mutable std::map<std::pair<std::size_t, std::size_t>, double> su_pair_;
};

inline double cfs_merit(const std::vector<FeatureId>& subset, const Dataset& d) {
  if (subset.empty()) throw Error("cfs_merit: empty subset");
  CfsContext ctx(d);
  std::vector<std::size_t> cols;
  for (FeatureId f : subset) {
    auto c = d.column_index(feature_name(f));
    if (!c) throw Error(std::string("cfs_merit: dataset lacks feature ") + feature_name(f));
    cols.push_back(*c);
  }
  return ctx.merit(cols);
}

struct SelectionResult {
  std::vector<std::size_t> selected;        // column indexes, ascending
  std::vector<std::string> selected_names;  // parallel
  double merit = 0.0;
  std::vector<std::pair<std::vector<std::string>, double>> search_trace;  // evaluation order
  std::size_t expansions = 0;

  // Only valid when every selected column carries a known feature id.
  FeatureSet to_feature_set(const Dataset& d) const {
    std::vector<FeatureId> ids;
    for (std::size_t c : selected) {
      if (!d.column_ids[c])
        throw Error("selected column '" + d.column_names[c] + "' is not a known feature");
      ids.push_back(*d.column_ids[c]);
    }
    return FeatureSet::make_selected(std::move(ids));
  }
};

// Forward best-first search over feature subsets scored by CFS merit.
// Expands the best unexpanded subset by single-feature additions and stops
// after `termination` consecutive expansions without a new global best.
// Equal-merit subsets prefer fewer features, then lexicographic order.
inline SelectionResult best_first_select(const Dataset& d, int termination = 5) {
  CfsContext ctx(d);
  SelectionResult result;

  struct Node {
    double merit;
    std::vector<std::size_t> subset;
  };
  auto fitter = [](const Node& a, const Node& b) {
    if (a.merit != b.merit) return a.merit > b.merit;
    if (a.subset.size() != b.subset.size()) return a.subset.size() < b.subset.size();
    return a.subset < b.subset;
  };

  std::vector<Node> open{{0.0, {}}};
  std::set<std::vector<std::size_t>> seen{{}};
  std::set<std::vector<std::size_t>> expanded;
  bool have_best = false;
  Node best{0.0, {}};
  int stagnant = 0;

  while (!open.empty() && stagnant < termination) {
    std::size_t pick = 0;
    for (std::size_t i = 1; i < open.size(); ++i)
      if (fitter(open[i], open[pick])) pick = i;
    Node node = open[pick];
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
    if (expanded.count(node.subset)) continue;
    expanded.insert(node.subset);
    ++result.expansions;

    bool improved = false;
    for (std::size_t c = 0; c < ctx.n_cols(); ++c) {
      if (std::find(node.subset.begin(), node.subset.end(), c) != node.subset.end()) continue;
      std::vector<std::size_t> child = node.subset;
      child.insert(std::upper_bound(child.begin(), child.end(), c), c);
      if (seen.count(child)) continue;
      seen.insert(child);
      double m = ctx.merit(child);
      std::vector<std::string> names;
      for (std::size_t i : child) names.push_back(d.column_names[i]);
      result.search_trace.emplace_back(std::move(names), m);
      if (!have_best || m > best.merit) {
        best = {m, child};
        have_best = true;
        improved = true;
      } else if (m == best.merit && fitter({m, child}, best)) {
        best = {m, child};  // preference rewrite, not an improvement
      }
      open.push_back({m, std::move(child)});
    }
    if (improved)
      stagnant = 0;
    else
      ++stagnant;
  }

  result.selected = best.subset;
  for (std::size_t c : best.subset) result.selected_names.push_back(d.column_names[c]);
  result.merit = best.merit;
  return result;
}

}  // namespace expertise
