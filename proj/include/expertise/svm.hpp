// Linear soft-margin SVM trained with sequential minimal optimization.
// Deterministic: partner-selection loops scan from (i+1) mod n instead of
// random starts, so identical inputs give identical models.
#pragma once

#include <cassert>
#include <cmath>
#include <limits>

#include "prep.hpp"

namespace expertise {

struct SmoConfig {
  double C = 1.0;
  double kkt_tolerance = 1e-3;
  double alpha_epsilon = 1e-12;
  int max_passes_without_change = 10;
  long long max_iterations = 10'000'000;  // successful pair updates
};

enum class SmoStatus { Converged, Stagnated, IterationGuard };

inline const char* smo_status_name(SmoStatus s) {
  switch (s) {
    case SmoStatus::Converged: return "converged";
    case SmoStatus::Stagnated: return "stagnated";
    default: return "iteration-guard";
  }
}

// Dual solution over a plain feature matrix (rows already conditioned).
struct SmoSolution {
  std::vector<double> alphas;
  std::vector<double> weights;
  double bias = 0.0;
  SmoStatus status = SmoStatus::Converged;
  long long iterations = 0;  // pair updates applied

  bool operator==(const SmoSolution&) const = default;
};

namespace detail {

class SmoSolver {
 public:
  SmoSolver(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
            const SmoConfig& config)
      : x_(x), y_(y), cfg_(config), n_(x.size()), d_(x.empty() ? 0 : x[0].size()) {
    if (cfg_.C <= 0.0 || cfg_.kkt_tolerance <= 0.0 || cfg_.alpha_epsilon <= 0.0)
      throw Error("smo: C and tolerances must be positive");
    alpha_.assign(n_, 0.0);
    w_.assign(d_, 0.0);
  }

  SmoSolution solve() {
    bool examine_all = true;
    std::size_t num_changed = 0;
    int passes_without_change = 0;
    SmoStatus status = SmoStatus::Converged;
    while (num_changed > 0 || examine_all) {
      num_changed = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (!examine_all && !non_bound(alpha_[i])) continue;
        num_changed += examine_example(i) ? 1u : 0u;
        if (updates_ >= cfg_.max_iterations) break;
      }
      if (updates_ >= cfg_.max_iterations) {
        status = SmoStatus::IterationGuard;
        break;
      }
      if (examine_all)
        examine_all = false;
      else if (num_changed == 0)
        examine_all = true;
      if (num_changed == 0) {
        if (++passes_without_change >= cfg_.max_passes_without_change) {
          status = SmoStatus::Stagnated;
          break;
        }
      } else {
        passes_without_change = 0;
      }
    }
    recenter_bias();
    SmoSolution s;
    s.alphas = alpha_;
    s.weights = w_;
    s.bias = b_;
    s.status = status;
    s.iterations = updates_;
    return s;
  }

 private:
  double dot(const std::vector<double>& a, const std::vector<double>& b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }
  double decision(std::size_t i) const { return dot(w_, x_[i]) + b_; }
  double error(std::size_t i) const { return decision(i) - static_cast<double>(y_[i]); }
  bool non_bound(double a) const {
    return a > cfg_.alpha_epsilon && a < cfg_.C - cfg_.alpha_epsilon;
  }
  // Full dual objective for a candidate endpoint of the pair line segment.
  double objective_at(std::size_t i1, std::size_t i2, double a1, double a2) const {
    std::vector<double> w = w_;
    double da1 = a1 - alpha_[i1], da2 = a2 - alpha_[i2];
    for (std::size_t k = 0; k < d_; ++k)
      w[k] += static_cast<double>(y_[i1]) * da1 * x_[i1][k] +
              static_cast<double>(y_[i2]) * da2 * x_[i2][k];
    double sum = da1 + da2;
    for (double a : alpha_) sum += a;
    return sum - 0.5 * dot(w, w);
  }
  double dual_objective() const {
    double sum = 0.0;
    for (double a : alpha_) sum += a;
    return sum - 0.5 * dot(w_, w_);
  }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    double alph1 = alpha_[i1], alph2 = alpha_[i2];
    double y1 = static_cast<double>(y_[i1]), y2 = static_cast<double>(y_[i2]);
    double e1 = error(i1), e2 = error(i2);
    double s = y1 * y2;
    double lo, hi;
    if (y_[i1] != y_[i2]) {
      lo = std::max(0.0, alph2 - alph1);
      hi = std::min(cfg_.C, cfg_.C + alph2 - alph1);
    } else {
      lo = std::max(0.0, alph2 + alph1 - cfg_.C);
      hi = std::min(cfg_.C, alph2 + alph1);
    }
    if (lo >= hi) return false;
    double k11 = dot(x_[i1], x_[i1]);
    double k12 = dot(x_[i1], x_[i2]);
    double k22 = dot(x_[i2], x_[i2]);
    double eta = k11 + k22 - 2.0 * k12;
    double a2;
    if (eta > 0.0) {
      a2 = std::clamp(alph2 + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Degenerate curvature (duplicate/colinear points): compare the dual
      // objective at the segment endpoints directly.
      double lo_obj = objective_at(i1, i2, alph1 + s * (alph2 - lo), lo);
      double hi_obj = objective_at(i1, i2, alph1 + s * (alph2 - hi), hi);
      if (lo_obj > hi_obj + cfg_.alpha_epsilon)
        a2 = lo;
      else if (hi_obj > lo_obj + cfg_.alpha_epsilon)
        a2 = hi;
      else
        return false;
    }
    if (std::abs(a2 - alph2) < cfg_.alpha_epsilon * (a2 + alph2 + cfg_.alpha_epsilon))
      return false;
    double a1 = alph1 + s * (alph2 - a2);
    // Clean up floating-point spill outside the box.
    a1 = std::clamp(a1, 0.0, cfg_.C);

#ifndef NDEBUG
    double obj_before = dual_objective();
#endif
    for (std::size_t k = 0; k < d_; ++k)
      w_[k] += y1 * (a1 - alph1) * x_[i1][k] + y2 * (a2 - alph2) * x_[i2][k];
    alpha_[i1] = a1;
    alpha_[i2] = a2;
    // Bias from the margin condition y = w.x + b at a non-bound point;
    // average the two estimates when both are at bounds.
    double b1 = y1 - dot(w_, x_[i1]);
    double b2 = y2 - dot(w_, x_[i2]);
    if (non_bound(a1))
      b_ = b1;
    else if (non_bound(a2))
      b_ = b2;
    else
      b_ = 0.5 * (b1 + b2);
#ifndef NDEBUG
    double obj_after = dual_objective();
    assert(obj_after >= obj_before - 1e-7 * std::max(1.0, std::abs(obj_before)));
#endif
    ++updates_;
    return true;
  }

  // The running bias tracks the last updated pair, which pins it only when
  // that pair left a free support vector. Recentered from the full solution:
  // free vectors give the margin equality directly; with every alpha at a
  // bound the KKT inequalities only bracket the bias, and the bracket
  // midpoint satisfies all of them once the dual is maximal.
  void recenter_bias() {
    double free_sum = 0.0;
    std::size_t free_count = 0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
      double g = dot(w_, x_[i]);
      double yi = static_cast<double>(y_[i]);
      if (non_bound(alpha_[i])) {
        free_sum += yi - g;
        ++free_count;
        continue;
      }
      // alpha at 0 needs yi*(g + b) >= 1; alpha at C needs yi*(g + b) <= 1.
      bool at_zero = alpha_[i] <= cfg_.alpha_epsilon;
      double edge = yi - g;  // the bias putting this point exactly on the margin
      if (at_zero == (yi > 0.0))
        lo = std::max(lo, edge);
      else
        hi = std::min(hi, edge);
    }
    if (free_count > 0)
      b_ = free_sum / static_cast<double>(free_count);
    else if (std::isfinite(lo) && std::isfinite(hi))
      b_ = 0.5 * (lo + hi);
    else if (std::isfinite(lo))
      b_ = lo;
    else if (std::isfinite(hi))
      b_ = hi;
  }

  bool examine_example(std::size_t i2) {
    double y2 = static_cast<double>(y_[i2]);
    double alph2 = alpha_[i2];
    double e2 = error(i2);
    double r2 = e2 * y2;
    bool violates = (r2 < -cfg_.kkt_tolerance && alph2 < cfg_.C - cfg_.alpha_epsilon) ||
                    (r2 > cfg_.kkt_tolerance && alph2 > cfg_.alpha_epsilon);
    if (!violates) return false;

    // Second-choice heuristic: the non-bound partner with the largest
    // |e1 - e2| (ties -> lowest index).
    std::size_t best = n_;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (i == i2 || !non_bound(alpha_[i])) continue;
      double gap = std::abs(error(i) - e2);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best < n_ && take_step(best, i2)) return true;

    for (std::size_t k = 1; k <= n_; ++k) {
      std::size_t i1 = (i2 + k) % n_;
      if (non_bound(alpha_[i1]) && take_step(i1, i2)) return true;
    }
    for (std::size_t k = 1; k <= n_; ++k) {
      std::size_t i1 = (i2 + k) % n_;
      if (take_step(i1, i2)) return true;
    }
    return false;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<int>& y_;
  SmoConfig cfg_;
  std::size_t n_, d_;
  std::vector<double> alpha_;
  std::vector<double> w_;
  double b_ = 0.0;
  long long updates_ = 0;
};

}  // namespace detail

// Dual maximization over a raw matrix; labels must be -1/+1 with both present.
inline SmoSolution smo_solve(const std::vector<std::vector<double>>& x,
                             const std::vector<int>& y, const SmoConfig& config) {
  if (x.size() != y.size() || x.empty()) throw Error("smo: bad training matrix");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1)
      has_pos = true;
    else if (v == -1)
      has_neg = true;
    else
      throw Error("smo: labels must be -1 or +1");
  }
  if (!has_pos || !has_neg) throw Error("smo: training set has a single class");
  for (const auto& row : x)
    if (row.size() != x[0].size()) throw Error("smo: ragged training matrix");
  return detail::SmoSolver(x, y, config).solve();
}

inline double dual_objective(const SmoSolution& s) {
  double sum = 0.0;
  for (double a : s.alphas) sum += a;
  double w2 = 0.0;
  for (double w : s.weights) w2 += w * w;
  return sum - 0.5 * w2;
}

// Largest KKT residual over the training rows:
//   alpha=0 needs y*f >= 1; 0<alpha<C needs y*f = 1; alpha=C needs y*f <= 1.
inline double kkt_violation(const SmoSolution& s, const std::vector<std::vector<double>>& x,
                            const std::vector<int>& y, const SmoConfig& config) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = s.bias;
    for (std::size_t k = 0; k < x[i].size(); ++k) f += s.weights[k] * x[i][k];
    double m = static_cast<double>(y[i]) * f;
    double a = s.alphas[i];
    double r;
    if (a <= config.alpha_epsilon)
      r = std::max(0.0, 1.0 - m);
    else if (a >= config.C - config.alpha_epsilon)
      r = std::max(0.0, m - 1.0);
    else
      r = std::abs(m - 1.0);
    worst = std::max(worst, r);
  }
  return worst;
}

// Trained SVM over named dataset columns, with the conditioning baked in.
// Class map: Novice -> -1, Expert -> +1; f(x) = w.x + b; f > 0 -> Expert.
struct SvmModel {
  std::vector<std::string> feature_names;
  Conditioner conditioner;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> alphas;
  double C = 1.0;
  SmoStatus status = SmoStatus::Converged;
  long long iterations = 0;

  bool operator==(const SvmModel&) const = default;
};

inline bool operator==(const Conditioner& a, const Conditioner& b) {
  return a.column_names == b.column_names && a.means == b.means && a.mins == b.mins &&
         a.maxs == b.maxs && a.normalize == b.normalize;
}

// Fits the mandatory impute+normalize conditioner, then runs SMO on the
// conditioned matrix.
inline SvmModel svm_train(const Dataset& d, const SmoConfig& config,
                          std::vector<std::string>* warnings = nullptr) {
  SvmModel model;
  model.feature_names = d.column_names;
  model.conditioner = Conditioner::fit(d, /*normalize=*/true);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  x.reserve(d.n_rows());
  y.reserve(d.n_rows());
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    if (d.labels[r] == Label::Unlabeled) throw Error("unlabeled row in training data");
    y.push_back(d.labels[r] == Label::Expert ? 1 : -1);
    std::vector<double> row(d.n_cols());
    for (std::size_t c = 0; c < d.n_cols(); ++c)
      row[c] = model.conditioner.condition_value(c, d.rows[r][c]);
    x.push_back(std::move(row));
  }
  SmoSolution s = smo_solve(x, y, config);
  model.weights = std::move(s.weights);
  model.bias = s.bias;
  model.alphas = std::move(s.alphas);
  model.C = config.C;
  model.status = s.status;
  model.iterations = s.iterations;
  if (s.status != SmoStatus::Converged && warnings)
    warnings->push_back(std::string("svm training stopped early: ") + smo_status_name(s.status));
  return model;
}

// x parallel to model.feature_names, raw scale; conditioning is applied here.
inline double decision_value_row(const SvmModel& model,
                                 const std::vector<std::optional<double>>& x) {
  if (x.size() != model.feature_names.size())
    throw Error("svm predict: feature-list mismatch");
  double f = model.bias;
  for (std::size_t c = 0; c < x.size(); ++c)
    f += model.weights[c] * model.conditioner.condition_value(c, x[c]);
  return f;
}

inline double decision_value(const SvmModel& model, const FeatureVector& x) {
  std::vector<std::optional<double>> row;
  row.reserve(model.feature_names.size());
  for (const std::string& name : model.feature_names) {
    FeatureId id = feature_from_name(name);
    if (!x.contains(id))
      throw Error("svm predict: feature-list mismatch: '" + name + "' not in input domain");
    row.push_back(x.get(id));
  }
  return decision_value_row(model, row);
}

inline Label svm_predict_row(const SvmModel& model, const std::vector<std::optional<double>>& x) {
  return decision_value_row(model, x) > 0.0 ? Label::Expert : Label::Novice;
}

inline Label svm_predict(const SvmModel& model, const FeatureVector& x) {
  return decision_value(model, x) > 0.0 ? Label::Expert : Label::Novice;
}

// KKT residual of a trained model against its (raw) training dataset.
inline double kkt_violation(const SvmModel& model, const Dataset& d, const SmoConfig& config) {
  SmoSolution s;
  s.alphas = model.alphas;
  s.weights = model.weights;
  s.bias = model.bias;
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    y.push_back(d.labels[r] == Label::Expert ? 1 : -1);
    std::vector<double> row(d.n_cols());
    for (std::size_t c = 0; c < d.n_cols(); ++c)
      row[c] = model.conditioner.condition_value(c, d.rows[r][c]);
    x.push_back(std::move(row));
  }
  return kkt_violation(s, x, y, config);
}

}  // namespace expertise
