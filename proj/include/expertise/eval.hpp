#pragma once

// Evaluation protocol: stratified k-fold cross-validation, accuracy, Cohen's
// kappa, chance baseline, cross-corpus evaluation, and incremental per-turn
// classification.

#include <array>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "expertise/model_io.hpp"
#include "expertise/prep.hpp"

namespace expertise {

// --- confusion matrix and metrics ---

// 2x2 counts indexed (actual, predicted) over (Novice, Expert).
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, 2>, 2> counts{};

  static std::size_t idx(Label l) {
    if (l == Label::Unlabeled) throw Error("confusion matrix: unlabeled row");
    return static_cast<std::size_t>(l);
  }

  std::int64_t& at(Label actual, Label predicted) { return counts[idx(actual)][idx(predicted)]; }
  std::int64_t at(Label actual, Label predicted) const {
    return counts[idx(actual)][idx(predicted)];
  }
  void add(Label actual, Label predicted) { ++at(actual, predicted); }

  std::int64_t total() const {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
  }
  std::int64_t trace() const { return counts[0][0] + counts[1][1]; }
  std::int64_t row_sum(std::size_t r) const { return counts[r][0] + counts[r][1]; }
  std::int64_t col_sum(std::size_t c) const { return counts[0][c] + counts[1][c]; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) counts[r][c] += o.counts[r][c];
    return *this;
  }

  bool operator==(const ConfusionMatrix&) const = default;
};

inline double accuracy(const ConfusionMatrix& cm) {
  std::int64_t n = cm.total();
  if (n == 0) throw Error("empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(n);
}

// Cohen's kappa, computed in integer form so that exact fractions stay exact:
//   kappa = (N*trace - sum_c row_c*col_c) / (N^2 - sum_c row_c*col_c).
// Degenerate convention: when expected agreement is 1 (the denominator
// vanishes), kappa is 1 for a perfect diagonal and 0 otherwise.
inline double kappa(const ConfusionMatrix& cm) {
  std::int64_t n = cm.total();
  if (n == 0) throw Error("empty confusion matrix");
  std::int64_t marginal = 0;
  for (std::size_t c = 0; c < 2; ++c) marginal += cm.row_sum(c) * cm.col_sum(c);
  std::int64_t num = n * cm.trace() - marginal;
  std::int64_t den = n * n - marginal;
  if (den == 0) return cm.trace() == n ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

// Majority-class proportion over the labeled rows.
inline double chance_accuracy(const std::vector<Label>& labels) {
  std::int64_t counts[2] = {0, 0};
  for (Label l : labels)
    if (l != Label::Unlabeled) ++counts[static_cast<std::size_t>(l)];
  std::int64_t total = counts[0] + counts[1];
  if (total == 0) throw Error("chance baseline needs labeled rows");
  return static_cast<double>(std::max(counts[0], counts[1])) / static_cast<double>(total);
}

// --- fold assignment ---

struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;  // per-row fold index in [0, k)

  bool operator==(const FoldAssignment&) const = default;
};

// Within each class, rows are shuffled by seed and dealt round-robin into the
// k folds, so per-class counts across folds differ by at most one. k equal to
// the row count is the leave-one-out special case (fold i = row i).
inline FoldAssignment stratified_folds(const std::vector<Label>& labels, int k,
                                       std::uint64_t seed) {
  if (k < 2) throw Error("cross-validation needs k >= 2");
  const std::size_t n = labels.size();
  FoldAssignment fa;
  fa.k = k;
  fa.fold_of.assign(n, -1);

  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == Label::Unlabeled)
      throw Error("cross-validation needs labeled rows (row " + std::to_string(i) +
                  " is unlabeled)");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }

  if (static_cast<std::size_t>(k) == n) {  // leave-one-out
    for (std::size_t i = 0; i < n; ++i) fa.fold_of[i] = static_cast<int>(i);
    return fa;
  }

  constexpr std::uint64_t kFoldSalt = 0x666F6C64;  // ASCII "fold"
  for (std::size_t cls = 0; cls < 2; ++cls) {
    if (by_class[cls].size() < static_cast<std::size_t>(k))
      throw Error(std::string("class ") + label_name(static_cast<Label>(cls)) + " has only " +
                  std::to_string(by_class[cls].size()) + " rows; choose k <= that");
    Rng rng(mix_seed(seed, kFoldSalt + cls));
    rng.shuffle(by_class[cls]);
    for (std::size_t i = 0; i < by_class[cls].size(); ++i)
      fa.fold_of[by_class[cls][i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return fa;
}

// --- cross-validation ---

enum class SelectionMode {
  None,     // evaluate the given feature set as-is
  Outside,  // run feature selection once on the full data before folding
  InFold,   // re-run feature selection on each fold's training rows
};

inline const char* selection_mode_name(SelectionMode m) {
  switch (m) {
    case SelectionMode::None: return "none";
    case SelectionMode::Outside: return "outside";
    case SelectionMode::InFold: return "in-fold";
  }
  throw Error("invalid selection mode");
}

struct CvOptions {
  bool balance = true;           // spread-subsample to equal class counts
  bool balance_in_fold = false;  // rebalance each fold's training rows instead
                                 // of balancing once before folding
  SelectionMode selection = SelectionMode::None;
  int selection_termination = 5;
  bool compute_model_digests = false;  // record a digest per fold model
};

struct ConfigEcho {
  std::string learner;      // "forest" or "svm"
  std::string feature_set;  // resolved name, e.g. "Selected(exchange_count)"
  std::uint64_t seed = 0;
  int k = 0;
  bool balanced = false;
  bool balance_in_fold = false;
  std::string selection = "none";

  bool operator==(const ConfigEcho&) const = default;
};

struct FoldResult {
  ConfusionMatrix matrix;
  double accuracy = 0.0;
  double kappa = 0.0;

  bool operator==(const FoldResult&) const = default;
};

struct RowPrediction {
  std::string session_id;
  int fold = 0;
  Label actual = Label::Unlabeled;
  Label predicted = Label::Unlabeled;
  double expert_score = 0.0;  // centered: positive favors Expert

  bool operator==(const RowPrediction&) const = default;
};

struct EvalReport {
  double accuracy = 0.0;
  double kappa = 0.0;
  double chance_accuracy = 0.0;
  std::vector<FoldResult> per_fold;
  ConfusionMatrix aggregate_matrix;
  ConfigEcho config_echo;
  std::vector<std::string> caveats;
  std::vector<std::string> fold_feature_sets;   // per-fold sets when selecting in-fold
  std::vector<std::string> fold_model_digests;  // when compute_model_digests
  std::vector<RowPrediction> predictions;       // one entry per evaluated row

  bool operator==(const EvalReport&) const = default;
};

namespace detail {

inline ConfigEcho make_echo(const LearnerSpec& spec, const std::string& set_name,
                            std::uint64_t seed, int k, bool balanced, const CvOptions& options) {
  ConfigEcho echo;
  echo.learner = learner_name(spec.kind);
  echo.feature_set = set_name;
  echo.seed = seed;
  echo.k = k;
  echo.balanced = balanced;
  echo.balance_in_fold = balanced && options.balance_in_fold;
  echo.selection = selection_mode_name(options.selection);
  return echo;
}

// Shared fold loop. `d` is the dataset the folds index into (already balanced
// when balancing happens outside the loop); `set` is the working feature set,
// or the candidate pool when selecting in-fold.
inline EvalReport run_folds(const Dataset& d, const LearnerSpec& spec, const FeatureSet& set,
                            const FoldAssignment& folds, std::uint64_t seed,
                            const CvOptions& options, ConfigEcho echo) {
  if (folds.fold_of.size() != d.n_rows())
    throw Error("fold assignment does not match the dataset row count");
  const int k = folds.k;
  if (k < 2) throw Error("cross-validation needs k >= 2");
  for (int f : folds.fold_of)
    if (f < 0 || f >= k) throw Error("fold assignment holds an out-of-range fold index");

  EvalReport report;
  report.config_echo = std::move(echo);
  if (options.selection == SelectionMode::Outside)
    report.caveats.push_back(
        "feature selection ran outside the cross-validation loop; held-out rows "
        "influenced the selected subset, so metrics may be optimistic");

  const Dataset pool = project_dataset(d, set);
  for (int fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t r = 0; r < d.n_rows(); ++r)
      (folds.fold_of[r] == fold ? test_rows : train_rows).push_back(r);
    if (test_rows.empty()) throw Error("fold " + std::to_string(fold) + " holds no rows");
    if (train_rows.empty())
      throw Error("fold " + std::to_string(fold) + " leaves no training rows");

    try {
      Dataset train = select_rows(pool, train_rows);
      if (options.balance && options.balance_in_fold)
        train = spread_subsample(train, mix_seed(seed, static_cast<std::uint64_t>(k) +
                                                           static_cast<std::uint64_t>(fold)));

      FeatureSet fold_set = set;
      if (options.selection == SelectionMode::InFold) {
        fold_set = best_first_select(train, options.selection_termination).to_feature_set(train);
        train = project_dataset(train, fold_set);
        report.fold_feature_sets.push_back(fold_set.name());
      }
      Dataset test = select_rows(project_dataset(pool, fold_set), test_rows);

      TrainedModel model =
          train_model(train, spec, mix_seed(seed, static_cast<std::uint64_t>(fold)));
      if (options.compute_model_digests)
        report.fold_model_digests.push_back(model_digest(model));

      FoldResult fr;
      for (std::size_t i = 0; i < test.n_rows(); ++i) {
        RowPrediction p;
        p.session_id = test.session_ids[i];
        p.fold = fold;
        p.actual = test.labels[i];
        p.predicted = model.predict_row(test.rows[i]);
        p.expert_score = model.expert_score_row(test.rows[i]);
        fr.matrix.add(p.actual, p.predicted);
        report.predictions.push_back(std::move(p));
      }
      fr.accuracy = accuracy(fr.matrix);
      fr.kappa = kappa(fr.matrix);
      report.aggregate_matrix += fr.matrix;
      report.per_fold.push_back(fr);
    } catch (const Error& e) {
      throw Error("fold " + std::to_string(fold) + ": " + e.what());
    }
  }

  report.accuracy = accuracy(report.aggregate_matrix);
  report.kappa = kappa(report.aggregate_matrix);
  report.chance_accuracy = chance_accuracy(d.labels);
  return report;
}

}  // namespace detail

// Cross-validation with an explicit fold assignment. The rows are used exactly
// as given: balancing outside the loop never happens here (the assignment is
// tied to the row order), but in-fold balancing and selection still apply.
inline EvalReport cross_validate_with_folds(const Dataset& d, const LearnerSpec& spec,
                                            const FeatureSet& feature_set,
                                            const FoldAssignment& folds, std::uint64_t seed,
                                            const CvOptions& options = {}) {
  CvOptions opts = options;
  bool balanced = options.balance && options.balance_in_fold;
  opts.balance = balanced;
  return detail::run_folds(
      d, spec, feature_set, folds, seed, opts,
      detail::make_echo(spec, feature_set.name(), seed, folds.k, balanced, opts));
}

// Stratified k-fold cross-validation. Balancing (when placed outside the loop)
// and outside-the-loop feature selection run on the full dataset before fold
// assignment; everything else is fit on training folds only.
inline EvalReport cross_validate(const Dataset& d, const LearnerSpec& spec,
                                 const FeatureSet& feature_set, int k, std::uint64_t seed,
                                 const CvOptions& options = {}) {
  Dataset work = d;
  if (options.balance && !options.balance_in_fold) work = spread_subsample(d, seed);

  FeatureSet set = feature_set;
  if (options.selection == SelectionMode::Outside) {
    Dataset pool = project_dataset(work, feature_set);
    set = best_first_select(pool, options.selection_termination).to_feature_set(pool);
  }

  FoldAssignment folds = stratified_folds(work.labels, k, seed);
  return detail::run_folds(work, spec, set, folds, seed, options,
                           detail::make_echo(spec, set.name(), seed, k, options.balance, options));
}

// Single fit on `train`, single evaluation on `test`; the chance baseline
// comes from the test labels. Reported as a one-fold EvalReport.
inline EvalReport cross_corpus_eval(const Dataset& train, const Dataset& test,
                                    const LearnerSpec& spec, const FeatureSet& feature_set,
                                    std::uint64_t seed, bool balance_train = false) {
  if (test.n_rows() == 0) throw Error("empty test corpus");
  if (train.column_names != test.column_names)
    throw Error("cross-corpus evaluation needs identical feature schemas");

  Dataset fit = project_dataset(train, feature_set);
  if (balance_train) fit = spread_subsample(fit, seed);
  TrainedModel model = train_model(fit, spec, seed);

  EvalReport report;
  report.config_echo = detail::make_echo(spec, feature_set.name(), seed, 1, balance_train, {});
  FoldResult fr;
  Dataset eval_rows = project_dataset(test, feature_set);
  for (std::size_t i = 0; i < eval_rows.n_rows(); ++i) {
    if (eval_rows.labels[i] == Label::Unlabeled)
      throw Error("test corpus row '" + eval_rows.session_ids[i] + "' is unlabeled");
    RowPrediction p;
    p.session_id = eval_rows.session_ids[i];
    p.fold = 0;
    p.actual = eval_rows.labels[i];
    p.predicted = model.predict_row(eval_rows.rows[i]);
    p.expert_score = model.expert_score_row(eval_rows.rows[i]);
    fr.matrix.add(p.actual, p.predicted);
    report.predictions.push_back(std::move(p));
  }
  fr.accuracy = accuracy(fr.matrix);
  fr.kappa = kappa(fr.matrix);
  report.per_fold.push_back(fr);
  report.aggregate_matrix = fr.matrix;
  report.accuracy = fr.accuracy;
  report.kappa = fr.kappa;
  report.chance_accuracy = chance_accuracy(test.labels);
  return report;
}

// --- incremental per-turn classification ---

struct IncrementalStep {
  int turn_index = 0;  // prefix length in exchanges, 1-based
  Label label = Label::Unlabeled;
  Label accumulated_label = Label::Unlabeled;
  double expert_score = 0.0;
  double accumulated_score = 0.0;  // mean centered score over prefixes so far

  bool operator==(const IncrementalStep&) const = default;
};

// Classifies each prefix of the session (first t exchanges, t = 1..n) and
// accumulates the centered expert scores: the accumulated label at t is Expert
// when the mean score over prefixes 1..t is positive, Novice otherwise (ties
// go to Novice). First-turn features are constant across prefixes; global
// features (call duration included: duration so far) are recomputed per
// prefix. Leading exchanges before the user first speaks yield no step —
// there is nothing to extract yet.
inline std::vector<IncrementalStep> classify_incremental(const TrainedModel& model,
                                                         const Session& s,
                                                         const ExtractionConfig& config = {}) {
  if (s.exchanges.empty()) throw Error("classify_incremental: session has no exchanges");
  std::vector<IncrementalStep> steps;
  Session prefix;
  prefix.session_id = s.session_id;
  prefix.label = s.label;
  prefix.first_system_prompt_duration = s.first_system_prompt_duration;
  double score_sum = 0.0;
  for (std::size_t t = 1; t <= s.exchanges.size(); ++t) {
    prefix.exchanges.assign(s.exchanges.begin(),
                            s.exchanges.begin() + static_cast<std::ptrdiff_t>(t));
    if (!prefix.has_interaction()) continue;
    FeatureVector v = extract_features(prefix, config);
    IncrementalStep step;
    step.turn_index = static_cast<int>(t);
    step.label = model.predict(v);
    step.expert_score = model.expert_score(v);
    score_sum += step.expert_score;
    step.accumulated_score =
        score_sum / static_cast<double>(steps.size() + 1);
    step.accumulated_label = step.accumulated_score > 0.0 ? Label::Expert : Label::Novice;
    steps.push_back(std::move(step));
  }
  if (steps.empty()) throw Error("classify_incremental: the user never speaks");
  return steps;
}

// --- report rendering ---

inline nlohmann::json confusion_to_json(const ConfusionMatrix& cm) {
  return nlohmann::json::array({nlohmann::json::array({cm.counts[0][0], cm.counts[0][1]}),
                                nlohmann::json::array({cm.counts[1][0], cm.counts[1][1]})});
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["kappa"] = r.kappa;
  j["chance_accuracy"] = r.chance_accuracy;
  j["aggregate_matrix"] = confusion_to_json(r.aggregate_matrix);
  j["config"] = {{"learner", r.config_echo.learner},
                 {"feature_set", r.config_echo.feature_set},
                 {"seed", r.config_echo.seed},
                 {"k", r.config_echo.k},
                 {"balanced", r.config_echo.balanced},
                 {"balance_in_fold", r.config_echo.balance_in_fold},
                 {"selection", r.config_echo.selection}};
  j["per_fold"] = nlohmann::json::array();
  for (const FoldResult& f : r.per_fold)
    j["per_fold"].push_back({{"matrix", confusion_to_json(f.matrix)},
                             {"accuracy", f.accuracy},
                             {"kappa", f.kappa}});
  if (!r.fold_feature_sets.empty()) j["fold_feature_sets"] = r.fold_feature_sets;
  if (!r.fold_model_digests.empty()) j["fold_model_digests"] = r.fold_model_digests;
  if (!r.caveats.empty()) j["caveats"] = r.caveats;
  return j;
}

namespace detail {
inline std::string fixed3(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << v;
  return out.str();
}
}  // namespace detail

// One line per report: feature set, learner, accuracy, kappa, chance.
inline std::string report_summary_row(const EvalReport& r) {
  std::ostringstream out;
  out << std::left << std::setw(34) << r.config_echo.feature_set << " " << std::setw(6)
      << r.config_echo.learner << " accuracy=" << detail::fixed3(r.accuracy)
      << " kappa=" << detail::fixed3(r.kappa)
      << " chance=" << detail::fixed3(r.chance_accuracy);
  return out.str();
}

inline std::string render_report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "evaluation: " << r.config_echo.feature_set << " / " << r.config_echo.learner
      << " (k=" << r.config_echo.k << ", seed=" << r.config_echo.seed
      << ", balanced=" << (r.config_echo.balanced ? "yes" : "no");
  if (r.config_echo.balance_in_fold) out << " in-fold";
  if (r.config_echo.selection != "none") out << ", selection=" << r.config_echo.selection;
  out << ")\n";
  out << "  accuracy " << detail::fixed3(r.accuracy) << "  kappa " << detail::fixed3(r.kappa)
      << "  chance " << detail::fixed3(r.chance_accuracy) << "\n";
  out << "  confusion (rows actual Novice,Expert; columns predicted):\n";
  for (std::size_t row = 0; row < 2; ++row)
    out << "    " << std::setw(6) << r.aggregate_matrix.counts[row][0] << " " << std::setw(6)
        << r.aggregate_matrix.counts[row][1] << "\n";
  if (r.per_fold.size() > 1) {
    out << "  folds:\n";
    for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
      out << "    fold " << std::setw(2) << f << "  accuracy "
          << detail::fixed3(r.per_fold[f].accuracy) << "  kappa "
          << detail::fixed3(r.per_fold[f].kappa);
      if (f < r.fold_feature_sets.size()) out << "  " << r.fold_feature_sets[f];
      out << "\n";
    }
  }
  for (const std::string& c : r.caveats) out << "  caveat: " << c << "\n";
  return out.str();
}

}  // namespace expertise
