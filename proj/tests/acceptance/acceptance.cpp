// Acceptance gate: ten numbered end-to-end criteria, one PASS/FAIL line each.
// Every expected value is either computed here by an independent method
// (brute-force recounts, grid search, hand-replayed fold loops) or is a
// published reference statistic the generator is built to reproduce.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "expertise/eval.hpp"
#include "expertise/synth.hpp"

#include "../fixture_sessions.hpp"
#include "../svm_grid.hpp"

using namespace expertise;

namespace {

// Records failures with a message; a criterion passes when nothing failed.
struct Checker {
  std::ostringstream log;
  int failures = 0;

  bool check(bool ok, const std::string& message) {
    if (!ok) {
      ++failures;
      log << "  - " << message << "\n";
    }
    return ok;
  }
  bool near(double got, double want, double margin, const std::string& what) {
    std::ostringstream msg;
    msg << what << ": got " << got << ", want " << want << " +/- " << margin;
    return check(std::abs(got - want) <= margin, msg.str());
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// --- criterion 1: accuracy and kappa against a brute-force recount ---

bool metric_oracle(Checker& c) {
  Rng rng(20260101);
  for (int trial = 0; trial < 1000; ++trial) {
    ConfusionMatrix cm;
    do {
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
          cm.counts[i][j] = static_cast<std::int64_t>(rng.below(200));
    } while (cm.total() == 0);

    long double a = cm.counts[0][0], b = cm.counts[0][1];
    long double d = cm.counts[1][1], e = cm.counts[1][0];
    long double n = a + b + e + d;
    long double po = (a + d) / n;
    long double pe = ((a + b) * (a + e) + (e + d) * (b + d)) / (n * n);
    double want_acc = static_cast<double>(po);
    double want_kappa = (pe == 1.0L) ? (po == 1.0L ? 1.0 : 0.0)
                                     : static_cast<double>((po - pe) / (1.0L - pe));

    if (!c.near(accuracy(cm), want_acc, 1e-12, "accuracy, trial " + std::to_string(trial)))
      return false;
    if (!c.near(kappa(cm), want_kappa, 1e-12, "kappa, trial " + std::to_string(trial)))
      return false;
  }

  ConfusionMatrix fixed;
  fixed.counts = {{{40, 10}, {20, 30}}};
  c.check(kappa(fixed) == 0.40, "kappa([[40,10],[20,30]]) must be exactly 0.40");
  return c.failures == 0;
}

// --- criterion 2: SMO against the analytic two-point solution and grid search ---

bool smo_oracle(Checker& c) {
  {
    std::vector<std::vector<double>> x{{-1.0}, {1.0}};
    std::vector<int> y{-1, 1};
    SmoSolution s = smo_solve(x, y, SmoConfig{});
    c.near(s.alphas[0], 0.5, 1e-6, "two-point alpha[0]");
    c.near(s.alphas[1], 0.5, 1e-6, "two-point alpha[1]");
    c.near(s.weights[0], 1.0, 1e-6, "two-point weight");
    c.near(s.bias, 0.0, 1e-6, "two-point bias");
  }

  SmoConfig sharp;
  sharp.kkt_tolerance = 1e-6;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(mix_seed(606, trial));
    std::size_t n = 2 + rng.below(3);  // 2..4 points
    std::size_t d = 1 + rng.below(2);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row;
      for (std::size_t k = 0; k < d; ++k) row.push_back(2.0 * rng.uniform01() - 1.0);
      x.push_back(row);
      y.push_back(i < n / 2 ? -1 : 1);
    }
    SmoSolution s = smo_solve(x, y, sharp);
    double smo_obj = dual_objective(s);
    double grid_obj = fixtures::grid_dual_max(x, y, sharp.C);
    c.check(smo_obj >= grid_obj - 1e-6, "trial " + std::to_string(trial) + ": dual objective " +
                                            fmt(smo_obj) + " below grid maximum " +
                                            fmt(grid_obj));
    if (s.status == SmoStatus::Converged)
      c.check(kkt_violation(s, x, y, sharp) <= 1e-3,
              "trial " + std::to_string(trial) + ": KKT violation above 1e-3");
  }
  return c.failures == 0;
}

// --- criterion 3: forest determinism, monotone invariance, bootstrap mass ---

bool forest_properties(Checker& c) {
  GeneratorConfig config;
  config.n_per_class = 20;
  config.seed = 131;
  Dataset d = extract_dataset(generate_corpus(config), {});
  LearnerSpec spec;
  spec.kind = LearnerKind::Forest;
  spec.forest.n_trees = 120;
  c.check(model_digest(train_model(d, spec, 7)) == model_digest(train_model(d, spec, 7)),
          "same seed must give an identical model digest");

  // Strictly increasing per-column maps must not change any prediction.
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(mix_seed(31337, trial));
    Dataset raw;
    std::vector<std::vector<std::optional<double>>> cols(4);
    for (int r = 0; r < 40; ++r) {
      raw.session_ids.push_back("r" + std::to_string(r));
      raw.labels.push_back(r % 2 == 0 ? Label::Novice : Label::Expert);
      for (auto& col : cols) col.push_back(6.0 * rng.uniform01() - 3.0);
    }
    for (std::size_t k = 0; k < cols.size(); ++k)
      raw.add_column("f" + std::to_string(k), cols[k]);

    Dataset warped = raw;
    for (std::size_t r = 0; r < warped.n_rows(); ++r) {
      double v0 = *warped.rows[r][0], v1 = *warped.rows[r][1];
      double v2 = *warped.rows[r][2], v3 = *warped.rows[r][3];
      warped.rows[r][0] = 2.0 * v0 + 1.0;
      warped.rows[r][1] = v1 * v1 * v1;
      warped.rows[r][2] = std::exp(v2);
      warped.rows[r][3] = std::atan(v3);
    }

    LearnerSpec small = spec;
    small.forest.n_trees = 60;
    TrainedModel m_raw = train_model(raw, small, 900 + trial);
    TrainedModel m_warp = train_model(warped, small, 900 + trial);
    for (std::size_t r = 0; r < raw.n_rows(); ++r) {
      if (m_raw.predict_row(raw.rows[r]) != m_warp.predict_row(warped.rows[r])) {
        c.check(false, "trial " + std::to_string(trial) + ": prediction changed on row " +
                           std::to_string(r) + " after a monotone feature map");
        break;
      }
    }
  }

  Rng rng(424);
  std::vector<std::size_t> rows = bootstrap_rows(rng, 10000);
  std::sort(rows.begin(), rows.end());
  double unique_count =
      static_cast<double>(std::unique(rows.begin(), rows.end()) - rows.begin());
  c.near(unique_count / 10000.0, 0.632, 0.02, "bootstrap unique fraction at n=10000");
  return c.failures == 0;
}

// --- criterion 4: hand-computed extraction fixtures ---

bool extraction_fixtures(Checker& c) {
  ExtractionConfig config;

  Session barge = fixtures::plain_session("a", 10);
  barge.exchanges[0].user_barge_in = true;
  barge.exchanges[3].user_barge_in = true;
  InterruptionFeatures fi = extract_interruptions(barge);
  c.check(fi.barge_in_count == 2, "barge-in count must be 2");
  c.check(fi.barge_in_rate == 20.0, "barge-in rate must be exactly 20.0");
  c.check(fi.first_turn_barge_in, "first-turn barge-in flag must be set");

  Session delayed;
  delayed.session_id = "d";
  Exchange e1 = fixtures::make_exchange(1, 0.0);
  e1.user_start = 12.43;
  e1.user_end = 14.0;
  delayed.exchanges = {e1};
  DelayFeatures fd = extract_delays(delayed, config);  // default prompt 10.25
  c.check(fd.first_turn_delay.has_value() &&
              std::abs(*fd.first_turn_delay - 2.18) <= 1e-12,
          "first-turn delay must be 12.43 - 10.25 = 2.18");
  c.check(fd.first_turn_positive_delay == fd.first_turn_delay,
          "a positive delay is its own positive part");
  delayed.exchanges[0].user_start = 9.50;
  DelayFeatures fn = extract_delays(delayed, config);
  c.check(fn.first_turn_delay == -0.75, "barge-in delay must be 9.50 - 10.25 = -0.75");
  c.check(!fn.first_turn_positive_delay.has_value(),
          "a negative delay has no positive part");

  Session timed = fixtures::plain_session("t", 3);
  timed.exchanges[0].user_end = *timed.exchanges[0].user_start + 1.0;
  timed.exchanges[1].user_end = *timed.exchanges[1].user_start + 2.0;
  timed.exchanges[2].user_end = *timed.exchanges[2].user_start + 3.0;
  DurationFeatures fu = extract_durations(timed);
  c.check(fu.exchange_count == 3, "exchange count must be 3");
  c.check(fu.mean_utterance_duration == 2.0, "mean utterance duration must be exactly 2.0");
  c.check(fu.first_turn_duration == 1.0, "first-turn duration must be exactly 1.0");

  Session spoken = fixtures::plain_session("s", 2);
  spoken.exchanges[0].phone_count = 20;  // 10 phones/s over 2 s
  spoken.exchanges[1].phone_count = 40;  // 20 phones/s over 2 s
  SpeechRateFeatures fs = extract_speech_rate(spoken, config);
  c.check(fs.global_speech_rate == 15.0,
          "global speech rate must average per-utterance rates to exactly 15.0");

  Session helped = fixtures::plain_session("h", 2);
  helped.exchanges[0].transcript = "when is the next bus";
  helped.exchanges[1].transcript = "help";
  HelpFeatures fh = extract_help(helped, config);
  c.check(fh.help_request_count == 1 && !fh.first_turn_help,
          "keyword on turn two must count once, not as first-turn help");
  Session dtmf = fixtures::plain_session("z", 2);
  dtmf.exchanges[0].dtmf = "0";
  HelpFeatures fz = extract_help(dtmf, config);
  c.check(fz.help_request_count >= 1 && fz.first_turn_help,
          "zero-key press on turn one must count as first-turn help");
  Session tricky = fixtures::plain_session("k", 2);
  tricky.exchanges[0].transcript = "that was helpful";
  tricky.exchanges[1].dtmf = "12";
  HelpFeatures fk = extract_help(tricky, config);
  c.check(fk.help_request_count == 0 && !fk.first_turn_help,
          "substring 'helpful' and keypad '12' must not count as help");
  return c.failures == 0;
}

// --- criterion 5: extraction inverts synthesis ---

bool round_trip(Checker& c) {
  for (CorpusStyle style : {CorpusStyle::Lego, CorpusStyle::LetsGo2014}) {
    auto [novice, expert] = default_profiles(style);
    GeneratorConfig config;
    config.style = style;
    for (int i = 0; i < 1000; ++i) {
      const ClassProfile& profile = i % 2 == 0 ? novice : expert;
      Rng rng(mix_seed(5150 + static_cast<std::uint64_t>(style), i));
      FeatureVector target = sample_feature_vector(profile, rng);
      target.session_id = "rt-" + std::to_string(i);
      Session session = synthesize_session(target, config, rng);
      FeatureVector back = extract_features(session, ExtractionConfig{});

      for (FeatureId f : kAllFeatureIds) {
        auto want = target.get(f);
        auto got = back.get(f);
        if (want.has_value() != got.has_value()) {
          c.check(false, std::string(corpus_style_name(style)) + " case " + std::to_string(i) +
                             ": presence of " + feature_name(f) + " not preserved");
          return false;
        }
        if (want && std::abs(*got - *want) > 1e-6) {
          c.check(false, std::string(corpus_style_name(style)) + " case " + std::to_string(i) +
                             ": " + feature_name(f) + " drifted by " +
                             fmt(std::abs(*got - *want)));
          return false;
        }
      }
    }
  }
  return c.failures == 0;
}

// --- criterion 6: generated corpora match the reference class statistics ---

struct ReferenceRow {
  FeatureId id;
  double novice_mean, novice_sigma;
  double expert_mean, expert_sigma;
};

bool distribution_match(Checker& c) {
  GeneratorConfig config;
  config.n_per_class = 1000;
  config.seed = 424242;
  Dataset d = extract_dataset(generate_corpus(config), {});

  // Per-class mean of each feature over the rows where it is present.
  auto class_mean = [&](Label label, FeatureId f) {
    auto col = d.column_index(feature_name(f));
    double sum = 0.0;
    double count = 0.0;
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
      if (d.labels[r] != label || !d.rows[r][*col]) continue;
      sum += *d.rows[r][*col];
      count += 1.0;
    }
    return std::pair<double, double>(sum / count, count);
  };

  const std::vector<ReferenceRow> reference = {
      {FeatureId::barge_in_count, 5.06, 6.79, 2.75, 3.15},
      {FeatureId::barge_in_rate, 16.2, 9.9, 10.3, 6.9},
      {FeatureId::first_turn_delay, 1.52, 3.00, 1.32, 2.81},
      {FeatureId::first_turn_positive_delay, 2.82, 2.79, 1.90, 2.72},
      {FeatureId::mean_utterance_duration, 1.81, 3.14, 1.19, 0.43},
      {FeatureId::call_duration, 123.0, 95.0, 102.0, 78.0},
      {FeatureId::first_turn_duration, 1.81, 2.02, 1.72, 1.66},
      {FeatureId::exchange_count, 28.0, 23.4, 23.8, 13.8},
      {FeatureId::global_speech_rate, 13.7, 3.3, 14.8, 1.9},
      {FeatureId::first_turn_speech_rate, 14.3, 4.1, 14.8, 2.8},
      {FeatureId::help_request_count, 0.27, 0.55, 0.0, 0.0},
  };

  for (const ReferenceRow& row : reference) {
    for (int cls = 0; cls < 2; ++cls) {
      Label label = cls == 0 ? Label::Novice : Label::Expert;
      double want = cls == 0 ? row.novice_mean : row.expert_mean;
      double sigma = cls == 0 ? row.novice_sigma : row.expert_sigma;
      auto [mean, count] = class_mean(label, row.id);
      std::string what = std::string(label_name(label)) + " " + feature_name(row.id);
      if (sigma == 0.0) {
        c.check(mean == want, what + ": must equal " + fmt(want) + " exactly, got " + fmt(mean));
      } else {
        c.near(mean, want, 3.0 * sigma / std::sqrt(count), what);
      }
    }
  }

  // Bernoulli features: reference proportions with binomial standard errors.
  auto flag_checks = std::vector<std::tuple<FeatureId, double, double>>{
      {FeatureId::first_turn_barge_in, 0.60, 0.60},
      {FeatureId::first_turn_help, 0.17, 0.0},
  };
  for (auto [f, novice_p, expert_p] : flag_checks) {
    for (int cls = 0; cls < 2; ++cls) {
      Label label = cls == 0 ? Label::Novice : Label::Expert;
      double p = cls == 0 ? novice_p : expert_p;
      auto [mean, count] = class_mean(label, f);
      std::string what = std::string(label_name(label)) + " " + feature_name(f);
      if (p == 0.0)
        c.check(mean == 0.0, what + ": must be exactly 0, got " + fmt(mean));
      else
        c.near(mean, p, 3.0 * std::sqrt(p * (1.0 - p) / count), what);
    }
  }

  // Qualitative class orderings on the sample means.
  auto mean_of = [&](Label label, FeatureId f) { return class_mean(label, f).first; };
  const std::vector<FeatureId> novice_higher = {
      FeatureId::barge_in_rate,          FeatureId::barge_in_count,
      FeatureId::mean_utterance_duration, FeatureId::call_duration,
      FeatureId::first_turn_duration,     FeatureId::exchange_count,
      FeatureId::help_request_count,
  };
  for (FeatureId f : novice_higher)
    c.check(mean_of(Label::Novice, f) > mean_of(Label::Expert, f),
            std::string("ordering: novice mean of ") + feature_name(f) +
                " must exceed the expert mean");
  for (FeatureId f : {FeatureId::global_speech_rate, FeatureId::first_turn_speech_rate})
    c.check(mean_of(Label::Expert, f) >= mean_of(Label::Novice, f),
            std::string("ordering: expert mean of ") + feature_name(f) +
                " must be at least the novice mean");
  return c.failures == 0;
}

// --- criterion 7: the full pipeline learns the classes ---

bool learnability(Checker& c) {
  LearnerSpec spec;
  spec.kind = LearnerKind::Forest;
  CvOptions options;
  options.balance = false;  // the corpus is already exactly balanced

  double sum_all_acc = 0.0, sum_all_kappa = 0.0;
  double sum_durations_kappa = 0.0, sum_speech_kappa = 0.0;
  const int n_seeds = 5;
  for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
    GeneratorConfig config;
    config.n_per_class = 80;
    config.seed = seed;
    Dataset d = extract_dataset(generate_corpus(config), {});

    EvalReport all = cross_validate(d, spec, FeatureSet(FeatureSet::Kind::All), 10, seed, options);
    EvalReport durations =
        cross_validate(d, spec, FeatureSet(FeatureSet::Kind::Durations), 10, seed, options);
    EvalReport speech =
        cross_validate(d, spec, FeatureSet(FeatureSet::Kind::SpeechRate), 10, seed, options);
    c.check(all.chance_accuracy == 0.5, "balanced corpus must have chance accuracy 0.500");
    sum_all_acc += all.accuracy;
    sum_all_kappa += all.kappa;
    sum_durations_kappa += durations.kappa;
    sum_speech_kappa += speech.kappa;
  }

  double mean_acc = sum_all_acc / n_seeds;
  double mean_kappa = sum_all_kappa / n_seeds;
  double mean_durations = sum_durations_kappa / n_seeds;
  double mean_speech = sum_speech_kappa / n_seeds;
  c.log << "  - seed-averaged All: accuracy " << fmt(mean_acc) << ", kappa " << fmt(mean_kappa)
        << "; Durations kappa " << fmt(mean_durations) << " vs SpeechRate kappa "
        << fmt(mean_speech) << "\n";
  c.check(mean_acc >= 0.65, "mean All-set accuracy " + fmt(mean_acc) + " below 0.65");
  c.check(mean_kappa >= 0.30, "mean All-set kappa " + fmt(mean_kappa) + " below 0.30");
  c.check(mean_durations > mean_speech,
          "mean Durations kappa " + fmt(mean_durations) +
              " does not exceed mean SpeechRate kappa " + fmt(mean_speech));
  return c.failures == 0;
}

// --- criterion 8: selection discards injected noise and dominates singletons ---

bool noise_rejection(Checker& c) {
  int noise_kept = 0, noise_total = 0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    GeneratorConfig config;
    config.n_per_class = 80;
    config.seed = 1000 + s;
    Dataset d = extract_dataset(generate_corpus(config), {});

    Rng noise(mix_seed(s, 77));
    for (int k = 0; k < 5; ++k) {
      std::vector<std::optional<double>> column;
      for (std::size_t r = 0; r < d.n_rows(); ++r) column.push_back(noise.uniform01());
      d.add_column("noise_" + std::to_string(k), column);
      ++noise_total;
    }

    SelectionResult result = best_first_select(d);
    for (const std::string& name : result.selected_names)
      if (name.rfind("noise_", 0) == 0) ++noise_kept;

    CfsContext context(d);
    for (std::size_t col = 0; col < d.n_cols(); ++col) {
      double singleton = context.merit({col});
      if (result.merit + 1e-12 < singleton) {
        c.check(false, "seed " + std::to_string(s) + ": singleton '" + d.column_names[col] +
                           "' merit " + fmt(singleton) + " beats the selected subset's " +
                           fmt(result.merit));
        break;
      }
    }
  }
  c.log << "  - noise features kept: " << noise_kept << " of " << noise_total << "\n";
  c.check(noise_kept * 5 <= noise_total,  // kept <= 20% of injected
          "selection must discard at least 80% of injected noise features");
  return c.failures == 0;
}

// --- criterion 9: fold protocol against a replayed loop, fold balance, no leakage ---

bool evaluation_protocol(Checker& c) {
  GeneratorConfig config;
  config.n_per_class = 10;
  config.seed = 99;
  Dataset d = extract_dataset(generate_corpus(config), {});
  LearnerSpec spec;
  spec.kind = LearnerKind::Forest;
  spec.forest.n_trees = 200;
  FeatureSet all(FeatureSet::Kind::All);

  // Leave-one-out via the library, then the same protocol replayed by hand.
  CvOptions options;
  options.balance = false;
  const std::uint64_t seed = 5;
  const int k = static_cast<int>(d.n_rows());
  EvalReport report = cross_validate(d, spec, all, k, seed, options);

  FoldAssignment folds = stratified_folds(d.labels, k, seed);
  ConfusionMatrix oracle;
  std::vector<Label> oracle_predictions(d.n_rows(), Label::Unlabeled);
  const Dataset pool = project_dataset(d, all);
  for (int fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t r = 0; r < d.n_rows(); ++r)
      (folds.fold_of[r] == fold ? test_rows : train_rows).push_back(r);
    TrainedModel model = train_model(select_rows(pool, train_rows), spec,
                                     mix_seed(seed, static_cast<std::uint64_t>(fold)));
    for (std::size_t r : test_rows) {
      oracle_predictions[r] = model.predict_row(pool.rows[r]);
      oracle.add(d.labels[r], oracle_predictions[r]);
    }
  }
  c.check(report.aggregate_matrix.counts == oracle.counts,
          "leave-one-out confusion matrix differs from the replayed loop");
  c.check(report.accuracy == accuracy(oracle) && report.kappa == kappa(oracle),
          "leave-one-out metrics differ from the replayed loop");
  for (const RowPrediction& p : report.predictions) {
    std::size_t row = 0;
    for (; row < d.n_rows(); ++row)
      if (d.session_ids[row] == p.session_id) break;
    if (p.predicted != oracle_predictions[row]) {
      c.check(false, "prediction for " + p.session_id + " differs from the replayed loop");
      break;
    }
  }

  // Stratified folds: per class, fold sizes differ by at most one.
  for (auto [n_novice, n_expert, folds_k] :
       std::vector<std::tuple<int, int, int>>{{23, 17, 7}, {10, 10, 20}, {20, 13, 5}}) {
    std::vector<Label> labels;
    for (int i = 0; i < n_novice; ++i) labels.push_back(Label::Novice);
    for (int i = 0; i < n_expert; ++i) labels.push_back(Label::Expert);
    FoldAssignment fa = stratified_folds(labels, folds_k, 17);
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<int> count(folds_k, 0);
      for (std::size_t r = 0; r < labels.size(); ++r)
        if (static_cast<int>(labels[r]) == cls) ++count[fa.fold_of[r]];
      int lo = *std::min_element(count.begin(), count.end());
      int hi = *std::max_element(count.begin(), count.end());
      c.check(hi - lo <= 1, "stratified fold sizes for class " + std::to_string(cls) +
                                " differ by " + std::to_string(hi - lo) + " (" +
                                std::to_string(n_novice) + "/" + std::to_string(n_expert) +
                                " rows, k=" + std::to_string(folds_k) + ")");
    }
  }

  // No leakage: corrupting held-out rows must not change the model trained
  // without them (bit-identical digest), while folds that do train on those
  // rows must notice.
  CvOptions digest_options;
  digest_options.balance = false;
  digest_options.compute_model_digests = true;
  FoldAssignment fixed = stratified_folds(d.labels, 5, 11);
  EvalReport clean = cross_validate_with_folds(d, spec, all, fixed, 11, digest_options);

  Dataset corrupted = d;
  for (std::size_t r = 0; r < corrupted.n_rows(); ++r) {
    if (fixed.fold_of[r] != 0) continue;
    corrupted.labels[r] =
        corrupted.labels[r] == Label::Novice ? Label::Expert : Label::Novice;
    for (auto& cell : corrupted.rows[r])
      if (cell) cell = *cell * 3.0 + 1000.0;
  }
  EvalReport tainted = cross_validate_with_folds(corrupted, spec, all, fixed, 11, digest_options);
  c.check(clean.fold_model_digests[0] == tainted.fold_model_digests[0],
          "fold-0 model changed when only its held-out rows were corrupted (leakage)");
  int changed = 0;
  for (std::size_t f = 1; f < clean.fold_model_digests.size(); ++f)
    if (clean.fold_model_digests[f] != tainted.fold_model_digests[f]) ++changed;
  c.check(changed > 0, "corrupted rows should change the folds that train on them");
  return c.failures == 0;
}

// --- criterion 10: accumulating per-turn scores helps by the end of the call ---

bool incremental_mode(Checker& c) {
  GeneratorConfig train_config;
  train_config.n_per_class = 200;
  train_config.seed = 777;
  Dataset train = extract_dataset(generate_corpus(train_config), {});
  LearnerSpec spec;
  spec.kind = LearnerKind::Forest;
  TrainedModel model = train_model(train, spec, 42);

  GeneratorConfig eval_config;
  eval_config.n_per_class = 250;
  eval_config.seed = 888;
  Corpus sessions = generate_corpus(eval_config);

  int first_ok = 0, final_ok = 0, n = 0;
  for (const Session& s : sessions.sessions) {
    std::vector<IncrementalStep> steps = classify_incremental(model, s);
    ++n;
    if (steps.front().label == s.label) ++first_ok;
    if (steps.back().accumulated_label == s.label) ++final_ok;
  }
  double first_acc = static_cast<double>(first_ok) / n;
  double final_acc = static_cast<double>(final_ok) / n;
  c.log << "  - " << n << " sessions: first-turn accuracy " << fmt(first_acc)
        << ", accumulated final accuracy " << fmt(final_acc) << "\n";
  c.check(final_acc >= first_acc,
          "accumulated accuracy " + fmt(final_acc) + " fell below first-turn accuracy " +
              fmt(first_acc));
  return c.failures == 0;
}

struct Criterion {
  int id;
  const char* label;
  double budget_seconds;  // 0 = no stated budget
  std::function<bool(Checker&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "metric oracle (accuracy/kappa recount)", 1.0, metric_oracle},
      {2, "SMO analytic and grid-search oracle", 10.0, smo_oracle},
      {3, "forest determinism/invariance/bootstrap", 30.0, forest_properties},
      {4, "hand-computed extraction fixtures", 0.0, extraction_fixtures},
      {5, "synthesis round-trip identity", 30.0, round_trip},
      {6, "generator matches reference statistics", 0.0, distribution_match},
      {7, "end-to-end learnability", 300.0, learnability},
      {8, "noise rejection in feature selection", 0.0, noise_rejection},
      {9, "evaluation protocol and leakage guard", 0.0, evaluation_protocol},
      {10, "incremental accumulation helps", 0.0, incremental_mode},
  };

  int failed = 0;
  for (const Criterion& criterion : criteria) {
    Checker checker;
    auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = criterion.run(checker);
    } catch (const std::exception& e) {
      checker.check(false, std::string("exception: ") + e.what());
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criterion.budget_seconds > 0.0 && elapsed > criterion.budget_seconds) {
      ok = false;
      checker.log << "  - exceeded the " << criterion.budget_seconds << "s budget\n";
    }

    std::printf("%s  criterion %2d: %-44s %7.2fs", ok ? "PASS" : "FAIL", criterion.id,
                criterion.label, elapsed);
    if (criterion.budget_seconds > 0.0)
      std::printf("  (budget %.0fs)", criterion.budget_seconds);
    std::printf("\n");
    std::string detail = checker.log.str();
    if (!detail.empty()) std::fputs(detail.c_str(), stdout);
    if (!ok) ++failed;
  }

  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed;
}
