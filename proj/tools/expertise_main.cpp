// Command-line front end for the caller-expertise pipeline:
//   generate -> extract -> select-features / train -> evaluate / classify / monitor
// Every command is a pure function of its inputs and an explicit --seed, and
// every artifact embeds the configuration that produced it, so any stage can
// be reproduced byte-for-byte from its inputs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "expertise/eval.hpp"
#include "expertise/model_io.hpp"
#include "expertise/prep.hpp"
#include "expertise/synth.hpp"

namespace {

using namespace expertise;

// --- shared plumbing ---

// Relative output paths land in EXPERTISE_OUT_DIR when it is set; input
// paths are never rewritten.
std::string resolve_out_path(const std::string& path) {
  const char* dir = std::getenv("EXPERTISE_OUT_DIR");
  if (!dir || *dir == '\0' || path.empty() || path == "-") return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(dir) / p).string();
}

std::ofstream open_out_file(const std::string& resolved) {
  if (auto parent = std::filesystem::path(resolved).parent_path(); !parent.empty())
    std::filesystem::create_directories(parent);
  std::ofstream out(resolved, std::ios::binary);
  if (!out) throw Error("cannot open output file '" + resolved + "'");
  return out;
}

// Emits to stdout when path is empty or "-", otherwise to the resolved file.
void write_text_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::string resolved = resolve_out_path(path);
  auto out = open_out_file(resolved);
  out << text;
  std::cerr << "wrote " << resolved << "\n";
}

std::ifstream open_in_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open input file '" + path + "'");
  return in;
}

// Deterministic one-line-per-setting echo, embedded in artifacts.
std::vector<std::string> echo_lines(const std::string& command,
                                    const std::map<std::string, std::string>& settings) {
  std::vector<std::string> lines{"expertise " + command};
  for (const auto& [key, value] : settings) lines.push_back(key + "=" + value);
  return lines;
}

Dataset load_matrix(const std::string& path) {
  auto in = open_in_file(path);
  return read_matrix_csv(in);
}

Corpus load_corpus_file(const std::string& path, std::ostream& diagnostics) {
  auto in = open_in_file(path);
  LoadReport report;
  Corpus corpus = load_corpus(in, std::filesystem::path(path).stem().string(), &report);
  for (const auto& rej : report.rejected)
    diagnostics << "warning: record " << rej.record_number << " (session '" << rej.session_id
                << "') rejected: " << rej.reason << "\n";
  for (const auto& w : report.warnings) diagnostics << "warning: " << w << "\n";
  return corpus;
}

// Feature-set choice shared by train and evaluate: a named set, or an
// explicit comma-separated feature list.
FeatureSet parse_set_choice(const std::string& named, const std::string& listed) {
  if (!listed.empty()) {
    std::vector<FeatureId> ids;
    std::stringstream ss(listed);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (!token.empty()) ids.push_back(feature_from_name(token));
    }
    return FeatureSet::make_selected(std::move(ids));
  }
  return FeatureSet::parse(named);
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

// --- generate ---

struct GenerateArgs {
  std::size_t n_per_class = 0;
  std::size_t n_total = 0;
  std::uint64_t seed = 0;
  std::string style = "lego";
  std::string name;
  std::string profiles_path;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  GeneratorConfig config;
  config.n_per_class = a.n_per_class;
  config.n_total = a.n_total;
  config.seed = a.seed;
  config.style = corpus_style_from_name(a.style);
  config.corpus_name = a.name;

  auto [novice_spec, expert_spec] = default_class_specs(config.style);
  std::string profile_note = "defaults";
  if (!a.profiles_path.empty()) {
    auto in = open_in_file(a.profiles_path);
    nlohmann::json overrides;
    try {
      overrides = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("profile file '" + a.profiles_path + "': " + e.what());
    }
    for (const auto& [key, value] : overrides.items()) {
      if (key == "novice")
        novice_spec = class_spec_from_json(value, novice_spec);
      else if (key == "expert")
        expert_spec = class_spec_from_json(value, expert_spec);
      else
        throw ParseError("profile file: unknown section '" + key +
                         "' (expected novice/expert)");
    }
    profile_note = a.profiles_path + " fnv1a64:" + hex64(fnv1a64(overrides.dump()));
  }

  Corpus corpus = generate_corpus(config, resolve_profile(novice_spec, Label::Novice, config.style),
                                  resolve_profile(expert_spec, Label::Expert, config.style));

  std::map<std::string, std::string> settings{
      {"style", a.style},
      {"seed", std::to_string(a.seed)},
      {"profiles", profile_note},
      {"sessions", std::to_string(corpus.sessions.size())},
  };
  if (a.n_per_class > 0)
    settings["n_per_class"] = std::to_string(a.n_per_class);
  else
    settings["n_total"] = std::to_string(a.n_total);

  std::ostringstream text;
  save_corpus(text, corpus, echo_lines("generate", settings));
  write_text_output(a.out, text.str());
  return 0;
}

// --- extract ---

struct ExtractArgs {
  std::string corpus_path;
  std::string out;
  double default_prompt = ExtractionConfig{}.default_first_prompt_duration;
};

int cmd_extract(const ExtractArgs& a) {
  Corpus corpus = load_corpus_file(a.corpus_path, std::cerr);
  ExtractionConfig config;
  config.default_first_prompt_duration = a.default_prompt;
  std::vector<std::string> warnings;
  Dataset d = extract_dataset(corpus, config, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

  std::map<std::string, std::string> settings{
      {"corpus", a.corpus_path},
      {"default_prompt", format_double(a.default_prompt)},
      {"rows", std::to_string(d.n_rows())},
  };
  std::ostringstream text;
  write_matrix_csv(text, d, echo_lines("extract", settings));
  write_text_output(a.out, text.str());
  return 0;
}

// --- select-features ---

struct SelectArgs {
  std::string matrix_path;
  int termination = 5;
  std::string format = "text";
  std::string out;
};

int cmd_select_features(const SelectArgs& a) {
  Dataset d = load_matrix(a.matrix_path);
  SelectionResult result = best_first_select(d, a.termination);

  if (a.format == "json") {
    nlohmann::json j;
    j["command"] = "select-features";
    j["config"] = {{"matrix", a.matrix_path}, {"termination", a.termination}};
    j["selected"] = result.selected_names;
    j["merit"] = result.merit;
    j["expansions"] = result.expansions;
    j["evaluated_subsets"] = result.search_trace.size();
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& [names, merit] : result.search_trace)
      trace.push_back({{"subset", names}, {"merit", merit}});
    j["trace"] = std::move(trace);
    write_text_output(a.out, j.dump(2) + "\n");
    return 0;
  }

  std::ostringstream text;
  for (const auto& line :
       echo_lines("select-features", {{"matrix", a.matrix_path},
                                      {"termination", std::to_string(a.termination)}}))
    text << "# " << line << "\n";
  text << "selected (" << result.selected_names.size() << " of " << d.n_cols()
       << " features, merit " << format_double(result.merit) << "):\n";
  for (const auto& name : result.selected_names) text << "  " << name << "\n";
  text << "search: " << result.expansions << " expansions, " << result.search_trace.size()
       << " subsets evaluated\n";
  write_text_output(a.out, text.str());
  return 0;
}

// --- train ---

struct TrainArgs {
  std::string matrix_path;
  std::string learner = "forest";
  std::string feature_set = "All";
  std::string features;
  bool select = false;
  bool balance = false;
  std::uint64_t seed = 0;
  int trees = ForestConfig{}.n_trees;
  int mtry = ForestConfig{}.mtry;
  int max_depth = ForestConfig{}.max_depth;
  int min_leaf = ForestConfig{}.min_samples_leaf;
  double cost = SmoConfig{}.C;
  double kkt_tolerance = SmoConfig{}.kkt_tolerance;
  std::string out;
};

LearnerSpec learner_spec_from(const std::string& learner, int trees, int mtry, int max_depth,
                              int min_leaf, double cost, double kkt_tolerance) {
  LearnerSpec spec;
  spec.kind = learner_from_name(learner);
  spec.forest.n_trees = trees;
  spec.forest.mtry = mtry;
  spec.forest.max_depth = max_depth;
  spec.forest.min_samples_leaf = min_leaf;
  spec.svm.C = cost;
  spec.svm.kkt_tolerance = kkt_tolerance;
  return spec;
}

int cmd_train(const TrainArgs& a) {
  Dataset d = load_matrix(a.matrix_path);
  if (a.balance) d = spread_subsample(d, a.seed);

  FeatureSet set = parse_set_choice(a.feature_set, a.features);
  Dataset pool = project_dataset(d, set);
  if (a.select) {
    SelectionResult sel = best_first_select(pool);
    set = sel.to_feature_set(pool);
    pool = project_dataset(d, set);
  }

  LearnerSpec spec = learner_spec_from(a.learner, a.trees, a.mtry, a.max_depth, a.min_leaf,
                                       a.cost, a.kkt_tolerance);
  std::vector<std::string> warnings;
  TrainedModel model = train_model(pool, spec, a.seed, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

  model.provenance = {
      {"command", "train"},
      {"matrix", a.matrix_path},
      {"learner", a.learner},
      {"feature_set", set.name()},
      {"selected_by_search", format_bool(a.select)},
      {"balanced", format_bool(a.balance)},
      {"seed", std::to_string(a.seed)},
      {"rows", std::to_string(pool.n_rows())},
  };

  std::ostringstream text;
  save_model(text, model);
  if (a.out.empty() || a.out == "-")
    throw Error("train needs --out (a model file path)");
  write_text_output(a.out, text.str());
  std::cout << "trained " << a.learner << " on " << pool.n_rows() << " rows / "
            << model.feature_names().size() << " features (" << set.name()
            << "), digest fnv1a64:" << model_digest(model) << "\n";
  return 0;
}

// --- evaluate ---

struct EvaluateArgs {
  std::string matrix_path;
  std::string test_matrix_path;
  std::string learner = "forest";
  std::string feature_set;  // empty -> the full report-order sweep
  std::string features;
  int k = 10;
  std::uint64_t seed = 0;
  bool balance = true;
  bool balance_in_fold = false;
  bool select_in_fold = false;
  bool digests = false;
  int trees = ForestConfig{}.n_trees;
  int mtry = ForestConfig{}.mtry;
  int max_depth = ForestConfig{}.max_depth;
  int min_leaf = ForestConfig{}.min_samples_leaf;
  double cost = SmoConfig{}.C;
  double kkt_tolerance = SmoConfig{}.kkt_tolerance;
  std::string format = "text";
  std::string out;
};

// One evaluation row. The Selected pseudo-set runs best-first selection:
// outside the fold loop by default, inside with --select-in-fold.
EvalReport evaluate_one(const EvaluateArgs& a, const LearnerSpec& spec, const Dataset& train,
                        const Dataset* test, const FeatureSet& set, bool is_selected_row) {
  if (test) {
    FeatureSet use = set;
    EvalReport report;
    if (is_selected_row) {
      Dataset pool = project_dataset(train, FeatureSet(FeatureSet::Kind::All));
      if (a.balance) pool = spread_subsample(pool, a.seed);
      use = best_first_select(pool).to_feature_set(pool);
      report = cross_corpus_eval(train, *test, spec, use, a.seed, a.balance);
      report.caveats.push_back("features were selected on the training corpus");
    } else {
      report = cross_corpus_eval(train, *test, spec, use, a.seed, a.balance);
    }
    return report;
  }

  CvOptions options;
  options.balance = a.balance;
  options.balance_in_fold = a.balance_in_fold;
  options.compute_model_digests = a.digests;
  if (is_selected_row)
    options.selection = a.select_in_fold ? SelectionMode::InFold : SelectionMode::Outside;
  return cross_validate(train, spec, set, a.k, a.seed, options);
}

int cmd_evaluate(const EvaluateArgs& a) {
  Dataset train = load_matrix(a.matrix_path);
  std::optional<Dataset> test;
  if (!a.test_matrix_path.empty()) test = load_matrix(a.test_matrix_path);

  LearnerSpec spec = learner_spec_from(a.learner, a.trees, a.mtry, a.max_depth, a.min_leaf,
                                       a.cost, a.kkt_tolerance);

  // Which rows to run: one explicit set, or the full sweep in report order.
  struct RowPlan {
    FeatureSet set;
    bool is_selected_row;
  };
  std::vector<RowPlan> plan;
  if (!a.features.empty()) {
    plan.push_back({parse_set_choice(a.feature_set, a.features), false});
  } else if (!a.feature_set.empty()) {
    if (a.feature_set == "Selected")
      plan.push_back({FeatureSet(FeatureSet::Kind::All), true});
    else
      plan.push_back({FeatureSet::parse(a.feature_set), false});
  } else {
    for (FeatureSet::Kind kind : feature_set_order()) {
      if (kind == FeatureSet::Kind::Selected)
        plan.push_back({FeatureSet(FeatureSet::Kind::All), true});
      else
        plan.push_back({FeatureSet(kind), false});
    }
  }

  std::vector<EvalReport> reports;
  reports.reserve(plan.size());
  for (const RowPlan& row : plan)
    reports.push_back(
        evaluate_one(a, spec, train, test ? &*test : nullptr, row.set, row.is_selected_row));

  std::map<std::string, std::string> settings{
      {"matrix", a.matrix_path},
      {"learner", a.learner},
      {"k", std::to_string(a.k)},
      {"seed", std::to_string(a.seed)},
      {"balance", format_bool(a.balance)},
      {"balance_in_fold", format_bool(a.balance_in_fold)},
      {"select_in_fold", format_bool(a.select_in_fold)},
  };
  if (test) settings["test_matrix"] = a.test_matrix_path;

  if (a.format == "json") {
    nlohmann::json j;
    j["command"] = "evaluate";
    nlohmann::json cfg;
    for (const auto& [key, value] : settings) cfg[key] = value;
    j["config"] = std::move(cfg);
    j["reports"] = nlohmann::json::array();
    for (const EvalReport& r : reports) j["reports"].push_back(report_to_json(r));
    write_text_output(a.out, j.dump(2) + "\n");
    return 0;
  }

  std::ostringstream text;
  for (const auto& line : echo_lines("evaluate", settings)) text << "# " << line << "\n";
  if (reports.size() == 1) {
    text << render_report_text(reports.front());
  } else {
    for (const EvalReport& r : reports) text << report_summary_row(r) << "\n";
    for (const EvalReport& r : reports)
      for (const std::string& c : r.caveats)
        text << "# caveat (" << r.config_echo.feature_set << "): " << c << "\n";
  }
  write_text_output(a.out, text.str());
  return 0;
}

// --- classify ---

struct ClassifyArgs {
  std::string model_path;
  std::string corpus_path;
  std::string format = "text";
  std::string out;
};

int cmd_classify(const ClassifyArgs& a) {
  auto model_in = open_in_file(a.model_path);
  TrainedModel model = load_model(model_in);
  Corpus corpus = load_corpus_file(a.corpus_path, std::cerr);

  struct Prediction {
    std::string session_id;
    Label actual;
    Label predicted;
    double score;
  };
  std::vector<Prediction> predictions;
  for (const Session& s : corpus.sessions) {
    if (!s.has_interaction()) {
      std::cerr << "warning: session '" << s.session_id << "' skipped: no user interaction\n";
      continue;
    }
    FeatureVector v = extract_features(s, ExtractionConfig{});
    predictions.push_back({s.session_id, s.label, model.predict(v), model.expert_score(v)});
  }
  if (predictions.empty()) throw Error("no classifiable sessions in the corpus");

  std::map<std::string, std::string> settings{
      {"model", a.model_path},
      {"corpus", a.corpus_path},
      {"sessions", std::to_string(predictions.size())},
  };

  if (a.format == "json") {
    nlohmann::json j;
    j["command"] = "classify";
    j["config"] = {{"model", a.model_path}, {"corpus", a.corpus_path}};
    j["predictions"] = nlohmann::json::array();
    for (const Prediction& p : predictions) {
      nlohmann::json row{{"session_id", p.session_id},
                         {"predicted", label_name(p.predicted)},
                         {"expert_score", p.score}};
      if (p.actual != Label::Unlabeled) row["actual"] = label_name(p.actual);
      j["predictions"].push_back(std::move(row));
    }
    write_text_output(a.out, j.dump(2) + "\n");
    return 0;
  }

  std::ostringstream text;
  for (const auto& line : echo_lines("classify", settings)) text << "# " << line << "\n";
  for (const Prediction& p : predictions) {
    text << p.session_id << "\t" << label_name(p.predicted) << "\t"
         << format_double(p.score);
    if (p.actual != Label::Unlabeled) text << "\tactual=" << label_name(p.actual);
    text << "\n";
  }
  write_text_output(a.out, text.str());
  return 0;
}

// --- monitor ---

struct MonitorArgs {
  std::string model_path;
  std::string corpus_path;
  std::string session_id;
  std::string format = "text";
  std::string out;
};

int cmd_monitor(const MonitorArgs& a) {
  auto model_in = open_in_file(a.model_path);
  TrainedModel model = load_model(model_in);
  Corpus corpus = load_corpus_file(a.corpus_path, std::cerr);

  const Session* session = nullptr;
  if (!a.session_id.empty()) {
    for (const Session& s : corpus.sessions)
      if (s.session_id == a.session_id) session = &s;
    if (!session) throw Error("session '" + a.session_id + "' not found in the corpus");
  } else if (corpus.sessions.size() == 1) {
    session = &corpus.sessions.front();
  } else {
    throw Error("the corpus holds " + std::to_string(corpus.sessions.size()) +
                " sessions; pick one with --session");
  }

  std::vector<IncrementalStep> steps = classify_incremental(model, *session);

  if (a.format == "json") {
    nlohmann::json j;
    j["command"] = "monitor";
    j["config"] = {{"model", a.model_path},
                   {"corpus", a.corpus_path},
                   {"session", session->session_id}};
    j["steps"] = nlohmann::json::array();
    for (const IncrementalStep& s : steps)
      j["steps"].push_back({{"turn", s.turn_index},
                            {"label", label_name(s.label)},
                            {"expert_score", s.expert_score},
                            {"accumulated_label", label_name(s.accumulated_label)},
                            {"accumulated_score", s.accumulated_score}});
    write_text_output(a.out, j.dump(2) + "\n");
    return 0;
  }

  std::ostringstream text;
  for (const auto& line : echo_lines("monitor", {{"model", a.model_path},
                                                 {"corpus", a.corpus_path},
                                                 {"session", session->session_id}}))
    text << "# " << line << "\n";
  for (const IncrementalStep& s : steps)
    text << "turn " << s.turn_index << "\t" << label_name(s.label) << "\tscore="
         << format_double(s.expert_score) << "\taccumulated=" << label_name(s.accumulated_label)
         << "\taccumulated_score=" << format_double(s.accumulated_score) << "\n";
  write_text_output(a.out, text.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"novice/expert caller classification from dialog-session logs"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file overriding flags per subcommand");

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand("generate", "synthesize a labeled session-log corpus");
  generate->add_option("--n-per-class", gen.n_per_class, "sessions per class (balanced corpus)");
  generate->add_option("--n-total", gen.n_total, "total sessions, split by class priors");
  generate->add_option("--seed", gen.seed, "master seed")->capture_default_str();
  generate->add_option("--style", gen.style, "corpus style: lego | lg2014")
      ->check(CLI::IsMember({"lego", "lg2014"}))
      ->capture_default_str();
  generate->add_option("--name", gen.name, "corpus name (default: synthetic-<style>)");
  generate->add_option("--profiles", gen.profiles_path,
                       "JSON file with partial novice/expert profile overrides");
  generate->add_option("--out", gen.out, "output session-log path ('-' = stdout)");

  ExtractArgs ext;
  CLI::App* extract = app.add_subcommand("extract", "session log -> feature matrix");
  extract->add_option("--corpus", ext.corpus_path, "session-log file")->required();
  extract->add_option("--default-prompt", ext.default_prompt,
                      "fallback first-prompt length in seconds")
      ->capture_default_str();
  extract->add_option("--out", ext.out, "output matrix path ('-' = stdout)");

  SelectArgs sel;
  CLI::App* select =
      app.add_subcommand("select-features", "correlation-based best-first feature selection");
  select->add_option("--matrix", sel.matrix_path, "feature-matrix file")->required();
  select->add_option("--termination", sel.termination,
                     "stop after this many non-improving expansions")
      ->capture_default_str();
  select->add_option("--format", sel.format, "text | json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  select->add_option("--out", sel.out, "output path ('-' = stdout)");

  TrainArgs tr;
  CLI::App* train = app.add_subcommand("train", "fit a model on a feature matrix");
  train->add_option("--matrix", tr.matrix_path, "feature-matrix file")->required();
  train->add_option("--learner", tr.learner, "forest | svm")
      ->check(CLI::IsMember({"forest", "svm"}))
      ->capture_default_str();
  train->add_option("--feature-set", tr.feature_set, "named feature set")
      ->capture_default_str();
  train->add_option("--features", tr.features, "explicit comma-separated feature list");
  train->add_flag("--select", tr.select, "run best-first selection before training");
  train->add_flag("--balance", tr.balance, "spread-subsample classes to equal counts first");
  train->add_option("--seed", tr.seed, "master seed")->capture_default_str();
  train->add_option("--trees", tr.trees, "forest size")->capture_default_str();
  train->add_option("--mtry", tr.mtry, "features per split (0 = floor(log2 M)+1)")
      ->capture_default_str();
  train->add_option("--max-depth", tr.max_depth, "tree depth cap (0 = unlimited)")
      ->capture_default_str();
  train->add_option("--min-leaf", tr.min_leaf, "minimum samples per leaf")
      ->capture_default_str();
  train->add_option("--cost", tr.cost, "SVM soft-margin C")->capture_default_str();
  train->add_option("--kkt-tolerance", tr.kkt_tolerance, "SMO KKT tolerance")
      ->capture_default_str();
  train->add_option("--out", tr.out, "output model path")->required();

  EvaluateArgs ev;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "cross-validated or train/test evaluation report");
  evaluate->add_option("--matrix", ev.matrix_path, "feature-matrix file")->required();
  evaluate->add_option("--test-matrix", ev.test_matrix_path,
                       "separate test matrix (train on --matrix, test here)");
  evaluate->add_option("--learner", ev.learner, "forest | svm")
      ->check(CLI::IsMember({"forest", "svm"}))
      ->capture_default_str();
  evaluate->add_option("--feature-set", ev.feature_set,
                       "one named set (default: every set, one summary row each)");
  evaluate->add_option("--features", ev.features, "explicit comma-separated feature list");
  evaluate->add_option("--k", ev.k, "cross-validation folds")->capture_default_str();
  evaluate->add_option("--seed", ev.seed, "master seed")->capture_default_str();
  evaluate->add_flag("--balance,!--no-balance", ev.balance,
                     "spread-subsample to equal class counts (default on)");
  evaluate->add_flag("--balance-in-fold", ev.balance_in_fold,
                     "rebalance inside each training fold instead of once up front");
  evaluate->add_flag("--select-in-fold", ev.select_in_fold,
                     "run the Selected row's feature search inside each fold");
  evaluate->add_flag("--digests", ev.digests, "record a model digest per fold");
  evaluate->add_option("--trees", ev.trees, "forest size")->capture_default_str();
  evaluate->add_option("--mtry", ev.mtry, "features per split (0 = floor(log2 M)+1)")
      ->capture_default_str();
  evaluate->add_option("--max-depth", ev.max_depth, "tree depth cap (0 = unlimited)")
      ->capture_default_str();
  evaluate->add_option("--min-leaf", ev.min_leaf, "minimum samples per leaf")
      ->capture_default_str();
  evaluate->add_option("--cost", ev.cost, "SVM soft-margin C")->capture_default_str();
  evaluate->add_option("--kkt-tolerance", ev.kkt_tolerance, "SMO KKT tolerance")
      ->capture_default_str();
  evaluate->add_option("--format", ev.format, "text | json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  evaluate->add_option("--out", ev.out, "output path ('-' = stdout)");

  ClassifyArgs cl;
  CLI::App* classify = app.add_subcommand("classify", "per-session predictions from a model");
  classify->add_option("--model", cl.model_path, "model file")->required();
  classify->add_option("--corpus", cl.corpus_path, "session-log file")->required();
  classify->add_option("--format", cl.format, "text | json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  classify->add_option("--out", cl.out, "output path ('-' = stdout)");

  MonitorArgs mo;
  CLI::App* monitor =
      app.add_subcommand("monitor", "per-turn incremental predictions for one session");
  monitor->add_option("--model", mo.model_path, "model file")->required();
  monitor->add_option("--corpus", mo.corpus_path, "session-log file")->required();
  monitor->add_option("--session", mo.session_id, "session id (required unless exactly one)");
  monitor->add_option("--format", mo.format, "text | json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  monitor->add_option("--out", mo.out, "output path ('-' = stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (generate->parsed()) return cmd_generate(gen);
    if (extract->parsed()) return cmd_extract(ext);
    if (select->parsed()) return cmd_select_features(sel);
    if (train->parsed()) return cmd_train(tr);
    if (evaluate->parsed()) return cmd_evaluate(ev);
    if (classify->parsed()) return cmd_classify(cl);
    if (monitor->parsed()) return cmd_monitor(mo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
