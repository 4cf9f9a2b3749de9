// Versioned model persistence: a header line, one line of JSON, and a
// digest line over the preceding bytes. Doubles serialize in shortest
// round-trip form, so a loaded model reproduces predictions bit-exactly.
#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "forest.hpp"
#include "svm.hpp"

namespace expertise {

inline constexpr const char* kModelHeader = "#expertise-model v1";

enum class LearnerKind { Forest, Svm };

inline const char* learner_name(LearnerKind k) {
  return k == LearnerKind::Forest ? "forest" : "svm";
}

inline LearnerKind learner_from_name(std::string_view name) {
  if (name == "forest") return LearnerKind::Forest;
  if (name == "svm") return LearnerKind::Svm;
  throw ParseError("unknown learner kind '" + std::string(name) + "'");
}

// A trained classifier of either kind, with its conditioning baked in.
// Forest path: impute-only conditioner, trees consume imputed raw values.
// SVM path: the SvmModel already carries its impute+normalize conditioner.
struct TrainedModel {
  LearnerKind kind = LearnerKind::Forest;
  Conditioner conditioner;  // forest-path imputer; mirrors svm.conditioner otherwise
  ForestModel forest;
  SvmModel svm;
  // Training config echo (seed, source matrix, flags...), carried verbatim in
  // the model file so any artifact can be reproduced from its inputs. Keys
  // and values are free-form strings; empty means "not recorded".
  std::map<std::string, std::string> provenance;

  bool operator==(const TrainedModel&) const = default;

  const std::vector<std::string>& feature_names() const {
    return kind == LearnerKind::Forest ? forest.feature_names : svm.feature_names;
  }

  // Raw (unconditioned) row parallel to feature_names().
  Label predict_row(const std::vector<std::optional<double>>& raw) const {
    if (kind == LearnerKind::Svm) return svm_predict_row(svm, raw);
    return predict_forest_row(forest, impute(raw)).label;
  }

  // Centered score: positive leans Expert, negative leans Novice.
  // SVM: the decision value w.x+b. Forest: expert vote fraction minus 1/2.
  double expert_score_row(const std::vector<std::optional<double>>& raw) const {
    if (kind == LearnerKind::Svm) return decision_value_row(svm, raw);
    return predict_forest_row(forest, impute(raw)).vote_fraction[1] - 0.5;
  }

  Label predict(const FeatureVector& x) const {
    return predict_row(row_from_vector(x));
  }
  double expert_score(const FeatureVector& x) const {
    return expert_score_row(row_from_vector(x));
  }

  std::vector<std::optional<double>> row_from_vector(const FeatureVector& x) const {
    std::vector<std::optional<double>> row;
    row.reserve(feature_names().size());
    for (const std::string& name : feature_names()) {
      FeatureId id = feature_from_name(name);
      if (!x.contains(id))
        throw Error("predict: feature-list mismatch: '" + name + "' not in input domain");
      row.push_back(x.get(id));
    }
    return row;
  }

 private:
  std::vector<std::optional<double>> impute(
      const std::vector<std::optional<double>>& raw) const {
    if (raw.size() != conditioner.means.size())
      throw Error("predict: feature-list mismatch");
    std::vector<std::optional<double>> out(raw.size());
    for (std::size_t c = 0; c < raw.size(); ++c)
      out[c] = conditioner.condition_value(c, raw[c]);
    return out;
  }
};

// Which learner to train plus its configuration; the seed passed to
// train_model overrides forest.master_seed so callers can fan out seeds.
struct LearnerSpec {
  LearnerKind kind = LearnerKind::Forest;
  ForestConfig forest;
  SmoConfig svm;
};

inline TrainedModel train_model(const Dataset& d, const LearnerSpec& spec, std::uint64_t seed,
                                std::vector<std::string>* warnings = nullptr) {
  TrainedModel m;
  m.kind = spec.kind;
  if (spec.kind == LearnerKind::Forest) {
    m.conditioner = Conditioner::fit(d, /*normalize=*/false);
    ForestConfig cfg = spec.forest;
    cfg.master_seed = seed;
    m.forest = train_forest(m.conditioner.apply(d), cfg);
  } else {
    m.svm = svm_train(d, spec.svm, warnings);
    m.conditioner = m.svm.conditioner;
  }
  return m;
}

namespace detail {

inline nlohmann::json conditioner_to_json(const Conditioner& c) {
  return {{"means", c.means}, {"mins", c.mins}, {"maxs", c.maxs}, {"normalize", c.normalize}};
}

inline Conditioner conditioner_from_json(const nlohmann::json& j,
                                         const std::vector<std::string>& columns) {
  Conditioner c;
  c.column_names = columns;
  c.means = j.at("means").get<std::vector<double>>();
  c.mins = j.at("mins").get<std::vector<double>>();
  c.maxs = j.at("maxs").get<std::vector<double>>();
  c.normalize = j.at("normalize").get<bool>();
  if (c.means.size() != columns.size() || c.mins.size() != columns.size() ||
      c.maxs.size() != columns.size())
    throw ModelError("model file: conditioner length mismatch");
  return c;
}

inline nlohmann::json tree_to_json(const Tree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& n : tree.nodes) {
    if (n.feature < 0) {
      nodes.push_back({{"n", {n.counts[0], n.counts[1]}}});
    } else {
      nodes.push_back({{"f", n.feature},
                       {"t", n.threshold},
                       {"l", n.left},
                       {"r", n.right},
                       {"m", n.missing_left ? 1 : 0}});
    }
  }
  return nodes;
}

inline Tree tree_from_json(const nlohmann::json& j) {
  Tree tree;
  if (!j.is_array() || j.empty()) throw ModelError("model file: empty tree");
  int size = static_cast<int>(j.size());
  int index = 0;
  for (const auto& nj : j) {
    TreeNode n;
    if (nj.contains("f")) {
      n.feature = nj.at("f").get<int>();
      n.threshold = nj.at("t").get<double>();
      n.left = nj.at("l").get<int>();
      n.right = nj.at("r").get<int>();
      n.missing_left = nj.at("m").get<int>() != 0;
      if (n.feature < 0 || n.left <= index || n.right <= index || n.left >= size ||
          n.right >= size)
        throw ModelError("model file: malformed tree node");
    } else {
      n.counts = {nj.at("n").at(0).get<std::int64_t>(), nj.at("n").at(1).get<std::int64_t>()};
      if (n.counts[0] < 0 || n.counts[1] < 0 || (n.counts[0] == 0 && n.counts[1] == 0))
        throw ModelError("model file: bad leaf counts");
    }
    tree.nodes.push_back(n);
    ++index;
  }
  return tree;
}

}  // namespace detail

inline std::string serialize_model(const TrainedModel& m) {
  nlohmann::json j;
  j["kind"] = learner_name(m.kind);
  if (m.kind == LearnerKind::Forest) {
    const ForestModel& f = m.forest;
    j["features"] = f.feature_names;
    j["config"] = {{"n_trees", f.n_trees},
                   {"mtry", f.mtry},
                   {"max_depth", f.max_depth},
                   {"min_samples_leaf", f.min_samples_leaf},
                   {"master_seed", f.master_seed}};
    j["conditioner"] = detail::conditioner_to_json(m.conditioner);
    if (f.oob_accuracy)
      j["oob_accuracy"] = *f.oob_accuracy;
    else
      j["oob_accuracy"] = nullptr;
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& t : f.trees) trees.push_back(detail::tree_to_json(t));
    j["trees"] = std::move(trees);
  } else {
    const SvmModel& s = m.svm;
    j["features"] = s.feature_names;
    j["config"] = {{"C", s.C}};
    j["conditioner"] = detail::conditioner_to_json(s.conditioner);
    j["weights"] = s.weights;
    j["bias"] = s.bias;
    j["alphas"] = s.alphas;
    j["status"] = smo_status_name(s.status);
    j["iterations"] = s.iterations;
  }
  if (!m.provenance.empty()) j["provenance"] = m.provenance;
  std::string body = std::string(kModelHeader) + "\n" + j.dump() + "\n";
  return body + "#digest fnv1a64:" + hex64(fnv1a64(body)) + "\n";
}

inline void save_model(std::ostream& out, const TrainedModel& m) { out << serialize_model(m); }

// The digest line's value for a model, usable as a compact fingerprint.
inline std::string model_digest(const TrainedModel& m) {
  std::string text = serialize_model(m);
  auto pos = text.rfind("fnv1a64:");
  return text.substr(pos + 8, 16);
}

inline TrainedModel parse_model(const std::string& text) {
  // The JSON payload is a single line (raw newlines cannot appear inside
  // it), so the last "\n#digest " starts the digest line.
  std::size_t digest_pos = text.rfind("\n#digest ");
  std::size_t header_len = std::string(kModelHeader).size();
  bool good_header = text.rfind(kModelHeader, 0) == 0 && text.size() > header_len &&
                     text[header_len] == '\n';
  if (!good_header && text.rfind("#expertise-model", 0) == 0)
    throw ModelError("unsupported model version");
  if (!good_header || digest_pos == std::string::npos)
    throw ModelError("missing '#expertise-model v1' header or digest line");
  digest_pos += 1;  // skip the newline; the digest covers everything before it
  std::string digest_line = text.substr(digest_pos);
  while (!digest_line.empty() && (digest_line.back() == '\n' || digest_line.back() == '\r'))
    digest_line.pop_back();
  const std::string prefix = "#digest fnv1a64:";
  if (digest_line.rfind(prefix, 0) != 0) throw ModelError("model file: malformed digest line");
  std::string stored = digest_line.substr(prefix.size());
  std::string body = text.substr(0, digest_pos);
  if (hex64(fnv1a64(body)) != stored)
    throw ModelError("model file: digest mismatch (corrupted or edited)");

  // Body = header line + JSON line.
  std::size_t newline = body.find('\n');
  std::string json_text = body.substr(newline + 1);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model file: bad JSON payload: ") + e.what());
  }

  try {
    TrainedModel m;
    m.kind = learner_from_name(j.at("kind").get<std::string>());
    if (j.contains("provenance"))
      m.provenance = j.at("provenance").get<std::map<std::string, std::string>>();
    std::vector<std::string> features = j.at("features").get<std::vector<std::string>>();
    if (features.empty()) throw ModelError("model file: empty feature list");
    if (m.kind == LearnerKind::Forest) {
      ForestModel& f = m.forest;
      f.feature_names = features;
      const auto& cfg = j.at("config");
      f.n_trees = cfg.at("n_trees").get<int>();
      f.mtry = cfg.at("mtry").get<int>();
      f.max_depth = cfg.at("max_depth").get<int>();
      f.min_samples_leaf = cfg.at("min_samples_leaf").get<int>();
      f.master_seed = cfg.at("master_seed").get<std::uint64_t>();
      m.conditioner = detail::conditioner_from_json(j.at("conditioner"), features);
      if (!j.at("oob_accuracy").is_null()) f.oob_accuracy = j.at("oob_accuracy").get<double>();
      for (const auto& tj : j.at("trees")) f.trees.push_back(detail::tree_from_json(tj));
      if (static_cast<int>(f.trees.size()) != f.n_trees)
        throw ModelError("model file: tree count mismatch");
      if (f.mtry < 1 || static_cast<std::size_t>(f.mtry) > features.size())
        throw ModelError("model file: mtry out of range");
    } else {
      SvmModel& s = m.svm;
      s.feature_names = features;
      s.C = j.at("config").at("C").get<double>();
      s.conditioner = detail::conditioner_from_json(j.at("conditioner"), features);
      m.conditioner = s.conditioner;
      s.weights = j.at("weights").get<std::vector<double>>();
      s.bias = j.at("bias").get<double>();
      s.alphas = j.at("alphas").get<std::vector<double>>();
      s.iterations = j.at("iterations").get<long long>();
      std::string status = j.at("status").get<std::string>();
      if (status == "converged")
        s.status = SmoStatus::Converged;
      else if (status == "stagnated")
        s.status = SmoStatus::Stagnated;
      else if (status == "iteration-guard")
        s.status = SmoStatus::IterationGuard;
      else
        throw ModelError("model file: unknown status '" + status + "'");
      if (s.weights.size() != features.size())
        throw ModelError("model file: weight length mismatch");
      for (double a : s.alphas)
        if (a < 0.0 || a > s.C) throw ModelError("model file: alpha out of [0, C]");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model file: missing or mistyped field: ") + e.what());
  }
}

inline TrainedModel load_model(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.empty()) throw ModelError("empty model file");
  return parse_model(text);
}

}  // namespace expertise
