// Dialog-session data model and the line-oriented session-log format.
// One JSON object per line, preceded by a "#expertise-log v1" header line.
// Absent optional fields are omitted; '#' lines after the header are comments.
#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "math_util.hpp"

namespace expertise {

inline constexpr const char* kLogHeader = "#expertise-log v1";

enum class Label { Novice, Expert, Unlabeled };

inline const char* label_name(Label l) {
  switch (l) {
    case Label::Novice: return "Novice";
    case Label::Expert: return "Expert";
    default: return "Unlabeled";
  }
}

// Case-insensitive; the on-disk form is the capitalized name.
inline Label parse_label(std::string_view s) {
  std::string t;
  t.reserve(s.size());
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "novice") return Label::Novice;
  if (t == "expert") return Label::Expert;
  if (t == "unlabeled") return Label::Unlabeled;
  throw ParseError("unknown label '" + std::string(s) + "'");
}

struct Exchange {
  int index = 0;  // 1-based within the session
  double system_start = 0.0;
  std::optional<double> system_end;
  std::optional<double> user_start;
  std::optional<double> user_end;
  bool user_barge_in = false;
  std::optional<std::string> transcript;
  std::optional<long long> phone_count;
  std::optional<std::string> dtmf;
  std::optional<bool> help_flag;

  bool operator==(const Exchange&) const = default;
};

struct Session {
  std::string session_id;
  std::optional<double> first_system_prompt_duration;
  std::vector<Exchange> exchanges;
  Label label = Label::Unlabeled;

  bool operator==(const Session&) const = default;

  // False for sessions where the user never speaks; extraction refuses those.
  bool has_interaction() const {
    return std::any_of(exchanges.begin(), exchanges.end(),
                       [](const Exchange& e) { return e.user_start.has_value(); });
  }
};

struct Corpus {
  std::string name;
  std::vector<Session> sessions;
};

inline void validate_session(const Session& s) {
  if (s.exchanges.empty()) throw ValidationError("empty exchange list");
  if (s.session_id.empty()) throw ValidationError("empty session_id");
  if (s.first_system_prompt_duration && *s.first_system_prompt_duration <= 0.0)
    throw ValidationError("nonpositive first_system_prompt_duration");
  double prev_start = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.exchanges.size(); ++i) {
    const Exchange& e = s.exchanges[i];
    if (e.index != static_cast<int>(i) + 1)
      throw ValidationError("non-consecutive exchange index");
    if (e.system_start < 0.0) throw ValidationError("negative timestamp");
    for (const auto& t : {e.system_end, e.user_start, e.user_end})
      if (t && *t < 0.0) throw ValidationError("negative timestamp");
    if (e.system_end && *e.system_end < e.system_start)
      throw ValidationError("system_end before system_start");
    if (e.user_start && e.user_end && *e.user_end < *e.user_start)
      throw ValidationError("user_end before user_start");
    if (e.user_barge_in && !e.user_start)
      throw ValidationError("barge-in without user_start");
    if (e.phone_count && *e.phone_count < 0)
      throw ValidationError("negative phone_count");
    if (e.system_start < prev_start)
      throw ValidationError("system_start not nondecreasing across exchanges");
    prev_start = e.system_start;
  }
}

namespace detail {

inline double require_number(const nlohmann::json& j, const char* field) {
  if (!j.is_number()) throw ParseError(std::string("field '") + field + "': expected number");
  return j.get<double>();
}

inline long long require_integer(const nlohmann::json& j, const char* field) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw ParseError(std::string("field '") + field + "': expected integer");
  return j.get<long long>();
}

inline std::string require_string(const nlohmann::json& j, const char* field) {
  if (!j.is_string()) throw ParseError(std::string("field '") + field + "': expected string");
  return j.get<std::string>();
}

inline bool require_bool(const nlohmann::json& j, const char* field) {
  if (!j.is_boolean()) throw ParseError(std::string("field '") + field + "': expected boolean");
  return j.get<bool>();
}

inline Exchange parse_exchange(const nlohmann::json& j, std::vector<std::string>* warnings) {
  if (!j.is_object()) throw ParseError("exchange: expected object");
  Exchange e;
  bool saw_index = false, saw_start = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "index") {
      e.index = static_cast<int>(require_integer(value, "index"));
      saw_index = true;
    } else if (key == "system_start") {
      e.system_start = require_number(value, "system_start");
      saw_start = true;
    } else if (key == "system_end") {
      e.system_end = require_number(value, "system_end");
    } else if (key == "user_start") {
      e.user_start = require_number(value, "user_start");
    } else if (key == "user_end") {
      e.user_end = require_number(value, "user_end");
    } else if (key == "user_barge_in") {
      e.user_barge_in = require_bool(value, "user_barge_in");
    } else if (key == "transcript") {
      e.transcript = require_string(value, "transcript");
    } else if (key == "phone_count") {
      e.phone_count = require_integer(value, "phone_count");
    } else if (key == "dtmf") {
      e.dtmf = require_string(value, "dtmf");
    } else if (key == "help_flag") {
      e.help_flag = require_bool(value, "help_flag");
    } else if (warnings) {
      warnings->push_back("unknown exchange field '" + key + "' ignored");
    }
  }
  if (!saw_index) throw ParseError("exchange: missing 'index'");
  if (!saw_start) throw ParseError("exchange: missing 'system_start'");
  return e;
}

}  // namespace detail

// One serialized session per record. Unknown fields are skipped and reported
// through `warnings`; invariant violations raise ValidationError.
inline Session parse_session_record(const std::string& record,
                                    std::vector<std::string>* warnings = nullptr) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(record);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad session record: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("session record: expected object");
  Session s;
  bool saw_id = false, saw_exchanges = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "session_id") {
      s.session_id = detail::require_string(value, "session_id");
      saw_id = true;
    } else if (key == "first_system_prompt_duration") {
      s.first_system_prompt_duration =
          detail::require_number(value, "first_system_prompt_duration");
    } else if (key == "label") {
      s.label = parse_label(detail::require_string(value, "label"));
    } else if (key == "exchanges") {
      if (!value.is_array()) throw ParseError("field 'exchanges': expected array");
      for (const auto& ej : value) s.exchanges.push_back(detail::parse_exchange(ej, warnings));
      saw_exchanges = true;
    } else if (warnings) {
      warnings->push_back("unknown session field '" + key + "' ignored");
    }
  }
  if (!saw_id) throw ParseError("session record: missing 'session_id'");
  if (!saw_exchanges) throw ParseError("session record: missing 'exchanges'");
  validate_session(s);
  return s;
}

inline std::string serialize_session(const Session& s) {
  nlohmann::json j;
  j["session_id"] = s.session_id;
  j["label"] = label_name(s.label);
  if (s.first_system_prompt_duration)
    j["first_system_prompt_duration"] = *s.first_system_prompt_duration;
  nlohmann::json arr = nlohmann::json::array();
  for (const Exchange& e : s.exchanges) {
    nlohmann::json ej;
    ej["index"] = e.index;
    ej["system_start"] = e.system_start;
    if (e.system_end) ej["system_end"] = *e.system_end;
    if (e.user_start) ej["user_start"] = *e.user_start;
    if (e.user_end) ej["user_end"] = *e.user_end;
    if (e.user_barge_in) ej["user_barge_in"] = true;
    if (e.transcript) ej["transcript"] = *e.transcript;
    if (e.phone_count) ej["phone_count"] = *e.phone_count;
    if (e.dtmf) ej["dtmf"] = *e.dtmf;
    if (e.help_flag) ej["help_flag"] = *e.help_flag;
    arr.push_back(std::move(ej));
  }
  j["exchanges"] = std::move(arr);
  return j.dump();
}

struct RejectedRecord {
  std::size_t record_number = 0;  // 1-based, counting session records only
  std::string session_id;         // best effort, may be empty
  std::string reason;
};

struct LoadReport {
  std::size_t total_records = 0;
  std::size_t accepted = 0;
  std::vector<RejectedRecord> rejected;
  std::vector<std::string> warnings;
};

// Loads every valid session, preserving input order; invalid records and
// duplicate session ids are skipped and reported.
inline Corpus load_corpus(std::istream& in, const std::string& name,
                          LoadReport* report = nullptr) {
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line != kLogHeader) {
      if (line.rfind("#expertise-log", 0) == 0)
        throw ParseError("unsupported log version: '" + line + "'");
      throw ParseError("missing '#expertise-log v1' header");
    }
    saw_header = true;
    break;
  }
  if (!saw_header) throw Error("empty corpus: no log header");

  Corpus corpus;
  corpus.name = name;
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  std::map<std::string, bool> seen_ids;
  while (std::getline(in, line)) {
    while (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    ++rep.total_records;
    std::string best_effort_id;
    try {
      std::vector<std::string> warnings;
      Session s = parse_session_record(line, &warnings);
      best_effort_id = s.session_id;
      for (auto& w : warnings)
        rep.warnings.push_back("record " + std::to_string(rep.total_records) + ": " + w);
      if (seen_ids.count(s.session_id))
        throw ValidationError("duplicate session_id '" + s.session_id + "'");
      seen_ids[s.session_id] = true;
      if (!s.has_interaction())
        rep.warnings.push_back("record " + std::to_string(rep.total_records) + ": session '" +
                               s.session_id + "' flagged no-interaction");
      corpus.sessions.push_back(std::move(s));
      ++rep.accepted;
    } catch (const Error& e) {
      rep.rejected.push_back({rep.total_records, best_effort_id, e.what()});
    }
  }
  if (rep.total_records == 0) throw Error("empty corpus: no session records");
  return corpus;
}

inline void save_corpus(std::ostream& out, const Corpus& corpus,
                        const std::vector<std::string>& comments = {}) {
  out << kLogHeader << "\n";
  for (const auto& c : comments) out << "# " << c << "\n";
  for (const Session& s : corpus.sessions) out << serialize_session(s) << "\n";
}

inline std::map<Label, std::size_t> class_distribution(const Corpus& corpus) {
  std::map<Label, std::size_t> counts{
      {Label::Novice, 0}, {Label::Expert, 0}, {Label::Unlabeled, 0}};
  for (const Session& s : corpus.sessions) ++counts[s.label];
  return counts;
}

}  // namespace expertise
