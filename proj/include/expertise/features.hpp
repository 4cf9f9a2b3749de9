// Session-level feature extraction and named feature sets. Thirteen features
// with stable ordinals; values may be missing, never sentinel numbers.
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "math_util.hpp"

namespace expertise {

enum class FeatureId : int {
  barge_in_count = 0,
  barge_in_rate = 1,
  first_turn_barge_in = 2,
  first_turn_delay = 3,
  first_turn_positive_delay = 4,
  mean_utterance_duration = 5,
  call_duration = 6,
  first_turn_duration = 7,
  exchange_count = 8,
  global_speech_rate = 9,
  first_turn_speech_rate = 10,
  help_request_count = 11,
  first_turn_help = 12,
};

inline constexpr int kFeatureCount = 13;

inline constexpr std::array<FeatureId, kFeatureCount> kAllFeatureIds = {
    FeatureId::barge_in_count,      FeatureId::barge_in_rate,
    FeatureId::first_turn_barge_in, FeatureId::first_turn_delay,
    FeatureId::first_turn_positive_delay,
    FeatureId::mean_utterance_duration,
    FeatureId::call_duration,       FeatureId::first_turn_duration,
    FeatureId::exchange_count,      FeatureId::global_speech_rate,
    FeatureId::first_turn_speech_rate,
    FeatureId::help_request_count,  FeatureId::first_turn_help,
};

inline const char* feature_name(FeatureId f) {
  switch (f) {
    case FeatureId::barge_in_count: return "barge_in_count";
    case FeatureId::barge_in_rate: return "barge_in_rate";
    case FeatureId::first_turn_barge_in: return "first_turn_barge_in";
    case FeatureId::first_turn_delay: return "first_turn_delay";
    case FeatureId::first_turn_positive_delay: return "first_turn_positive_delay";
    case FeatureId::mean_utterance_duration: return "mean_utterance_duration";
    case FeatureId::call_duration: return "call_duration";
    case FeatureId::first_turn_duration: return "first_turn_duration";
    case FeatureId::exchange_count: return "exchange_count";
    case FeatureId::global_speech_rate: return "global_speech_rate";
    case FeatureId::first_turn_speech_rate: return "first_turn_speech_rate";
    case FeatureId::help_request_count: return "help_request_count";
    case FeatureId::first_turn_help: return "first_turn_help";
  }
  throw Error("invalid feature id");
}

inline FeatureId feature_from_name(std::string_view name) {
  for (FeatureId f : kAllFeatureIds)
    if (name == feature_name(f)) return f;
  throw ParseError("unknown feature name '" + std::string(name) + "'");
}

// A session's features. `in_domain` tracks which features the vector carries
// (projections narrow it); a carried feature may still have a missing value.
// `approximate` marks values that came from the fallback phone estimator.
struct FeatureVector {
  std::string session_id;
  Label label = Label::Unlabeled;
  std::array<std::optional<double>, kFeatureCount> values{};
  std::array<bool, kFeatureCount> in_domain{};
  std::array<bool, kFeatureCount> approximate{};

  static std::size_t idx(FeatureId f) { return static_cast<std::size_t>(f); }

  void set(FeatureId f, double v) {
    values[idx(f)] = v;
    in_domain[idx(f)] = true;
  }
  void set_missing(FeatureId f) {
    values[idx(f)].reset();
    in_domain[idx(f)] = true;
  }
  bool contains(FeatureId f) const { return in_domain[idx(f)]; }
  bool present(FeatureId f) const { return in_domain[idx(f)] && values[idx(f)].has_value(); }
  std::optional<double> get(FeatureId f) const {
    return in_domain[idx(f)] ? values[idx(f)] : std::nullopt;
  }
  std::vector<FeatureId> domain() const {
    std::vector<FeatureId> d;
    for (FeatureId f : kAllFeatureIds)
      if (in_domain[idx(f)]) d.push_back(f);
    return d;
  }

  bool operator==(const FeatureVector&) const = default;
};

struct ExtractionConfig {
  double default_first_prompt_duration = 10.25;
  std::vector<std::string> help_keywords = {"help"};
  std::string help_dtmf_key = "0";
  bool phone_estimator_enabled = true;
};

// --- interruptions ---

struct InterruptionFeatures {
  long long barge_in_count = 0;
  double barge_in_rate = 0.0;  // percent of exchanges
  bool first_turn_barge_in = false;
};

inline InterruptionFeatures extract_interruptions(const Session& s) {
  if (!s.has_interaction()) throw ExtractionError("no-interaction session");
  InterruptionFeatures out;
  for (const Exchange& e : s.exchanges)
    if (e.user_barge_in) ++out.barge_in_count;
  out.barge_in_rate =
      100.0 * static_cast<double>(out.barge_in_count) / static_cast<double>(s.exchanges.size());
  out.first_turn_barge_in = s.exchanges.front().user_barge_in;
  return out;
}

// --- delays ---

struct DelayFeatures {
  std::optional<double> first_turn_delay;
  std::optional<double> first_turn_positive_delay;
};

// The first system utterance's end falls back to its start plus the session's
// prompt duration (or the config default) when system_end is not logged.
inline DelayFeatures extract_delays(const Session& s, const ExtractionConfig& config) {
  DelayFeatures out;
  const Exchange& e1 = s.exchanges.front();
  if (!e1.user_start) return out;  // both missing, not an error
  double system_end = e1.system_end
                          ? *e1.system_end
                          : e1.system_start + (s.first_system_prompt_duration
                                                   ? *s.first_system_prompt_duration
                                                   : config.default_first_prompt_duration);
  double delay = *e1.user_start - system_end;
  out.first_turn_delay = delay;
  if (delay > 0.0) out.first_turn_positive_delay = delay;
  return out;
}

// --- durations ---

struct DurationFeatures {
  std::optional<double> mean_utterance_duration;
  std::optional<double> call_duration;
  std::optional<double> first_turn_duration;
  long long exchange_count = 0;
};

inline DurationFeatures extract_durations(const Session& s) {
  DurationFeatures out;
  out.exchange_count = static_cast<long long>(s.exchanges.size());
  double sum = 0.0;
  long long n = 0;
  double min_start = std::numeric_limits<double>::infinity();
  double max_end = -std::numeric_limits<double>::infinity();
  bool any_end = false;
  for (const Exchange& e : s.exchanges) {
    min_start = std::min(min_start, e.system_start);
    if (e.user_start) min_start = std::min(min_start, *e.user_start);
    if (e.system_end) {
      max_end = std::max(max_end, *e.system_end);
      any_end = true;
    }
    if (e.user_end) {
      max_end = std::max(max_end, *e.user_end);
      any_end = true;
    }
    if (e.user_start && e.user_end) {
      sum += *e.user_end - *e.user_start;
      ++n;
    }
  }
  if (n > 0) out.mean_utterance_duration = sum / static_cast<double>(n);
  if (any_end) out.call_duration = max_end - min_start;
  const Exchange& e1 = s.exchanges.front();
  if (e1.user_start && e1.user_end) out.first_turn_duration = *e1.user_end - *e1.user_start;
  return out;
}

// --- speech rate ---

// Count of maximal vowel-letter groups per word, minimum one per word, with a
// word-final lone 'e' not counted when the word has another group. Phones are
// estimated as ceil(1.3 x syllables) over the whole transcript.
inline long long estimate_phone_count(std::string_view transcript) {
  long long syllables = 0;
  bool any_word = false;
  std::string word;
  auto is_vowel = [](char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
  };
  auto flush = [&]() {
    if (word.empty()) return;
    any_word = true;
    long long groups = 0;
    bool in_group = false;
    for (char c : word) {
      if (is_vowel(c)) {
        if (!in_group) ++groups;
        in_group = true;
      } else {
        in_group = false;
      }
    }
    if (groups >= 2 && word.back() == 'e' &&
        (word.size() < 2 || !is_vowel(word[word.size() - 2])))
      --groups;
    syllables += std::max<long long>(groups, 1);
    word.clear();
  };
  for (char raw : transcript) {
    unsigned char u = static_cast<unsigned char>(raw);
    if (std::isalpha(u))
      word.push_back(static_cast<char>(std::tolower(u)));
    else
      flush();
  }
  flush();
  if (!any_word) throw ExtractionError("empty transcript");
  return static_cast<long long>(std::ceil(1.3 * static_cast<double>(syllables)));
}

struct SpeechRateFeatures {
  std::optional<double> global_speech_rate;
  std::optional<double> first_turn_speech_rate;
  bool used_estimator = false;
};

// Session value is the arithmetic mean of per-utterance rates, not pooled
// phones over pooled time.
inline SpeechRateFeatures extract_speech_rate(const Session& s, const ExtractionConfig& config,
                                              std::vector<std::string>* warnings = nullptr) {
  SpeechRateFeatures out;
  double sum = 0.0;
  long long n = 0;
  for (const Exchange& e : s.exchanges) {
    if (!e.user_start || !e.user_end) continue;
    std::optional<long long> phones = e.phone_count;
    bool estimated = false;
    if (!phones && config.phone_estimator_enabled && e.transcript && !e.transcript->empty()) {
      phones = estimate_phone_count(*e.transcript);
      estimated = true;
    }
    if (!phones) continue;
    double duration = *e.user_end - *e.user_start;
    if (duration <= 0.0) {
      if (warnings)
        warnings->push_back("exchange " + std::to_string(e.index) +
                            ": zero-duration utterance with phones excluded from speech rate");
      continue;
    }
    double rate = static_cast<double>(*phones) / duration;
    sum += rate;
    ++n;
    if (estimated) out.used_estimator = true;
    if (e.index == 1) out.first_turn_speech_rate = rate;
  }
  if (n > 0) out.global_speech_rate = sum / static_cast<double>(n);
  return out;
}

// --- help requests ---

struct HelpFeatures {
  long long help_request_count = 0;
  bool first_turn_help = false;
};

namespace detail {

// Whole-token, case-insensitive keyword match on letter sequences.
inline bool transcript_has_keyword(const std::string& transcript,
                                   const std::vector<std::string>& keywords) {
  std::string token;
  auto check = [&]() {
    if (token.empty()) return false;
    for (const auto& k : keywords)
      if (token == k) return true;
    return false;
  };
  for (char raw : transcript) {
    unsigned char u = static_cast<unsigned char>(raw);
    if (std::isalpha(u)) {
      token.push_back(static_cast<char>(std::tolower(u)));
    } else {
      if (check()) return true;
      token.clear();
    }
  }
  return check();
}

inline bool is_help_request(const Exchange& e, const ExtractionConfig& config) {
  if (e.help_flag && *e.help_flag) return true;
  if (e.transcript && transcript_has_keyword(*e.transcript, config.help_keywords)) return true;
  if (e.dtmf && !config.help_dtmf_key.empty() &&
      e.dtmf->find(config.help_dtmf_key) != std::string::npos)
    return true;
  return false;
}

}  // namespace detail

inline HelpFeatures extract_help(const Session& s, const ExtractionConfig& config) {
  HelpFeatures out;
  for (const Exchange& e : s.exchanges)
    if (detail::is_help_request(e, config)) ++out.help_request_count;
  out.first_turn_help = detail::is_help_request(s.exchanges.front(), config);
  return out;
}

// --- full vector ---

inline FeatureVector extract_features(const Session& s, const ExtractionConfig& config,
                                      std::vector<std::string>* warnings = nullptr) {
  if (!s.has_interaction()) throw ExtractionError("no-interaction session");
  FeatureVector v;
  v.session_id = s.session_id;
  v.label = s.label;

  InterruptionFeatures in = extract_interruptions(s);
  v.set(FeatureId::barge_in_count, static_cast<double>(in.barge_in_count));
  v.set(FeatureId::barge_in_rate, in.barge_in_rate);
  v.set(FeatureId::first_turn_barge_in, in.first_turn_barge_in ? 1.0 : 0.0);

  DelayFeatures de = extract_delays(s, config);
  if (de.first_turn_delay)
    v.set(FeatureId::first_turn_delay, *de.first_turn_delay);
  else
    v.set_missing(FeatureId::first_turn_delay);
  if (de.first_turn_positive_delay)
    v.set(FeatureId::first_turn_positive_delay, *de.first_turn_positive_delay);
  else
    v.set_missing(FeatureId::first_turn_positive_delay);

  DurationFeatures du = extract_durations(s);
  if (du.mean_utterance_duration)
    v.set(FeatureId::mean_utterance_duration, *du.mean_utterance_duration);
  else
    v.set_missing(FeatureId::mean_utterance_duration);
  if (du.call_duration)
    v.set(FeatureId::call_duration, *du.call_duration);
  else
    v.set_missing(FeatureId::call_duration);
  if (du.first_turn_duration)
    v.set(FeatureId::first_turn_duration, *du.first_turn_duration);
  else
    v.set_missing(FeatureId::first_turn_duration);
  v.set(FeatureId::exchange_count, static_cast<double>(du.exchange_count));

  SpeechRateFeatures sr = extract_speech_rate(s, config, warnings);
  if (sr.global_speech_rate)
    v.set(FeatureId::global_speech_rate, *sr.global_speech_rate);
  else
    v.set_missing(FeatureId::global_speech_rate);
  if (sr.first_turn_speech_rate)
    v.set(FeatureId::first_turn_speech_rate, *sr.first_turn_speech_rate);
  else
    v.set_missing(FeatureId::first_turn_speech_rate);
  if (sr.used_estimator) {
    v.approximate[FeatureVector::idx(FeatureId::global_speech_rate)] = true;
    v.approximate[FeatureVector::idx(FeatureId::first_turn_speech_rate)] = true;
  }

  HelpFeatures h = extract_help(s, config);
  v.set(FeatureId::help_request_count, static_cast<double>(h.help_request_count));
  v.set(FeatureId::first_turn_help, h.first_turn_help ? 1.0 : 0.0);
  return v;
}

// --- feature sets ---

struct FeatureSet {
  enum class Kind {
    Interruptions,
    Delays,
    Durations,
    SpeechRate,
    HelpRequests,
    FirstTurn,
    Global,
    All,
    Selected,
  };

  Kind kind = Kind::All;
  std::vector<FeatureId> selected;  // Selected only; nonempty, ordinal-sorted

  FeatureSet() = default;
  explicit FeatureSet(Kind k) : kind(k) {
    if (k == Kind::Selected) throw Error("Selected feature set needs an explicit list");
  }
  static FeatureSet make_selected(std::vector<FeatureId> features) {
    if (features.empty()) throw Error("Selected feature set needs a nonempty list");
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());
    FeatureSet s;
    s.kind = Kind::Selected;
    s.selected = std::move(features);
    return s;
  }

  std::vector<FeatureId> members() const {
    using F = FeatureId;
    switch (kind) {
      case Kind::Interruptions:
        return {F::barge_in_count, F::barge_in_rate, F::first_turn_barge_in};
      case Kind::Delays:
        return {F::first_turn_delay, F::first_turn_positive_delay};
      case Kind::Durations:
        return {F::mean_utterance_duration, F::call_duration, F::first_turn_duration,
                F::exchange_count};
      case Kind::SpeechRate:
        return {F::global_speech_rate, F::first_turn_speech_rate};
      case Kind::HelpRequests:
        return {F::help_request_count, F::first_turn_help};
      case Kind::FirstTurn:
        return {F::first_turn_barge_in, F::first_turn_delay, F::first_turn_positive_delay,
                F::first_turn_duration, F::first_turn_speech_rate, F::first_turn_help};
      case Kind::Global:
        return {F::barge_in_count,  F::barge_in_rate,      F::mean_utterance_duration,
                F::call_duration,   F::exchange_count,     F::global_speech_rate,
                F::help_request_count};
      case Kind::All:
        return std::vector<FeatureId>(kAllFeatureIds.begin(), kAllFeatureIds.end());
      case Kind::Selected:
        return selected;
    }
    throw Error("invalid feature set");
  }

  std::string name() const {
    switch (kind) {
      case Kind::Interruptions: return "Interruptions";
      case Kind::Delays: return "Delays";
      case Kind::Durations: return "Durations";
      case Kind::SpeechRate: return "SpeechRate";
      case Kind::HelpRequests: return "HelpRequests";
      case Kind::FirstTurn: return "FirstTurn";
      case Kind::Global: return "Global";
      case Kind::All: return "All";
      case Kind::Selected: {
        std::string s = "Selected(";
        for (std::size_t i = 0; i < selected.size(); ++i) {
          if (i) s += ",";
          s += feature_name(selected[i]);
        }
        return s + ")";
      }
    }
    throw Error("invalid feature set");
  }

  // Named sets only; Selected lists are assembled programmatically or via the
  // CLI's explicit feature flags.
  static FeatureSet parse(std::string_view name) {
    for (Kind k : {Kind::Interruptions, Kind::Delays, Kind::Durations, Kind::SpeechRate,
                   Kind::HelpRequests, Kind::FirstTurn, Kind::Global, Kind::All}) {
      FeatureSet s(k);
      if (name == s.name()) return s;
    }
    throw ParseError("unknown feature set '" + std::string(name) + "'");
  }
};

// The report row order used whenever all sets are evaluated together.
inline std::vector<FeatureSet::Kind> feature_set_order() {
  using K = FeatureSet::Kind;
  return {K::Interruptions, K::Delays,  K::Durations, K::SpeechRate, K::HelpRequests,
          K::FirstTurn,     K::Global,  K::All,       K::Selected};
}

inline FeatureVector project(const FeatureVector& v, const FeatureSet& set) {
  if (set.kind == FeatureSet::Kind::Selected && set.selected.empty())
    throw Error("Selected feature set needs a nonempty list");
  FeatureVector out;
  out.session_id = v.session_id;
  out.label = v.label;
  for (FeatureId f : set.members()) {
    std::size_t i = FeatureVector::idx(f);
    if (!v.in_domain[i]) continue;
    out.in_domain[i] = true;
    out.values[i] = v.values[i];
    out.approximate[i] = v.approximate[i];
  }
  return out;
}

}  // namespace expertise
