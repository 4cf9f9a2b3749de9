#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "expertise/corpus.hpp"

using namespace expertise;

namespace {

Session two_exchange_session() {
  Session s;
  s.session_id = "call-001";
  s.label = Label::Novice;
  s.first_system_prompt_duration = 10.25;
  Exchange e1;
  e1.index = 1;
  e1.system_start = 0.0;
  e1.user_start = 9.5;
  e1.user_end = 11.2;
  e1.user_barge_in = true;
  e1.transcript = "when is the next bus";
  e1.phone_count = 22;
  Exchange e2;
  e2.index = 2;
  e2.system_start = 12.0;
  e2.system_end = 15.5;
  e2.user_start = 16.0;
  e2.user_end = 17.0;
  e2.dtmf = "0";
  e2.help_flag = false;
  s.exchanges = {e1, e2};
  return s;
}

}  // namespace

TEST_CASE("session record round-trips through the log format") {
  Session s = two_exchange_session();
  std::string line = serialize_session(s);
  Session back = parse_session_record(line);
  REQUIRE(back == s);
  REQUIRE(serialize_session(back) == line);
  REQUIRE(back.exchanges.size() == 2);
  REQUIRE(back.exchanges[0].user_barge_in);
}

TEST_CASE("labels parse case-insensitively") {
  REQUIRE(parse_label("expert") == Label::Expert);
  REQUIRE(parse_label("EXPERT") == Label::Expert);
  REQUIRE(parse_label("Novice") == Label::Novice);
  REQUIRE(parse_label("unLABELED") == Label::Unlabeled);
  REQUIRE_THROWS_AS(parse_label("guru"), ParseError);

  Session s = parse_session_record(
      R"({"session_id":"x","label":"expert","exchanges":[{"index":1,"system_start":0}]})");
  REQUIRE(s.label == Label::Expert);

  Session u = parse_session_record(
      R"({"session_id":"x","exchanges":[{"index":1,"system_start":0}]})");
  REQUIRE(u.label == Label::Unlabeled);
}

TEST_CASE("invariant violations are named") {
  REQUIRE_THROWS_WITH(
      parse_session_record(
          R"({"session_id":"x","exchanges":[{"index":1,"system_start":0},{"index":3,"system_start":1}]})"),
      Catch::Matchers::ContainsSubstring("non-consecutive exchange index"));
  REQUIRE_THROWS_WITH(
      parse_session_record(
          R"({"session_id":"x","exchanges":[{"index":1,"system_start":0,"user_start":5,"user_end":4}]})"),
      Catch::Matchers::ContainsSubstring("user_end before user_start"));
  REQUIRE_THROWS_WITH(
      parse_session_record(
          R"({"session_id":"x","exchanges":[{"index":1,"system_start":0,"user_barge_in":true}]})"),
      Catch::Matchers::ContainsSubstring("barge-in without user_start"));
  REQUIRE_THROWS_WITH(
      parse_session_record(
          R"({"session_id":"x","exchanges":[{"index":1,"system_start":5},{"index":2,"system_start":4}]})"),
      Catch::Matchers::ContainsSubstring("nondecreasing"));
  REQUIRE_THROWS_AS(parse_session_record("{not json"), ParseError);
  REQUIRE_THROWS_AS(
      parse_session_record(R"({"session_id":"x","exchanges":[]})"), ValidationError);
}

TEST_CASE("unknown fields are ignored with a warning") {
  std::vector<std::string> warnings;
  Session s = parse_session_record(
      R"({"session_id":"x","mood":"great","exchanges":[{"index":1,"system_start":0,"color":"red"}]})",
      &warnings);
  REQUIRE(s.session_id == "x");
  REQUIRE(warnings.size() == 2);
  REQUIRE(warnings[0].find("color") != std::string::npos);
  REQUIRE(warnings[1].find("mood") != std::string::npos);
}

TEST_CASE("corpus loading preserves order and reports rejects") {
  std::ostringstream text;
  text << kLogHeader << "\n";
  text << "# generator: test fixture\n";
  Session a = two_exchange_session();
  a.session_id = "a";
  Session b = two_exchange_session();
  b.session_id = "b";
  text << serialize_session(a) << "\n";
  text << serialize_session(b) << "\n";
  text << serialize_session(b) << "\n";                                  // duplicate id
  text << R"({"session_id":"c","exchanges":[{"index":2,"system_start":0}]})" << "\n";

  std::istringstream in(text.str());
  LoadReport report;
  Corpus c = load_corpus(in, "fixture", &report);
  REQUIRE(c.name == "fixture");
  REQUIRE(c.sessions.size() == 2);
  REQUIRE(c.sessions[0].session_id == "a");
  REQUIRE(c.sessions[1].session_id == "b");
  REQUIRE(report.total_records == 4);
  REQUIRE(report.accepted == 2);
  REQUIRE(report.rejected.size() == 2);
  REQUIRE(report.accepted + report.rejected.size() == report.total_records);
  REQUIRE(report.rejected[0].reason.find("duplicate session_id") != std::string::npos);
}

TEST_CASE("corpus loading rejects missing or unknown headers") {
  std::istringstream empty("");
  REQUIRE_THROWS_AS(load_corpus(empty, "x"), Error);

  std::istringstream headerless(R"({"session_id":"a","exchanges":[]})");
  REQUIRE_THROWS_AS(load_corpus(headerless, "x"), ParseError);

  std::istringstream vnext("#expertise-log v2\n{}");
  REQUIRE_THROWS_WITH(load_corpus(vnext, "x"),
                      Catch::Matchers::ContainsSubstring("unsupported log version"));

  std::istringstream headeronly("#expertise-log v1\n# just comments\n");
  REQUIRE_THROWS_WITH(load_corpus(headeronly, "x"),
                      Catch::Matchers::ContainsSubstring("no session records"));
}

TEST_CASE("sessions without user interaction are flagged") {
  std::ostringstream text;
  text << kLogHeader << "\n";
  text << R"({"session_id":"silent","exchanges":[{"index":1,"system_start":0}]})" << "\n";
  std::istringstream in(text.str());
  LoadReport report;
  Corpus c = load_corpus(in, "x", &report);
  REQUIRE(c.sessions.size() == 1);
  REQUIRE(!c.sessions[0].has_interaction());
  bool flagged = false;
  for (const auto& w : report.warnings)
    if (w.find("no-interaction") != std::string::npos) flagged = true;
  REQUIRE(flagged);
}

TEST_CASE("class distribution counts every label") {
  Corpus c;
  REQUIRE(class_distribution(c).at(Label::Novice) == 0);
  REQUIRE(class_distribution(c).at(Label::Expert) == 0);
  for (int i = 0; i < 235; ++i) {
    Session s = two_exchange_session();
    s.session_id = "n" + std::to_string(i);
    s.label = Label::Novice;
    c.sessions.push_back(s);
  }
  for (int i = 0; i < 80; ++i) {
    Session s = two_exchange_session();
    s.session_id = "e" + std::to_string(i);
    s.label = Label::Expert;
    c.sessions.push_back(s);
  }
  auto dist = class_distribution(c);
  REQUIRE(dist[Label::Novice] == 235);
  REQUIRE(dist[Label::Expert] == 80);
  REQUIRE(dist[Label::Unlabeled] == 0);
}

TEST_CASE("save and reload a corpus") {
  Corpus c;
  c.name = "rt";
  Session a = two_exchange_session();
  c.sessions.push_back(a);
  std::ostringstream out;
  save_corpus(out, c, {"config: seed=1"});
  std::istringstream in(out.str());
  Corpus back = load_corpus(in, "rt");
  REQUIRE(back.sessions.size() == 1);
  REQUIRE(back.sessions[0] == a);
}
