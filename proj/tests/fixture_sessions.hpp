// Shared hand-built sessions for tests.
#pragma once

#include "expertise/corpus.hpp"

namespace fixtures {

inline expertise::Exchange make_exchange(int index, double system_start) {
  expertise::Exchange e;
  e.index = index;
  e.system_start = system_start;
  return e;
}

// n exchanges spaced 10s apart, 2s utterances, 30 phones each.
inline expertise::Session plain_session(const std::string& id, int n,
                                         expertise::Label label = expertise::Label::Unlabeled) {
  expertise::Session s;
  s.session_id = id;
  s.label = label;
  s.first_system_prompt_duration = 10.25;
  for (int i = 1; i <= n; ++i) {
    expertise::Exchange e = make_exchange(i, (i - 1) * 10.0);
    e.user_start = (i - 1) * 10.0 + 4.0;
    e.user_end = *e.user_start + 2.0;
    e.phone_count = 30;
    s.exchanges.push_back(e);
  }
  return s;
}

}  // namespace fixtures
