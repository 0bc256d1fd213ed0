#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "memcost/core/dialogue.hpp"
#include "memcost/core/error.hpp"

namespace memcost::memory_engine {

inline constexpr std::size_t kDefaultBatchSize = 10;
inline constexpr std::size_t kDefaultMaxChars = 8000;

struct Segment {
  std::vector<Message> messages;
  std::size_t char_len = 0;  // code points of raw message content
  std::int64_t seq_no = 0;
  bool oversize = false;  // a single message longer than max_chars

  bool has_user_message() const {
    for (const auto& m : messages) {
      if (m.role == Role::user) return true;
    }
    return false;
  }
};

/// Greedy chronological partition. A segment closes when the next message
/// would push it past batch_size messages or max_chars characters; a message
/// longer than max_chars gets a segment of its own.
inline std::vector<Segment> segment_conversation(const Conversation& conv, std::size_t batch_size = kDefaultBatchSize,
                                                 std::size_t max_chars = kDefaultMaxChars) {
  if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
  if (max_chars < 1) throw InvalidInput("max_chars must be >= 1");
  std::vector<Segment> out;
  Segment cur;
  auto close = [&] {
    if (cur.messages.empty()) return;
    cur.seq_no = static_cast<std::int64_t>(out.size());
    out.push_back(std::move(cur));
    cur = Segment{};
  };
  for (const auto& session : conv.sessions) {
    for (const auto& m : session.messages) {
      const std::size_t len = char_length(m.content);
      if (len > max_chars) {
        close();
        cur.messages.push_back(m);
        cur.char_len = len;
        cur.oversize = true;
        close();
        continue;
      }
      if (cur.messages.size() + 1 > batch_size || cur.char_len + len > max_chars) close();
      cur.messages.push_back(m);
      cur.char_len += len;
    }
  }
  close();
  return out;
}

}  // namespace memcost::memory_engine
