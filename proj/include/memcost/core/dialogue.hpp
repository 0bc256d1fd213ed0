#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memcost/core/error.hpp"
#include "memcost/core/time.hpp"

namespace memcost {

enum class Role { user, assistant };

inline const char* to_string(Role r) { return r == Role::user ? "user" : "assistant"; }

inline Role role_from_string(std::string_view s) {
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw InvalidInput("unknown role '" + std::string(s) + "'");
}

struct Message {
  Role role = Role::user;
  std::string content;
  Timestamp timestamp{};
  // Speaker name as given by the dataset; LoCoMo-style dialogues have two
  // human speakers that both map to Role::user.
  std::string speaker;

  bool operator==(const Message&) const = default;
};

struct Session {
  std::string id;
  Timestamp timestamp{};
  std::vector<Message> messages;

  bool operator==(const Session&) const = default;
};

struct Conversation {
  std::string user_id;
  std::vector<Session> sessions;

  bool operator==(const Conversation&) const = default;

  std::size_t message_count() const {
    std::size_t n = 0;
    for (const auto& s : sessions) n += s.messages.size();
    return n;
  }

  std::vector<Message> flat_messages() const {
    std::vector<Message> out;
    out.reserve(message_count());
    for (const auto& s : sessions) out.insert(out.end(), s.messages.begin(), s.messages.end());
    return out;
  }
};

struct Question {
  std::string id;
  std::string user_id;
  std::string text;
  std::string golden_answer;
  std::optional<std::string> category;

  bool operator==(const Question&) const = default;
};

/// Number of Unicode code points in UTF-8 text (continuation bytes skipped).
inline std::size_t char_length(std::string_view utf8) {
  std::size_t n = 0;
  for (unsigned char c : utf8) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

inline void validate(const Message& m) {
  if (m.content.empty()) throw InvalidInput("message content must be non-empty");
}

inline void validate(const Session& s) {
  if (s.messages.empty()) throw InvalidInput("session '" + s.id + "' has no messages");
  for (std::size_t i = 0; i < s.messages.size(); ++i) {
    validate(s.messages[i]);
    if (i > 0 && s.messages[i].timestamp < s.messages[i - 1].timestamp) {
      throw InvalidInput("session '" + s.id + "': message timestamps decrease at index " +
                         std::to_string(i));
    }
  }
}

inline void validate(const Conversation& c) {
  if (c.user_id.empty()) throw InvalidInput("conversation user_id must be non-empty");
  for (std::size_t i = 0; i < c.sessions.size(); ++i) {
    validate(c.sessions[i]);
    if (i > 0 && c.sessions[i].timestamp < c.sessions[i - 1].timestamp) {
      throw InvalidInput("conversation '" + c.user_id + "': session timestamps decrease at '" +
                         c.sessions[i].id + "'");
    }
  }
}

inline void validate(const Question& q) {
  if (q.text.empty()) throw InvalidInput("question '" + q.id + "' has empty text");
  if (q.golden_answer.empty()) throw InvalidInput("question '" + q.id + "' has empty golden answer");
}

}  // namespace memcost
