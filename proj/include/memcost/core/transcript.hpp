#pragma once

#include <span>
#include <string>

#include "memcost/core/dialogue.hpp"
#include "memcost/core/time.hpp"

namespace memcost {

// Canonical transcript format, v1. One line per message:
//
//   [2023-05-08T13:56:00] Caroline (user): I went to a support group.
//
// and a header line before each session:
//
//   ## Session s1 (2023-05-08T13:56:00)
//
// Message content is written verbatim; embedded newlines are replaced by a
// space so a message always stays on its own line.
inline constexpr int kTranscriptFormatVersion = 1;

inline std::string transcript_line(const Message& m) {
  std::string content = m.content;
  for (auto& c : content) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  const std::string& speaker = m.speaker.empty() ? std::string(to_string(m.role)) : m.speaker;
  return "[" + format_timestamp(m.timestamp) + "] " + speaker + " (" + to_string(m.role) + "): " + content;
}

inline std::string render_messages(std::span<const Message> messages) {
  std::string out;
  for (const auto& m : messages) {
    out += transcript_line(m);
    out += '\n';
  }
  return out;
}

inline std::string render_conversation(const Conversation& c) {
  std::string out;
  for (const auto& s : c.sessions) {
    out += "## Session " + s.id + " (" + format_timestamp(s.timestamp) + ")\n";
    out += render_messages(s.messages);
  }
  return out;
}

}  // namespace memcost
