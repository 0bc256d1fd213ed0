#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "memcost/core/error.hpp"
#include "memcost/core/pricing.hpp"
#include "memcost/core/prompt_template.hpp"
#include "memcost/core/transcript.hpp"
#include "memcost/llm_gateway/client.hpp"
#include "memcost/memory_engine/segment.hpp"
#include "memcost/prompts.hpp"

namespace memcost::memory_engine {

class ExtractionError : public Error {
 public:
  ExtractionError(std::int64_t seq_no, const std::string& why)
      : Error(ErrorKind::extraction, "segment " + std::to_string(seq_no) + ": " + why), seq_no_(seq_no) {}
  std::int64_t seq_no() const { return seq_no_; }

 private:
  std::int64_t seq_no_;
};

struct ParsedFacts {
  std::vector<std::string> facts;
  bool parsed = true;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string strip_code_fence(std::string s) {
  if (s.rfind("```", 0) != 0) return s;
  const auto first_nl = s.find('\n');
  const auto last_fence = s.rfind("```");
  if (first_nl == std::string::npos || last_fence <= first_nl) return s;
  return trim(std::string_view(s).substr(first_nl + 1, last_fence - first_nl - 1));
}

inline std::string strip_bullet(std::string line) {
  if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) return trim(line.substr(2));
  if (line.rfind("\xE2\x80\xA2", 0) == 0) return trim(line.substr(3));  // U+2022 bullet
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') && line[i + 1] == ' ') {
    return trim(line.substr(i + 2));
  }
  return line;
}

inline bool collect_json_facts(const nlohmann::json& j, std::vector<std::string>& out) {
  if (j.is_array()) {
    for (const auto& item : j) {
      std::string text;
      if (item.is_string()) {
        text = item.get<std::string>();
      } else if (item.is_object()) {
        for (const char* key : {"text", "memory", "fact"}) {
          if (item.contains(key) && item.at(key).is_string()) {
            text = item.at(key).get<std::string>();
            break;
          }
        }
      } else {
        return false;
      }
      text = trim(text);
      if (!text.empty()) out.push_back(std::move(text));
    }
    return true;
  }
  if (j.is_object()) {
    for (const char* key : {"facts", "memories"}) {
      if (j.contains(key)) return collect_json_facts(j.at(key), out);
    }
  }
  return false;
}

}  // namespace detail

/// Accepts a JSON array (of strings, or objects with a text/memory/fact
/// field), an object wrapping such an array under "facts" or "memories", or
/// plain text with one fact per line (bullets and numbering stripped).
inline ParsedFacts parse_facts(std::string_view reply) {
  ParsedFacts out;
  const std::string body = detail::strip_code_fence(detail::trim(reply));
  if (body.empty()) return out;
  if (body.front() == '[' || body.front() == '{') {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !detail::collect_json_facts(j, out.facts)) {
      out.facts.clear();
      out.parsed = false;
    }
    return out;
  }
  std::size_t start = 0;
  while (start <= body.size()) {
    const auto nl = body.find('\n', start);
    std::string line = detail::trim(std::string_view(body).substr(start, nl == std::string::npos ? std::string::npos : nl - start));
    line = detail::strip_bullet(std::move(line));
    if (!line.empty()) out.facts.push_back(std::move(line));
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return out;
}

struct ExtractionResult {
  std::vector<std::string> facts;
  UsageRecord usage;
  int attempts = 0;  // 0 when no backend call was needed
  std::optional<std::string> warning;
};

inline std::vector<llm_gateway::ChatMessage> extraction_messages(const Segment& segment,
                                                                 std::string_view instructions) {
  return {
      {"system", std::string(instructions)},
      {"user", fill_template(prompts::kFactExtractionFormat, {{"transcript", render_messages(segment.messages)}})},
  };
}

/// One extraction call per segment. Segments without a user message are
/// skipped without calling the backend.
inline ExtractionResult extract_facts(const Segment& segment, const llm_gateway::ChatClient& backend,
                                      std::string_view instructions = prompts::kFactExtraction) {
  ExtractionResult result;
  if (!segment.has_user_message()) return result;
  llm_gateway::ChatExchange ex;
  try {
    ex = backend.complete(extraction_messages(segment, instructions));
  } catch (const llm_gateway::BackendError& e) {
    throw ExtractionError(segment.seq_no, e.what());
  }
  result.usage = ex.usage;
  result.attempts = ex.attempts;
  auto parsed = parse_facts(ex.response);
  if (!parsed.parsed) {
    result.warning = "segment " + std::to_string(segment.seq_no) + ": unparseable extraction reply ignored";
  }
  result.facts = std::move(parsed.facts);
  return result;
}

}  // namespace memcost::memory_engine
