#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "memcost/core/dialogue.hpp"
#include "memcost/core/error.hpp"
#include "memcost/core/time.hpp"

namespace memcost {

// Normalized dataset schema shared by every benchmark adapter:
//
//   {"conversations": [{"user_id", "sessions": [{"id", "timestamp",
//       "messages": [{"speaker", "role", "content", "timestamp"}]}]}],
//    "questions": [{"id", "user_id", "text", "golden_answer", "category"}]}
//
// A message without its own timestamp inherits the session timestamp.

struct Dataset {
  std::vector<Conversation> conversations;
  std::vector<Question> questions;

  bool operator==(const Dataset&) const = default;

  const Conversation* find_conversation(std::string_view user_id) const {
    for (const auto& c : conversations) {
      if (c.user_id == user_id) return &c;
    }
    return nullptr;
  }
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw InvalidInput(where + ": missing field '" + key + "'");
  return obj.at(key);
}

inline std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw InvalidInput(where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

inline Dataset dataset_from_json(const nlohmann::json& root) {
  Dataset ds;
  if (!root.is_object()) throw InvalidInput("dataset: top level must be an object");
  if (root.contains("conversations")) {
    const auto& convs = root.at("conversations");
    if (!convs.is_array()) throw InvalidInput("dataset: 'conversations' must be an array");
    for (std::size_t ci = 0; ci < convs.size(); ++ci) {
      const std::string where = "conversations[" + std::to_string(ci) + "]";
      const auto& jc = convs[ci];
      Conversation conv;
      conv.user_id = detail::require_string(jc, "user_id", where);
      const auto& sessions = detail::require(jc, "sessions", where);
      if (!sessions.is_array()) throw InvalidInput(where + ": 'sessions' must be an array");
      for (std::size_t si = 0; si < sessions.size(); ++si) {
        const std::string swhere = where + ".sessions[" + std::to_string(si) + "]";
        const auto& js = sessions[si];
        Session session;
        session.id = js.contains("id") ? js.at("id").get<std::string>() : std::to_string(si);
        session.timestamp = parse_timestamp(detail::require_string(js, "timestamp", swhere));
        const auto& msgs = detail::require(js, "messages", swhere);
        if (!msgs.is_array()) throw InvalidInput(swhere + ": 'messages' must be an array");
        for (std::size_t mi = 0; mi < msgs.size(); ++mi) {
          const std::string mwhere = swhere + ".messages[" + std::to_string(mi) + "]";
          const auto& jm = msgs[mi];
          Message m;
          m.content = detail::require_string(jm, "content", mwhere);
          m.role = role_from_string(jm.value("role", std::string("user")));
          m.speaker = jm.value("speaker", std::string(to_string(m.role)));
          m.timestamp = jm.contains("timestamp") ? parse_timestamp(jm.at("timestamp").get<std::string>())
                                                 : session.timestamp;
          session.messages.push_back(std::move(m));
        }
        conv.sessions.push_back(std::move(session));
      }
      validate(conv);
      ds.conversations.push_back(std::move(conv));
    }
  }
  if (root.contains("questions")) {
    const auto& qs = root.at("questions");
    if (!qs.is_array()) throw InvalidInput("dataset: 'questions' must be an array");
    for (std::size_t qi = 0; qi < qs.size(); ++qi) {
      const std::string where = "questions[" + std::to_string(qi) + "]";
      const auto& jq = qs[qi];
      Question q;
      q.id = detail::require_string(jq, "id", where);
      q.user_id = jq.value("user_id", std::string());
      q.text = detail::require_string(jq, "text", where);
      q.golden_answer = detail::require_string(jq, "golden_answer", where);
      if (jq.contains("category") && jq.at("category").is_string()) q.category = jq.at("category").get<std::string>();
      validate(q);
      ds.questions.push_back(std::move(q));
    }
  }
  return ds;
}

inline nlohmann::json dataset_to_json(const Dataset& ds) {
  nlohmann::json convs = nlohmann::json::array();
  for (const auto& c : ds.conversations) {
    nlohmann::json sessions = nlohmann::json::array();
    for (const auto& s : c.sessions) {
      nlohmann::json msgs = nlohmann::json::array();
      for (const auto& m : s.messages) {
        msgs.push_back({{"speaker", m.speaker},
                        {"role", to_string(m.role)},
                        {"content", m.content},
                        {"timestamp", format_timestamp(m.timestamp)}});
      }
      sessions.push_back({{"id", s.id}, {"timestamp", format_timestamp(s.timestamp)}, {"messages", msgs}});
    }
    convs.push_back({{"user_id", c.user_id}, {"sessions", sessions}});
  }
  nlohmann::json qs = nlohmann::json::array();
  for (const auto& q : ds.questions) {
    nlohmann::json jq = {{"id", q.id}, {"user_id", q.user_id}, {"text", q.text}, {"golden_answer", q.golden_answer}};
    if (q.category) jq["category"] = *q.category;
    qs.push_back(std::move(jq));
  }
  return {{"conversations", convs}, {"questions", qs}};
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("dataset '" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    return dataset_from_json(root);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("dataset '" + path.string() + "': " + e.what());
  }
}

}  // namespace memcost
