#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "memcost/core/hash.hpp"
#include "memcost/core/tokenizer.hpp"
#include "memcost/llm_gateway/client.hpp"

namespace memcost::llm_gateway {

namespace mock_text {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",  "an",  "the", "i",  "in",   "on",   "of",   "to",   "and",  "is",  "are", "was", "do",
      "does", "did", "what", "where", "when", "who", "how", "my",  "me",   "you", "your", "it",  "at",
      "for", "with", "that", "this", "be",  "has", "have", "had", "which", "now", "about"};
  return words;
}

/// Lower-cased alphanumeric words minus stopwords, with a trailing plural
/// 's' stripped from longer words.
inline std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    if (cur.size() > 3 && cur.back() == 's') cur.pop_back();
    if (!stopwords().count(cur)) words.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return words;
}

inline std::size_t overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end());
  std::size_t n = 0;
  for (const auto& w : std::set<std::string>(b.begin(), b.end())) n += sa.count(w);
  return n;
}

inline std::vector<std::string> lines(std::string_view text) {
  std::vector<std::string> out;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

inline std::string after_label(const std::string& text, std::string_view label) {
  const auto pos = text.find(label);
  if (pos == std::string::npos) return {};
  const auto start = pos + label.size();
  const auto end = text.find('\n', start);
  std::string v = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
  while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.erase(v.begin());
  while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.pop_back();
  return v;
}

}  // namespace mock_text

using Responder = std::function<std::string(const ChatRequest&)>;

namespace responders {

inline std::string last_user_content(const ChatRequest& r) {
  for (auto it = r.messages.rbegin(); it != r.messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return {};
}

inline Responder echo() { return last_user_content; }

inline Responder fixed(std::string text) {
  return [text = std::move(text)](const ChatRequest&) { return text; };
}

/// Fact extractor: one fact per transcript line spoken in the user role,
/// rendered "<speaker>: <content>", returned as a JSON array.
inline Responder fact_echo() {
  return [](const ChatRequest& r) {
    nlohmann::json facts = nlohmann::json::array();
    for (const auto& line : mock_text::lines(last_user_content(r))) {
      // "[<timestamp>] <speaker> (user): <content>"
      const auto tag = line.find(" (user): ");
      if (line.empty() || line.front() != '[' || tag == std::string::npos) continue;
      const auto close = line.find("] ");
      if (close == std::string::npos || close > tag) continue;
      const std::string speaker = line.substr(close + 2, tag - close - 2);
      facts.push_back(speaker + ": " + line.substr(tag + 9));
    }
    return facts.dump();
  };
}

/// Reader: returns the context line with the largest word overlap with the
/// question line (first such line on ties).
inline Responder context_echo() {
  return [](const ChatRequest& r) {
    const std::string prompt = last_user_content(r);
    const auto question = mock_text::content_words(mock_text::after_label(prompt, "Question:"));
    std::string best;
    std::size_t best_score = 0;
    for (const auto& line : mock_text::lines(prompt)) {
      if (line.rfind("Question:", 0) == 0) continue;
      const auto score = mock_text::overlap(question, mock_text::content_words(line));
      if (score > best_score) {
        best_score = score;
        best = line;
      }
    }
    if (best.rfind("- ", 0) == 0) best.erase(0, 2);
    return best.empty() ? std::string("I don't know.") : best;
  };
}

/// Judge: CORRECT when the generated answer contains the gold answer,
/// case-insensitively.
inline Responder keyword_judge() {
  return [](const ChatRequest& r) {
    const std::string prompt = last_user_content(r);
    const auto gold = mock_text::lower(mock_text::after_label(prompt, "Gold answer:"));
    const auto generated = mock_text::lower(mock_text::after_label(prompt, "Generated answer:"));
    const bool correct = !gold.empty() && generated.find(gold) != std::string::npos;
    return std::string(correct ? "The generated answer names the gold answer. "
                               : "The generated answer does not match the gold answer. ") +
           (correct ? R"({"label": "CORRECT"})" : R"({"label": "WRONG"})");
  };
}

inline Responder by_name(const std::string& name, const nlohmann::json& opts) {
  if (name == "echo") return echo();
  if (name == "fixed") return fixed(opts.value("text", std::string()));
  if (name == "fact_echo") return fact_echo();
  if (name == "context_echo") return context_echo();
  if (name == "keyword_judge") return keyword_judge();
  throw ConfigError("unknown mock responder '" + name + "'");
}

}  // namespace responders

/// Offline chat backend. Scripted steps are consumed first, in order; after
/// that every request goes to the responder. Usage is metered with the
/// approx tokenizer so ledger totals are exactly predictable.
class MockChatTransport : public ChatTransport {
 public:
  struct Step {
    std::optional<std::string> text;  // nullopt means fail with `status`
    int status = 503;
  };

  explicit MockChatTransport(Responder responder = responders::echo()) : responder_(std::move(responder)) {}

  static std::shared_ptr<MockChatTransport> from_config(const BackendConfig& cfg) {
    const auto& m = cfg.mock;
    auto t = std::make_shared<MockChatTransport>(responders::by_name(m.value("responder", std::string("echo")), m));
    t->fail_first_attempts_per_request(m.value("fail_first_attempts", 0));
    return t;
  }

  MockChatTransport& then_reply(std::string text) {
    std::lock_guard lock(mutex_);
    script_.push_back({std::move(text), 0});
    return *this;
  }

  MockChatTransport& then_fail(int status = 503) {
    std::lock_guard lock(mutex_);
    script_.push_back({std::nullopt, status});
    return *this;
  }

  /// The first `n` attempts of every distinct request fail with 503.
  void fail_first_attempts_per_request(int n) {
    std::lock_guard lock(mutex_);
    fail_first_ = n;
  }

  ChatReply send(const ChatRequest& req) override {
    std::optional<Step> step;
    {
      std::lock_guard lock(mutex_);
      ++calls_;
      if (!script_.empty()) {
        step = script_.front();
        script_.pop_front();
      } else if (fail_first_ > 0 && seen_[request_key(req)]++ < fail_first_) {
        step = Step{std::nullopt, 503};
      }
    }
    if (step && !step->text) throw TransportFailure(step->status, "scripted mock failure");
    std::string text = step ? *step->text : responder_(req);
    std::int64_t prompt = 0;
    for (const auto& m : req.messages) prompt += approx_token_count(m.content);
    UsageRecord usage(prompt, 0, approx_token_count(text));
    return {std::move(text), usage};
  }

  std::int64_t calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
  }

 private:
  static std::uint64_t request_key(const ChatRequest& req) {
    std::uint64_t h = fnv1a64(req.model);
    for (const auto& m : req.messages) h = fnv1a64(m.content, fnv1a64(m.role, h));
    return h;
  }

  Responder responder_;
  mutable std::mutex mutex_;
  std::deque<Step> script_;
  int fail_first_ = 0;
  std::map<std::uint64_t, int> seen_;
  std::int64_t calls_ = 0;
};

/// Deterministic hashed bag-of-words embedder: every content word adds a
/// pseudo-random direction seeded by (word, seed), plus a small whole-text
/// term; the sum is normalized. Texts sharing words land close together.
class MockEmbeddingTransport : public EmbeddingTransport {
 public:
  explicit MockEmbeddingTransport(std::size_t dimension = 1536, std::uint64_t seed = 0x5eedULL)
      : dim_(dimension), seed_(seed) {}

  static std::shared_ptr<MockEmbeddingTransport> from_config(const BackendConfig& cfg) {
    auto t = std::make_shared<MockEmbeddingTransport>(cfg.dimension, cfg.mock.value("seed", std::uint64_t{0x5eed}));
    return t;
  }

  std::vector<float> embed_one(std::string_view text) const {
    std::vector<double> acc(dim_, 0.0);
    for (const auto& w : mock_text::content_words(text)) add_direction(acc, fnv1a64(w, seed_ ^ 0x9e3779b97f4a7c15ULL), 1.0);
    add_direction(acc, fnv1a64(text, seed_), 0.15);
    double norm = 0.0;
    for (double x : acc) norm += x * x;
    norm = std::sqrt(norm);
    std::vector<float> out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(acc[i] / norm);
    return out;
  }

  EmbeddingReply send(const EmbeddingRequest& req) override {
    EmbeddingReply reply;
    std::int64_t tokens = 0;
    for (const auto& t : req.inputs) {
      reply.vectors.push_back(embed_one(t));
      tokens += approx_token_count(t);
    }
    reply.usage = UsageRecord(tokens, 0, 0);
    {
      std::lock_guard lock(mutex_);
      ++calls_;
    }
    return reply;
  }

  std::int64_t calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
  }

 private:
  void add_direction(std::vector<double>& acc, std::uint64_t key, double weight) const {
    std::uint64_t state = key;
    for (std::size_t i = 0; i < dim_; ++i) {
      const std::uint64_t bits = splitmix64(state);
      acc[i] += weight * (static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0);  // [-1, 1)
    }
  }

  std::size_t dim_;
  std::uint64_t seed_;
  mutable std::mutex mutex_;
  std::int64_t calls_ = 0;
};

}  // namespace memcost::llm_gateway
