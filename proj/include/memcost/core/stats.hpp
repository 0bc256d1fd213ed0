#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "memcost/core/dialogue.hpp"
#include "memcost/core/error.hpp"
#include "memcost/core/money.hpp"
#include "memcost/core/tokenizer.hpp"

namespace memcost {

struct StatsSummary {
  std::int64_t n = 0;
  std::int64_t min = 0;
  std::int64_t max = 0;
  std::int64_t median = 0;     // lower middle for even n
  std::int64_t mean_tenths = 0;  // mean rounded half-even to one decimal, times ten

  double mean() const { return static_cast<double>(mean_tenths) / 10.0; }

  std::string mean_string() const {
    return std::to_string(mean_tenths / 10) + "." + std::to_string(mean_tenths % 10);
  }
};

inline StatsSummary summarize_counts(std::span<const std::int64_t> counts) {
  if (counts.empty()) throw InvalidInput("dataset is empty");
  std::vector<std::int64_t> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  __int128 total = 0;
  for (auto c : sorted) total += c;
  StatsSummary s;
  s.n = static_cast<std::int64_t>(sorted.size());
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = sorted[(sorted.size() - 1) / 2];
  s.mean_tenths = detail::div_round_half_even(total * 10, s.n);
  return s;
}

inline std::int64_t conversation_tokens(const Conversation& c, std::string_view tokenizer) {
  std::int64_t total = 0;
  for (const auto& s : c.sessions) {
    for (const auto& m : s.messages) total += count_tokens(m.content, tokenizer).value();
  }
  return total;
}

/// Token statistics over raw message content, one sample per conversation.
inline StatsSummary dataset_stats(std::span<const Conversation> conversations,
                                  std::string_view tokenizer = kApproxTokenizer) {
  std::vector<std::int64_t> counts;
  counts.reserve(conversations.size());
  for (const auto& c : conversations) counts.push_back(conversation_tokens(c, tokenizer));
  return summarize_counts(counts);
}

/// Token statistics over raw question text.
inline StatsSummary dataset_stats(std::span<const Question> questions,
                                  std::string_view tokenizer = kApproxTokenizer) {
  std::vector<std::int64_t> counts;
  counts.reserve(questions.size());
  for (const auto& q : questions) counts.push_back(count_tokens(q.text, tokenizer).value());
  return summarize_counts(counts);
}

}  // namespace memcost
