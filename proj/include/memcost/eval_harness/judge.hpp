#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "memcost/core/error.hpp"
#include "memcost/core/money.hpp"
#include "memcost/core/pricing.hpp"
#include "memcost/core/prompt_template.hpp"
#include "memcost/llm_gateway/client.hpp"
#include "memcost/prompts.hpp"

namespace memcost::eval_harness {

enum class Label { correct, wrong };

inline const char* to_string(Label l) { return l == Label::correct ? "CORRECT" : "WRONG"; }

struct JudgeVerdict {
  Label label = Label::wrong;
  std::string explanation;
  std::string raw;
  bool parse_failed = false;
  int exchanges = 0;  // chat calls made, re-ask included
  UsageRecord usage;
  Money cost;
};

/// Finds the last JSON object in `text` with a "label" of CORRECT or WRONG.
inline std::optional<Label> parse_label(std::string_view text, std::string* explanation = nullptr) {
  std::optional<Label> found;
  for (std::size_t open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        const auto j = nlohmann::json::parse(text.substr(open, i - open + 1), nullptr, false);
        if (!j.is_discarded() && j.is_object() && j.contains("label") && j.at("label").is_string()) {
          std::string v = j.at("label").get<std::string>();
          for (auto& ch : v) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
          if (v == "CORRECT" || v == "WRONG") {
            found = v == "CORRECT" ? Label::correct : Label::wrong;
            if (explanation) {
              std::string pre(text.substr(0, open));
              while (!pre.empty() && std::isspace(static_cast<unsigned char>(pre.back()))) pre.pop_back();
              *explanation = pre;
            }
          }
        }
        break;
      }
    }
  }
  return found;
}

inline std::vector<llm_gateway::ChatMessage> judge_messages(const std::string& question,
                                                            const std::string& golden_answer,
                                                            const std::string& generated_answer) {
  return {
      {"system", std::string(prompts::kJudgeSystem)},
      {"user", fill_template(prompts::kJudgeUser, {{"question", question},
                                                   {"golden_answer", golden_answer},
                                                   {"generated_answer", generated_answer}})},
  };
}

inline constexpr std::string_view kJudgeReask =
    R"(Your previous reply did not contain the label. Reply with only {"label": "CORRECT"} or {"label": "WRONG"}.)";

/// One independent grading call. An unparseable reply is re-asked once; if
/// that also fails the verdict is WRONG with parse_failed set.
inline JudgeVerdict judge_once(const std::string& question, const std::string& golden_answer,
                               const std::string& generated_answer, const llm_gateway::ChatClient& judge) {
  if (question.empty() || golden_answer.empty() || generated_answer.empty()) {
    throw InvalidInput("judge_once: question, golden answer and generated answer must be non-empty");
  }
  JudgeVerdict v;
  auto messages = judge_messages(question, golden_answer, generated_answer);
  auto ex = judge.complete(messages);
  v.exchanges = 1;
  v.usage = ex.usage;
  v.raw = ex.response;
  auto label = parse_label(ex.response, &v.explanation);
  if (!label) {
    messages.push_back({"assistant", ex.response});
    messages.push_back({"user", std::string(kJudgeReask)});
    auto retry = judge.complete(messages);
    v.exchanges = 2;
    v.usage += retry.usage;
    v.raw = retry.response;
    label = parse_label(retry.response, &v.explanation);
  }
  if (label) {
    v.label = *label;
  } else {
    v.label = Label::wrong;
    v.parse_failed = true;
    v.explanation.clear();
  }
  v.cost = usage_cost(v.usage, judge.rates());
  return v;
}

inline constexpr std::size_t kJudgeVotes = 3;

/// Majority of exactly three votes.
inline Label judge_consensus(std::span<const Label> votes) {
  if (votes.size() != kJudgeVotes) {
    throw InvalidInput("judge_consensus needs exactly 3 votes, got " + std::to_string(votes.size()));
  }
  std::size_t correct = 0;
  for (auto v : votes) correct += v == Label::correct;
  return 2 * correct > votes.size() ? Label::correct : Label::wrong;
}

inline Label judge_consensus(std::span<const JudgeVerdict> verdicts) {
  std::vector<Label> labels;
  for (const auto& v : verdicts) labels.push_back(v.label);
  return judge_consensus(std::span<const Label>(labels));
}

/// Percentage correct in hundredths of a percent, rounded half-even.
inline std::int64_t accuracy_bp(std::span<const Label> labels) {
  if (labels.empty()) throw InvalidInput("accuracy of an empty result set");
  std::int64_t correct = 0;
  for (auto l : labels) correct += l == Label::correct;
  return detail::div_round_half_even(static_cast<__int128>(correct) * 10000, static_cast<__int128>(labels.size()));
}

inline double accuracy(std::span<const Label> labels) { return static_cast<double>(accuracy_bp(labels)) / 100.0; }

/// "49.00"
inline std::string format_accuracy(std::int64_t bp) {
  std::string frac = std::to_string(bp % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(bp / 100) + "." + frac;
}

}  // namespace memcost::eval_harness
