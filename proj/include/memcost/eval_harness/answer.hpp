#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memcost/core/dialogue.hpp"
#include "memcost/core/error.hpp"
#include "memcost/core/money.hpp"
#include "memcost/core/pricing.hpp"
#include "memcost/core/prompt_template.hpp"
#include "memcost/core/tokenizer.hpp"
#include "memcost/core/transcript.hpp"
#include "memcost/llm_gateway/client.hpp"
#include "memcost/memory_engine/memory_store.hpp"
#include "memcost/prompts.hpp"
#include "memcost/vector_index/hnsw_index.hpp"

namespace memcost::eval_harness {

enum class Mode { memory, long_context };

inline const char* to_string(Mode m) { return m == Mode::memory ? "memory" : "long_context"; }

inline Mode mode_from_string(std::string_view s) {
  if (s == "memory" || s == "mem") return Mode::memory;
  if (s == "lc" || s == "long_context") return Mode::long_context;
  throw InvalidInput("mode must be 'memory' or 'lc' (got '" + std::string(s) + "')");
}

inline constexpr std::size_t kDefaultTopK = 20;

struct RetrievedFact {
  std::string record_id;
  std::string text;
  double similarity = 0.0;
};

struct AnswerTrace {
  std::string question_id;
  Mode mode = Mode::memory;
  std::vector<RetrievedFact> retrieved;  // memory mode only, rank order
  TokenCount retrieved_token_count;      // memory mode only
  bool empty_context = false;
  std::string prompt;
  std::string answer_text;
  UsageRecord usage;                     // answering call
  UsageRecord embedding_usage;           // query embedding, memory mode only
  int attempts = 0;
  Money read_cost;
};

struct MemoryAnswerOptions {
  std::size_t top_k = kDefaultTopK;
  std::size_t ef_search = 0;  // 0: index default
  std::string tokenizer = std::string(kApproxTokenizer);
};

inline std::string memory_prompt(const std::vector<RetrievedFact>& facts, const std::string& question) {
  std::string block;
  for (const auto& f : facts) block += "- " + f.text + "\n";
  if (!block.empty()) block.pop_back();
  return fill_template(prompts::kMemoryAnswer, {{"memories", block}, {"question", question}});
}

inline std::string long_context_prompt(const Conversation& conv, const std::string& question) {
  std::string history = render_conversation(conv);
  if (!history.empty()) history.pop_back();
  return fill_template(prompts::kLongContextAnswer, {{"history", history}, {"question", question}});
}

/// Embeds the question, retrieves the user's top-k facts and builds the
/// reader prompt, without calling the reader.
inline AnswerTrace retrieve_for_question(const Question& q, const std::string& user_id,
                                         const memory_engine::MemoryStore& store,
                                         const llm_gateway::EmbeddingClient& embedder,
                                         const MemoryAnswerOptions& opts = {}) {
  validate(q);
  AnswerTrace t;
  t.question_id = q.id;
  t.mode = Mode::memory;
  const auto* index = store.index_for(user_id);
  if (index != nullptr && index->size() > 0) {
    auto emb = embedder.embed({q.text});
    t.embedding_usage = emb.usage;
    if (emb.vectors.front().size() != store.dimension()) {
      throw ConfigError("query embedding dimension does not match store dimension");
    }
    for (const auto& hit : index->search(emb.vectors.front(), opts.top_k, opts.ef_search)) {
      const auto& rec = store.record(hit.record_id);
      t.retrieved.push_back({hit.record_id, rec.text, hit.similarity});
      t.retrieved_token_count += rec.token_len;
    }
  }
  t.empty_context = t.retrieved.empty();
  t.prompt = memory_prompt(t.retrieved, q.text);
  t.read_cost = embedder.rates().input.charge(t.embedding_usage.prompt_tokens.value());
  return t;
}

/// Memory-mode answer: top-k retrieval, then one reader call.
inline AnswerTrace answer_with_memory(const Question& q, const std::string& user_id,
                                      const memory_engine::MemoryStore& store,
                                      const llm_gateway::EmbeddingClient& embedder,
                                      const llm_gateway::ChatClient& reader, const MemoryAnswerOptions& opts = {}) {
  AnswerTrace t = retrieve_for_question(q, user_id, store, embedder, opts);
  auto ex = reader.complete({{"user", t.prompt}});
  t.answer_text = ex.response;
  t.usage = ex.usage;
  t.attempts = ex.attempts;
  t.read_cost += usage_cost(ex.usage, reader.rates());
  return t;
}

/// Long-context answer: the whole timestamped history plus the question.
inline AnswerTrace answer_long_context(const Question& q, const Conversation& conv,
                                       const llm_gateway::ChatClient& lc_backend) {
  validate(q);
  if (conv.message_count() == 0) throw InvalidInput("long-context answer needs a non-empty conversation");
  AnswerTrace t;
  t.question_id = q.id;
  t.mode = Mode::long_context;
  t.prompt = long_context_prompt(conv, q.text);
  auto ex = lc_backend.complete({{"user", t.prompt}});
  t.answer_text = ex.response;
  t.usage = ex.usage;
  t.attempts = ex.attempts;
  t.read_cost = usage_cost(ex.usage, lc_backend.rates());
  return t;
}

}  // namespace memcost::eval_harness
