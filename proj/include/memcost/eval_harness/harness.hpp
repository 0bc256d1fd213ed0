#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "memcost/core/dataset.hpp"
#include "memcost/core/error.hpp"
#include "memcost/core/money.hpp"
#include "memcost/core/parallel.hpp"
#include "memcost/core/pricing.hpp"
#include "memcost/core/stats.hpp"
#include "memcost/core/tokenizer.hpp"
#include "memcost/cost_model/cost_model.hpp"
#include "memcost/eval_harness/answer.hpp"
#include "memcost/eval_harness/judge.hpp"
#include "memcost/llm_gateway/client.hpp"
#include "memcost/memory_engine/memory_store.hpp"

namespace memcost::eval_harness {

struct QuestionResult {
  std::string question_id;
  std::string user_id;
  AnswerTrace trace;
  std::vector<JudgeVerdict> verdicts;
  Label consensus = Label::wrong;
  UsageRecord judge_usage;
  Money judge_cost;
};

struct EvalReport {
  Mode mode = Mode::memory;
  std::vector<QuestionResult> results;  // dataset order
  std::int64_t accuracy_bp = 0;
  Money answer_cost;
  Money judge_cost;
  UsageRecord answer_usage;
  UsageRecord judge_usage;
  std::int64_t judge_parse_failures = 0;
};

/// Clients one run needs. Memory mode uses store/embedder/reader; long
/// context mode uses long_context. The judge is always required.
struct EvalBackends {
  const memory_engine::MemoryStore* store = nullptr;
  const llm_gateway::EmbeddingClient* embedder = nullptr;
  const llm_gateway::ChatClient* reader = nullptr;
  const llm_gateway::ChatClient* long_context = nullptr;
  const llm_gateway::ChatClient* judge = nullptr;
};

struct EvalOptions {
  Mode mode = Mode::memory;
  std::size_t top_k = kDefaultTopK;
  std::size_t workers = 4;
};

inline QuestionResult evaluate_question(const Question& q, const Dataset& ds, const EvalBackends& b,
                                        const EvalOptions& opts) {
  QuestionResult r;
  r.question_id = q.id;
  r.user_id = q.user_id;
  if (opts.mode == Mode::memory) {
    if (!b.store || !b.embedder || !b.reader) throw ConfigError("memory mode needs a store, an embedder and a reader");
    r.trace = answer_with_memory(q, q.user_id, *b.store, *b.embedder, *b.reader, {opts.top_k});
  } else {
    if (!b.long_context) throw ConfigError("long-context mode needs a long_context backend");
    const Conversation* conv = ds.find_conversation(q.user_id);
    if (!conv) throw InvalidInput("question '" + q.id + "': no conversation for user '" + q.user_id + "'");
    r.trace = answer_long_context(q, *conv, *b.long_context);
  }
  if (!b.judge) throw ConfigError("evaluation needs a judge backend");
  // An empty answer cannot be graded; judge it as a literal placeholder.
  const std::string answer = r.trace.answer_text.empty() ? std::string("(no answer)") : r.trace.answer_text;
  for (std::size_t v = 0; v < kJudgeVotes; ++v) {
    auto verdict = judge_once(q.text, q.golden_answer, answer, *b.judge);
    r.judge_usage += verdict.usage;
    r.judge_cost += verdict.cost;
    r.verdicts.push_back(std::move(verdict));
  }
  r.consensus = judge_consensus(std::span<const JudgeVerdict>(r.verdicts));
  return r;
}

/// Answers and grades every question of the dataset. Questions run in
/// parallel; results keep dataset order.
inline EvalReport run_eval(const Dataset& ds, const EvalBackends& b, const EvalOptions& opts = {}) {
  if (ds.questions.empty()) throw InvalidInput("dataset has no questions");
  EvalReport rep;
  rep.mode = opts.mode;
  rep.results.resize(ds.questions.size());
  parallel_for(ds.questions.size(), opts.workers,
               [&](std::size_t i) { rep.results[i] = evaluate_question(ds.questions[i], ds, b, opts); });
  std::vector<Label> labels;
  for (const auto& r : rep.results) {
    labels.push_back(r.consensus);
    rep.answer_usage += r.trace.usage;
    rep.answer_cost += r.trace.read_cost;
    rep.judge_usage += r.judge_usage;
    rep.judge_cost += r.judge_cost;
    for (const auto& v : r.verdicts) rep.judge_parse_failures += v.parse_failed;
  }
  rep.accuracy_bp = accuracy_bp(labels);
  return rep;
}

inline nlohmann::json to_json(const QuestionResult& r) {
  nlohmann::json labels = nlohmann::json::array();
  bool parse_failure = false;
  for (const auto& v : r.verdicts) {
    labels.push_back(to_string(v.label));
    parse_failure = parse_failure || v.parse_failed;
  }
  nlohmann::json j = {
      {"id", r.question_id},
      {"user_id", r.user_id},
      {"mode", to_string(r.trace.mode)},
      {"answer", r.trace.answer_text},
      {"labels", labels},
      {"consensus", to_string(r.consensus)},
      {"usage", memory_engine::usage_to_json(r.trace.usage)},
      {"attempts", r.trace.attempts},
      {"cost_micro_usd", r.trace.read_cost.micros()},
      {"cost_usd", r.trace.read_cost.to_string(6)},
      {"judge_usage", memory_engine::usage_to_json(r.judge_usage)},
      {"judge_cost_usd", r.judge_cost.to_string(6)},
  };
  if (parse_failure) j["judge_parse_failure"] = true;
  if (r.trace.mode == Mode::memory) {
    j["retrieved_token_count"] = r.trace.retrieved_token_count.value();
    j["retrieved"] = r.trace.retrieved.size();
    if (r.trace.empty_context) j["empty_context"] = true;
  }
  return j;
}

inline std::string results_jsonl(const EvalReport& rep) {
  std::string out;
  for (const auto& r : rep.results) out += to_json(r).dump() + "\n";
  return out;
}

inline nlohmann::json summary_json(const EvalReport& rep, const llm_gateway::LedgerTotals& ledger,
                                   std::optional<Money> write_cost = std::nullopt) {
  Money total = rep.answer_cost + rep.judge_cost;
  nlohmann::json j = {
      {"mode", to_string(rep.mode)},
      {"questions", rep.results.size()},
      {"accuracy_pct", format_accuracy(rep.accuracy_bp)},
      {"answer_cost_usd", rep.answer_cost.to_string(6)},
      {"judge_cost_usd", rep.judge_cost.to_string(6)},
      {"answer_usage", memory_engine::usage_to_json(rep.answer_usage)},
      {"judge_usage", memory_engine::usage_to_json(rep.judge_usage)},
      {"judge_parse_failures", rep.judge_parse_failures},
  };
  if (write_cost) {
    j["write_cost_usd"] = write_cost->to_string(6);
    total += *write_cost;
  }
  j["total_cost_usd"] = total.to_string(6);
  j["ledger"] = {{"exchanges", ledger.exchanges},
                 {"failed_exchanges", ledger.failed_exchanges},
                 {"tokens", memory_engine::usage_to_json(ledger.usage)},
                 {"cost_usd", ledger.cost.to_string(6)}};
  return j;
}

// ---- dry run ---------------------------------------------------------------

struct DryRunUser {
  std::string user_id;
  std::int64_t context_tokens = 0;
  std::int64_t questions = 0;
  Money projected_memory;
  Money projected_long_context;
};

struct DryRunReport {
  Mode mode = Mode::memory;
  std::vector<DryRunUser> users;
  std::vector<AnswerTrace> traces;  // prompts built, no completion calls
  Money projected_memory;
  Money projected_long_context;
};

/// Builds every answer prompt (retrieval included in memory mode) but makes
/// no completion calls; costs come from the cost model with each user's
/// conversation length as L and their question count as N.
inline DryRunReport dry_run_eval(const Dataset& ds, const EvalBackends& b, const EvalOptions& opts,
                                 const cost_model::CostParams& base,
                                 std::string_view tokenizer = kApproxTokenizer) {
  DryRunReport rep;
  rep.mode = opts.mode;
  std::map<std::string, std::int64_t> per_user;
  for (const auto& q : ds.questions) ++per_user[q.user_id];
  for (const auto& [user, n] : per_user) {
    const Conversation* conv = ds.find_conversation(user);
    if (!conv) throw InvalidInput("no conversation for user '" + user + "'");
    DryRunUser u;
    u.user_id = user;
    u.context_tokens = conversation_tokens(*conv, tokenizer);
    u.questions = n;
    const auto p = base.with_context(u.context_tokens);
    u.projected_memory = cost_model::mem_cost(p, n);
    u.projected_long_context = cost_model::lc_cost(p, n);
    rep.projected_memory += u.projected_memory;
    rep.projected_long_context += u.projected_long_context;
    rep.users.push_back(std::move(u));
  }
  rep.traces.resize(ds.questions.size());
  parallel_for(ds.questions.size(), opts.workers, [&](std::size_t i) {
    const auto& q = ds.questions[i];
    if (opts.mode == Mode::memory) {
      if (!b.store || !b.embedder) throw ConfigError("memory mode needs a store and an embedder");
      rep.traces[i] = retrieve_for_question(q, q.user_id, *b.store, *b.embedder, {opts.top_k});
    } else {
      const Conversation* conv = ds.find_conversation(q.user_id);
      AnswerTrace t;
      t.question_id = q.id;
      t.mode = Mode::long_context;
      t.prompt = long_context_prompt(*conv, q.text);
      rep.traces[i] = std::move(t);
    }
  });
  return rep;
}

inline std::string dry_run_jsonl(const DryRunReport& rep, std::string_view tokenizer = kApproxTokenizer) {
  std::string out;
  for (const auto& t : rep.traces) {
    nlohmann::json j = {{"id", t.question_id},
                        {"mode", to_string(t.mode)},
                        {"dry_run", true},
                        {"prompt_tokens", count_tokens(t.prompt, tokenizer).value()}};
    if (t.mode == Mode::memory) {
      j["retrieved_token_count"] = t.retrieved_token_count.value();
      j["retrieved"] = t.retrieved.size();
    }
    out += j.dump() + "\n";
  }
  return out;
}

inline nlohmann::json dry_run_summary(const DryRunReport& rep) {
  nlohmann::json users = nlohmann::json::array();
  for (const auto& u : rep.users) {
    users.push_back({{"user_id", u.user_id},
                     {"context_tokens", u.context_tokens},
                     {"questions", u.questions},
                     {"projected_memory_usd", u.projected_memory.to_string(6)},
                     {"projected_long_context_usd", u.projected_long_context.to_string(6)}});
  }
  return {{"mode", to_string(rep.mode)},
          {"dry_run", true},
          {"questions", rep.traces.size()},
          {"users", users},
          {"projected_memory_usd", rep.projected_memory.to_string(6)},
          {"projected_long_context_usd", rep.projected_long_context.to_string(6)}};
}

}  // namespace memcost::eval_harness
