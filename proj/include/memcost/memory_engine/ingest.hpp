#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "memcost/core/dialogue.hpp"
#include "memcost/core/hash.hpp"
#include "memcost/core/parallel.hpp"
#include "memcost/core/tokenizer.hpp"
#include "memcost/core/transcript.hpp"
#include "memcost/llm_gateway/client.hpp"
#include "memcost/memory_engine/extract.hpp"
#include "memcost/memory_engine/memory_store.hpp"
#include "memcost/memory_engine/segment.hpp"

namespace memcost::memory_engine {

struct IngestOptions {
  std::size_t batch_size = kDefaultBatchSize;
  std::size_t max_chars = kDefaultMaxChars;
  std::size_t workers = 4;
  std::string instructions = std::string(prompts::kFactExtraction);
  std::string tokenizer = std::string(kApproxTokenizer);
};

/// Idempotence key: user id plus the canonical transcript of the content.
inline std::string conversation_hash(const Conversation& conv) {
  return sha256_hex(conv.user_id + "\n" + render_conversation(conv));
}

namespace detail {

struct SegmentOutcome {
  bool failed = false;
  std::vector<std::string> facts;
  std::vector<std::vector<float>> vectors;
  UsageRecord extraction_usage;
  std::int64_t embedding_tokens = 0;
  Money cost;  // per-call charges, as the ledger records them
  std::optional<std::string> warning;
};

}  // namespace detail

/// Write phase for one conversation: segment, extract facts per segment
/// (concurrently), embed them, and insert the records in seq_no order.
///
/// Re-ingesting identical content returns the stored receipt without any
/// backend call. If an earlier run left a partial receipt, only its failed
/// segments are retried and the receipts are merged.
inline WriteReceipt ingest_conversation(const Conversation& conv, const llm_gateway::ChatClient& extractor,
                                        const llm_gateway::EmbeddingClient& embedder, MemoryStore& store,
                                        const IngestOptions& opts = {}) {
  validate(conv);
  if (embedder.dimension() != store.dimension()) {
    throw ConfigError("embedder dimension " + std::to_string(embedder.dimension()) +
                      " does not match store dimension " + std::to_string(store.dimension()));
  }
  const std::string hash = conversation_hash(conv);
  WriteReceipt receipt;
  receipt.user_id = conv.user_id;
  receipt.content_hash = hash;

  std::optional<std::set<std::int64_t>> retry_only;
  if (auto prior = store.receipt(conv.user_id, hash)) {
    if (!prior->partial) return *prior;
    receipt = *prior;
    retry_only = std::set<std::int64_t>(prior->failed_seq_nos.begin(), prior->failed_seq_nos.end());
    receipt.partial = false;
    receipt.failed_seq_nos.clear();
  }

  const auto segments = segment_conversation(conv, opts.batch_size, opts.max_chars);
  std::vector<const Segment*> work;
  for (const auto& s : segments) {
    if (!retry_only || retry_only->count(s.seq_no)) work.push_back(&s);
  }

  std::vector<detail::SegmentOutcome> outcomes(work.size());
  parallel_for(work.size(), opts.workers, [&](std::size_t i) {
    auto& out = outcomes[i];
    try {
      auto ex = extract_facts(*work[i], extractor, opts.instructions);
      out.extraction_usage = ex.usage;
      out.cost = usage_cost(ex.usage, extractor.rates());
      out.warning = ex.warning;
      out.facts = std::move(ex.facts);
    } catch (const ExtractionError& e) {
      out.failed = true;
      out.warning = e.what();
      return;
    }
    if (out.facts.empty()) return;
    try {
      auto emb = embedder.embed(out.facts);
      out.embedding_tokens = emb.usage.prompt_tokens.value();
      out.cost += usage_cost(emb.usage, embedder.rates());
      out.vectors = std::move(emb.vectors);
    } catch (const llm_gateway::BackendError& e) {
      out.failed = true;
      out.warning = "segment " + std::to_string(work[i]->seq_no) + ": embedding failed: " + e.what();
    }
  });

  // Serialized, deterministic insertion in seq_no order.
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto& out = outcomes[i];
    const Segment& seg = *work[i];
    receipt.extraction_usage += out.extraction_usage;
    receipt.embedding_tokens += TokenCount(out.embedding_tokens);
    receipt.write_cost += out.cost;
    if (out.warning) receipt.warnings.push_back(*out.warning);
    if (out.failed) {
      receipt.partial = true;
      receipt.failed_seq_nos.push_back(seg.seq_no);
      continue;
    }
    for (std::size_t f = 0; f < out.facts.size(); ++f) {
      if (out.vectors[f].size() != store.dimension()) {
        throw ConfigError("embedder returned a " + std::to_string(out.vectors[f].size()) +
                          "-d vector; store expects " + std::to_string(store.dimension()));
      }
      MemoryRecord rec;
      rec.id = conv.user_id + ":" + hash.substr(0, 12) + ":" + std::to_string(seg.seq_no) + ":" + std::to_string(f);
      rec.user_id = conv.user_id;
      rec.text = out.facts[f];
      rec.source_segment = seg.seq_no;
      rec.created_at = seg.messages.back().timestamp;
      rec.token_len = count_tokens(rec.text, opts.tokenizer);
      store.add(std::move(rec), out.vectors[f]);
      ++receipt.records_created;
    }
  }

  store.put_receipt(receipt);
  return receipt;
}

}  // namespace memcost::memory_engine
