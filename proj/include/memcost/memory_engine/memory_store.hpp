#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "memcost/core/dataset.hpp"
#include "memcost/core/error.hpp"
#include "memcost/core/hash.hpp"
#include "memcost/core/money.hpp"
#include "memcost/core/pricing.hpp"
#include "memcost/core/time.hpp"
#include "memcost/core/tokenizer.hpp"
#include "memcost/vector_index/hnsw_index.hpp"

namespace memcost::memory_engine {

struct MemoryRecord {
  std::string id;
  std::string user_id;
  std::string text;
  std::int64_t source_segment = 0;
  Timestamp created_at{};
  TokenCount token_len;

  bool operator==(const MemoryRecord&) const = default;
};

struct WriteReceipt {
  std::string user_id;
  std::string content_hash;
  std::int64_t records_created = 0;
  UsageRecord extraction_usage;
  TokenCount embedding_tokens;
  Money write_cost;
  bool partial = false;
  std::vector<std::int64_t> failed_seq_nos;
  std::vector<std::string> warnings;

  bool operator==(const WriteReceipt&) const = default;
};

inline nlohmann::json usage_to_json(const UsageRecord& u) {
  return {{"prompt_tokens", u.prompt_tokens.value()},
          {"cached_prompt_tokens", u.cached_prompt_tokens.value()},
          {"completion_tokens", u.completion_tokens.value()}};
}

inline UsageRecord usage_from_json_object(const nlohmann::json& j) {
  return UsageRecord(j.value("prompt_tokens", std::int64_t{0}), j.value("cached_prompt_tokens", std::int64_t{0}),
                     j.value("completion_tokens", std::int64_t{0}));
}

inline nlohmann::json to_json(const WriteReceipt& r) {
  return {{"user_id", r.user_id},
          {"content_hash", r.content_hash},
          {"records_created", r.records_created},
          {"extraction_usage", usage_to_json(r.extraction_usage)},
          {"embedding_tokens", r.embedding_tokens.value()},
          {"write_cost_micro_usd", r.write_cost.micros()},
          {"write_cost_usd", r.write_cost.to_string(6)},
          {"partial", r.partial},
          {"failed_seq_nos", r.failed_seq_nos},
          {"warnings", r.warnings}};
}

inline WriteReceipt receipt_from_json(const nlohmann::json& j) {
  WriteReceipt r;
  r.user_id = j.at("user_id").get<std::string>();
  r.content_hash = j.at("content_hash").get<std::string>();
  r.records_created = j.at("records_created").get<std::int64_t>();
  r.extraction_usage = usage_from_json_object(j.at("extraction_usage"));
  r.embedding_tokens = TokenCount(j.at("embedding_tokens").get<std::int64_t>());
  r.write_cost = Money::from_micros(j.at("write_cost_micro_usd").get<std::int64_t>());
  r.partial = j.value("partial", false);
  r.failed_seq_nos = j.value("failed_seq_nos", std::vector<std::int64_t>{});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

inline nlohmann::json to_json(const MemoryRecord& r) {
  return {{"id", r.id},
          {"user_id", r.user_id},
          {"text", r.text},
          {"source_segment", r.source_segment},
          {"created_at", format_timestamp(r.created_at)},
          {"token_len", r.token_len.value()}};
}

inline MemoryRecord record_from_json(const nlohmann::json& j) {
  return {j.at("id").get<std::string>(),
          j.at("user_id").get<std::string>(),
          j.at("text").get<std::string>(),
          j.at("source_segment").get<std::int64_t>(),
          parse_timestamp(j.at("created_at").get<std::string>()),
          TokenCount(j.at("token_len").get<std::int64_t>())};
}

/// Per-user HNSW indexes plus the records and write receipts behind them.
/// Each user gets an index of their own, so retrieval never crosses users.
class MemoryStore {
 public:
  explicit MemoryStore(std::size_t dimension = vector_index::kDefaultDimension, vector_index::HnswParams params = {})
      : dim_(dimension), params_(params) {
    vector_index::validate(params_);
  }

  std::size_t dimension() const { return dim_; }
  const vector_index::HnswParams& params() const { return params_; }

  void add(MemoryRecord record, std::span<const float> vec) {
    if (vec.size() != dim_) {
      throw ConfigError("embedding dimension " + std::to_string(vec.size()) + " does not match store dimension " +
                        std::to_string(dim_));
    }
    if (record.text.empty()) throw InvalidInput("memory record text must be non-empty");
    std::lock_guard lock(mutex_);
    if (records_.count(record.id)) throw ConflictError("memory record '" + record.id + "' already stored");
    auto& u = users_[record.user_id];
    if (!u) u = std::make_unique<UserMemory>(dim_, params_);
    u->index.insert(record.id, vec);
    u->record_ids.push_back(record.id);
    records_.emplace(record.id, std::move(record));
  }

  const vector_index::HnswIndex* index_for(const std::string& user_id) const {
    std::lock_guard lock(mutex_);
    auto it = users_.find(user_id);
    return it == users_.end() ? nullptr : &it->second->index;
  }

  const MemoryRecord& record(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end()) throw InvalidInput("unknown memory record '" + id + "'");
    return it->second;
  }

  std::vector<MemoryRecord> records_for(const std::string& user_id) const {
    std::lock_guard lock(mutex_);
    std::vector<MemoryRecord> out;
    auto it = users_.find(user_id);
    if (it == users_.end()) return out;
    for (const auto& id : it->second->record_ids) out.push_back(records_.at(id));
    return out;
  }

  std::size_t record_count() const {
    std::lock_guard lock(mutex_);
    return records_.size();
  }

  std::size_t record_count(const std::string& user_id) const {
    std::lock_guard lock(mutex_);
    auto it = users_.find(user_id);
    return it == users_.end() ? 0 : it->second->record_ids.size();
  }

  std::vector<std::string> user_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : users_) out.push_back(id);
    return out;
  }

  std::optional<WriteReceipt> receipt(const std::string& user_id, const std::string& content_hash) const {
    std::lock_guard lock(mutex_);
    auto it = receipts_.find({user_id, content_hash});
    if (it == receipts_.end()) return std::nullopt;
    return it->second;
  }

  void put_receipt(const WriteReceipt& r) {
    std::lock_guard lock(mutex_);
    receipts_[{r.user_id, r.content_hash}] = r;
  }

  // On-disk layout: <dir>/store.json, and per user "<key>.hnsw" (+ manifest)
  // and "<key>.records.jsonl", where key is a hash of the user id.

  void save(const std::filesystem::path& dir) const {
    std::lock_guard lock(mutex_);
    std::filesystem::create_directories(dir);
    nlohmann::json users = nlohmann::json::array();
    for (const auto& [user_id, mem] : users_) {
      const std::string key = "user-" + sha256_hex(user_id).substr(0, 16);
      mem->index.save(dir / (key + ".hnsw"));
      std::string lines;
      for (const auto& id : mem->record_ids) lines += to_json(records_.at(id)).dump() + "\n";
      write_text_file(dir / (key + ".records.jsonl"), lines);
      users.push_back({{"user_id", user_id}, {"key", key}, {"records", mem->record_ids.size()}});
    }
    nlohmann::json receipts = nlohmann::json::array();
    for (const auto& [_, r] : receipts_) receipts.push_back(to_json(r));
    const nlohmann::json manifest = {
        {"format", "memcost-store"},
        {"version", 1},
        {"dimension", dim_},
        {"hnsw", {{"m", params_.m}, {"ef_construction", params_.ef_construction},
                  {"ef_search", params_.ef_search}, {"rng_seed", params_.rng_seed}}},
        {"users", users},
        {"receipts", receipts},
    };
    write_text_file(dir / "store.json", manifest.dump(2) + "\n");
  }

  static bool exists(const std::filesystem::path& dir) { return std::filesystem::exists(dir / "store.json"); }

  static MemoryStore load(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
      manifest = nlohmann::json::parse(read_text_file(dir / "store.json"));
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError("store manifest '" + (dir / "store.json").string() + "' is not valid JSON");
    }
    try {
      if (manifest.value("format", std::string()) != "memcost-store" || manifest.value("version", 0) != 1) {
        throw IoError("'" + dir.string() + "' is not a version-1 memory store");
      }
      vector_index::HnswParams p;
      const auto& h = manifest.at("hnsw");
      p.m = h.at("m").get<std::uint32_t>();
      p.ef_construction = h.at("ef_construction").get<std::uint32_t>();
      p.ef_search = h.at("ef_search").get<std::uint32_t>();
      p.rng_seed = h.at("rng_seed").get<std::uint64_t>();
      MemoryStore store(manifest.at("dimension").get<std::size_t>(), p);
      for (const auto& u : manifest.at("users")) {
        const std::string user_id = u.at("user_id").get<std::string>();
        const std::string key = u.at("key").get<std::string>();
        auto mem = std::make_unique<UserMemory>(vector_index::HnswIndex::load(dir / (key + ".hnsw")));
        const std::string lines = read_text_file(dir / (key + ".records.jsonl"));
        std::size_t start = 0;
        while (start < lines.size()) {
          auto nl = lines.find('\n', start);
          if (nl == std::string::npos) nl = lines.size();
          if (nl > start) {
            MemoryRecord r = record_from_json(nlohmann::json::parse(lines.substr(start, nl - start)));
            if (!mem->index.contains(r.id)) throw IoError("record '" + r.id + "' missing from its index");
            mem->record_ids.push_back(r.id);
            store.records_.emplace(r.id, std::move(r));
          }
          start = nl + 1;
        }
        if (mem->record_ids.size() != mem->index.size()) {
          throw IoError("record count does not match index size for user '" + user_id + "'");
        }
        store.users_.emplace(user_id, std::move(mem));
      }
      for (const auto& r : manifest.at("receipts")) {
        auto receipt = receipt_from_json(r);
        store.receipts_[{receipt.user_id, receipt.content_hash}] = std::move(receipt);
      }
      return store;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("corrupt memory store '" + dir.string() + "': " + e.what());
    }
  }

  MemoryStore(MemoryStore&& o) noexcept {
    std::lock_guard lock(o.mutex_);
    dim_ = o.dim_;
    params_ = o.params_;
    users_ = std::move(o.users_);
    records_ = std::move(o.records_);
    receipts_ = std::move(o.receipts_);
  }
  MemoryStore& operator=(MemoryStore&&) = delete;
  MemoryStore(const MemoryStore&) = delete;
  MemoryStore& operator=(const MemoryStore&) = delete;

 private:
  struct UserMemory {
    UserMemory(std::size_t dim, const vector_index::HnswParams& p) : index(dim, p) {}
    explicit UserMemory(vector_index::HnswIndex&& idx) : index(std::move(idx)) {}
    vector_index::HnswIndex index;
    std::vector<std::string> record_ids;
  };

  std::size_t dim_;
  vector_index::HnswParams params_;
  mutable std::mutex mutex_;
  std::map<std::string, std::unique_ptr<UserMemory>> users_;
  std::map<std::string, MemoryRecord> records_;
  std::map<std::pair<std::string, std::string>, WriteReceipt> receipts_;
};

}  // namespace memcost::memory_engine
