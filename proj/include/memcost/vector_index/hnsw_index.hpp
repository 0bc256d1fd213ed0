#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <queue>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "memcost/core/error.hpp"
#include "memcost/core/hash.hpp"
#include "memcost/vector_index/similarity.hpp"

namespace memcost::vector_index {

enum class Metric : std::uint32_t { cosine = 0 };

struct HnswParams {
  std::uint32_t m = 16;
  std::uint32_t ef_construction = 64;
  std::uint32_t ef_search = 64;
  Metric metric = Metric::cosine;
  std::uint64_t rng_seed = 42;

  bool operator==(const HnswParams&) const = default;
};

inline void validate(const HnswParams& p) {
  if (p.m < 2) throw InvalidInput("hnsw: m must be >= 2");
  if (p.ef_construction < p.m) throw InvalidInput("hnsw: ef_construction must be >= m");
  if (p.ef_search < 1) throw InvalidInput("hnsw: ef_search must be >= 1");
}

struct SearchHit {
  std::string record_id;
  double similarity = 0.0;

  bool operator==(const SearchHit&) const = default;
};

/// Similarity descending, then record_id ascending.
inline bool hit_order(const SearchHit& a, const SearchHit& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.record_id < b.record_id;
}

inline constexpr char kIndexMagic[8] = {'M', 'C', 'H', 'N', 'S', 'W', 'I', 'X'};
inline constexpr std::uint32_t kIndexFormatVersion = 1;

/// Shared mutex whose pending writers block new readers, so a steady
/// search load cannot starve inserts.
class WriterPreferringMutex {
 public:
  void lock() {
    std::lock_guard gate(gate_);
    rw_.lock();
  }
  void unlock() { rw_.unlock(); }
  void lock_shared() {
    std::lock_guard gate(gate_);
    rw_.lock_shared();
  }
  void unlock_shared() { rw_.unlock_shared(); }

 private:
  std::mutex gate_;
  std::shared_mutex rw_;
};

/// Hierarchical navigable small-world graph over cosine similarity.
///
/// Vectors are normalized on insert, so similarity is a plain dot product.
/// Level assignment draws from a splitmix64 stream seeded by
/// HnswParams::rng_seed; a fixed seed and insertion order give an identical
/// graph and an identical persisted file. Readers may search concurrently;
/// insert takes the exclusive lock.
class HnswIndex {
 public:
  explicit HnswIndex(std::size_t dimension = kDefaultDimension, HnswParams params = {})
      : dim_(dimension), params_(params), rng_state_(params.rng_seed) {
    if (dimension == 0) throw InvalidInput("hnsw: dimension must be positive");
    validate(params_);
    level_mult_ = 1.0 / std::log(static_cast<double>(params_.m));
  }

  HnswIndex(HnswIndex&& o) noexcept { move_from(std::move(o)); }
  HnswIndex& operator=(HnswIndex&& o) noexcept {
    if (this != &o) move_from(std::move(o));
    return *this;
  }
  HnswIndex(const HnswIndex&) = delete;
  HnswIndex& operator=(const HnswIndex&) = delete;

  std::size_t dimension() const { return dim_; }
  const HnswParams& params() const { return params_; }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return nodes_.size();
  }

  bool contains(const std::string& id) const {
    std::shared_lock lock(mutex_);
    return by_id_.count(id) != 0;
  }

  void insert(const std::string& record_id, std::span<const float> vec) {
    validate_vector(vec, dim_);
    const Vector unit = normalized(vec);
    std::unique_lock lock(mutex_);
    if (by_id_.count(record_id)) throw ConflictError("record '" + record_id + "' already indexed");

    const auto node = static_cast<std::uint32_t>(nodes_.size());
    const int level = draw_level();
    data_.insert(data_.end(), unit.begin(), unit.end());
    nodes_.push_back(Node{record_id, level, std::vector<std::vector<std::uint32_t>>(level + 1)});
    by_id_.emplace(record_id, node);

    if (node == 0) {
      entry_ = 0;
      max_level_ = level;
      return;
    }

    const float* q = vec_at(node);
    std::uint32_t ep = entry_;
    for (int lc = max_level_; lc > level; --lc) ep = greedy_closest(q, ep, lc);

    std::vector<Candidate> entry_points{{similarity(q, ep), ep}};
    for (int lc = std::min(level, max_level_); lc >= 0; --lc) {
      auto found = search_layer(q, entry_points, params_.ef_construction, lc);
      auto neighbours = select_neighbours(found, params_.m);
      auto& own = nodes_[node].links[static_cast<std::size_t>(lc)];
      for (const auto& c : neighbours) own.push_back(c.node);
      const std::size_t cap = max_links(lc);
      for (const auto& c : neighbours) {
        auto& theirs = nodes_[c.node].links[static_cast<std::size_t>(lc)];
        theirs.push_back(node);
        if (theirs.size() > cap) shrink_links(c.node, lc, cap);
      }
      entry_points = std::move(found);
    }
    if (level > max_level_) {
      max_level_ = level;
      entry_ = node;
    }
  }

  /// Approximate top-k. ef_search = 0 uses params().ef_search; the beam is
  /// never narrower than k.
  std::vector<SearchHit> search(std::span<const float> query, std::size_t k = 20, std::size_t ef_search = 0) const {
    if (k < 1) throw InvalidInput("search: k must be >= 1");
    validate_vector(query, dim_);
    const Vector unit = normalized(query);
    std::shared_lock lock(mutex_);
    if (nodes_.empty()) return {};
    const std::size_t ef = std::max<std::size_t>(ef_search == 0 ? params_.ef_search : ef_search, k);
    std::uint32_t ep = entry_;
    for (int lc = max_level_; lc > 0; --lc) ep = greedy_closest(unit.data(), ep, lc);
    auto found = search_layer(unit.data(), {{similarity(unit.data(), ep), ep}}, ef, 0);
    return to_hits(found, k);
  }

  /// Linear scan; the reference result for search().
  std::vector<SearchHit> exact_search(std::span<const float> query, std::size_t k) const {
    if (k < 1) throw InvalidInput("exact_search: k must be >= 1");
    validate_vector(query, dim_);
    const Vector unit = normalized(query);
    std::shared_lock lock(mutex_);
    std::vector<Candidate> all;
    all.reserve(nodes_.size());
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) all.push_back({similarity(unit.data(), i), i});
    return to_hits(all, k);
  }

  std::vector<std::string> ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    out.reserve(nodes_.size());
    for (const auto& n : nodes_) out.push_back(n.id);
    return out;
  }

  // Persistence: a little-endian binary file plus "<file>.json" manifest.

  void save(const std::filesystem::path& path) const {
    std::shared_lock lock(mutex_);
    std::string buf;
    buf.append(kIndexMagic, sizeof kIndexMagic);
    put_u32(buf, kIndexFormatVersion);
    put_u32(buf, static_cast<std::uint32_t>(dim_));
    put_u32(buf, params_.m);
    put_u32(buf, params_.ef_construction);
    put_u32(buf, params_.ef_search);
    put_u32(buf, static_cast<std::uint32_t>(params_.metric));
    put_u64(buf, params_.rng_seed);
    put_u64(buf, rng_state_);
    put_u64(buf, nodes_.size());
    put_u32(buf, static_cast<std::uint32_t>(max_level_ + 1));
    put_u32(buf, nodes_.empty() ? std::numeric_limits<std::uint32_t>::max() : entry_);
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      put_u32(buf, static_cast<std::uint32_t>(n.id.size()));
      buf.append(n.id);
      put_u32(buf, static_cast<std::uint32_t>(n.level));
      const float* v = vec_at(i);
      for (std::size_t d = 0; d < dim_; ++d) {
        std::uint32_t bits;
        std::memcpy(&bits, &v[d], sizeof bits);
        put_u32(buf, bits);
      }
      for (const auto& layer : n.links) {
        put_u32(buf, static_cast<std::uint32_t>(layer.size()));
        for (auto l : layer) put_u32(buf, l);
      }
    }
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write index '" + path.string() + "'");
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      if (!out) throw IoError("short write to '" + path.string() + "'");
    }
    const nlohmann::json manifest = {
        {"format", "memcost-hnsw"},
        {"version", kIndexFormatVersion},
        {"dimension", dim_},
        {"metric", "cosine"},
        {"params", {{"m", params_.m}, {"ef_construction", params_.ef_construction},
                    {"ef_search", params_.ef_search}, {"rng_seed", params_.rng_seed}}},
        {"count", nodes_.size()},
        {"sha256", sha256_hex(buf)},
    };
    std::ofstream mout(manifest_path(path), std::ios::binary | std::ios::trunc);
    if (!mout) throw IoError("cannot write manifest for '" + path.string() + "'");
    mout << manifest.dump(2) << '\n';
  }

  static HnswIndex load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open index '" + path.string() + "'");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r{buf, 0, path.string()};
    if (buf.size() < sizeof kIndexMagic || std::memcmp(buf.data(), kIndexMagic, sizeof kIndexMagic) != 0) {
      throw IoError("'" + path.string() + "' is not an index file");
    }
    r.pos = sizeof kIndexMagic;
    if (const auto version = r.u32(); version != kIndexFormatVersion) {
      throw IoError("unsupported index format version " + std::to_string(version));
    }
    const std::size_t dim = r.u32();
    HnswParams p;
    p.m = r.u32();
    p.ef_construction = r.u32();
    p.ef_search = r.u32();
    if (r.u32() != static_cast<std::uint32_t>(Metric::cosine)) throw IoError("unknown metric in index file");
    p.rng_seed = r.u64();
    HnswIndex idx(dim, p);
    idx.rng_state_ = r.u64();
    const std::uint64_t count = r.u64();
    idx.max_level_ = static_cast<int>(r.u32()) - 1;
    idx.entry_ = r.u32();
    idx.nodes_.reserve(count);
    idx.data_.reserve(count * dim);
    for (std::uint64_t i = 0; i < count; ++i) {
      Node n;
      n.id = r.bytes(r.u32());
      n.level = static_cast<int>(r.u32());
      if (n.level < 0 || n.level > idx.max_level_) throw IoError("corrupt node level in index file");
      for (std::size_t d = 0; d < dim; ++d) {
        const std::uint32_t bits = r.u32();
        float f;
        std::memcpy(&f, &bits, sizeof f);
        idx.data_.push_back(f);
      }
      n.links.resize(static_cast<std::size_t>(n.level) + 1);
      for (auto& layer : n.links) {
        layer.resize(r.u32());
        for (auto& l : layer) {
          l = r.u32();
          if (l >= count) throw IoError("corrupt link in index file");
        }
      }
      if (!idx.by_id_.emplace(n.id, static_cast<std::uint32_t>(i)).second) {
        throw IoError("duplicate record id in index file");
      }
      idx.nodes_.push_back(std::move(n));
    }
    if (r.pos != buf.size()) throw IoError("trailing bytes in index file");
    if (count > 0 && idx.entry_ >= count) throw IoError("corrupt entry point in index file");

    const auto mpath = manifest_path(path);
    if (std::filesystem::exists(mpath)) {
      std::ifstream min(mpath);
      const auto manifest = nlohmann::json::parse(min, nullptr, false);
      if (manifest.is_discarded() || manifest.value("sha256", std::string()) != sha256_hex(buf)) {
        throw IoError("index manifest does not match '" + path.string() + "'");
      }
    }
    return idx;
  }

  static std::filesystem::path manifest_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".json");
  }

 private:
  struct Node {
    std::string id;
    int level = 0;
    std::vector<std::vector<std::uint32_t>> links;
  };

  struct Candidate {
    double sim;
    std::uint32_t node;
  };
  // "a is closer than b"; node index breaks ties so heap order is total.
  static bool closer(const Candidate& a, const Candidate& b) {
    return a.sim != b.sim ? a.sim > b.sim : a.node < b.node;
  }
  struct FurthestOnTop {
    bool operator()(const Candidate& a, const Candidate& b) const { return closer(a, b); }
  };
  struct ClosestOnTop {
    bool operator()(const Candidate& a, const Candidate& b) const { return closer(b, a); }
  };

  struct Reader {
    const std::string& buf;
    std::size_t pos;
    std::string name;
    void need(std::size_t n) const {
      if (pos + n > buf.size()) throw IoError("truncated index file '" + name + "'");
    }
    std::uint32_t u32() {
      need(4);
      std::uint32_t v = 0;
      for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)]);
      pos += 4;
      return v;
    }
    std::uint64_t u64() {
      const std::uint64_t lo = u32();
      const std::uint64_t hi = u32();
      return lo | (hi << 32);
    }
    std::string bytes(std::size_t n) {
      need(n);
      std::string s = buf.substr(pos, n);
      pos += n;
      return s;
    }
  };

  static void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  static void put_u64(std::string& buf, std::uint64_t v) {
    put_u32(buf, static_cast<std::uint32_t>(v & 0xFFFFFFFFu));
    put_u32(buf, static_cast<std::uint32_t>(v >> 32));
  }

  void move_from(HnswIndex&& o) {
    std::unique_lock lock(o.mutex_);
    dim_ = o.dim_;
    params_ = o.params_;
    level_mult_ = o.level_mult_;
    rng_state_ = o.rng_state_;
    data_ = std::move(o.data_);
    nodes_ = std::move(o.nodes_);
    by_id_ = std::move(o.by_id_);
    entry_ = o.entry_;
    max_level_ = o.max_level_;
  }

  std::size_t max_links(int level) const { return level == 0 ? 2 * params_.m : params_.m; }

  const float* vec_at(std::uint32_t node) const { return data_.data() + static_cast<std::size_t>(node) * dim_; }

  double similarity(const float* q, std::uint32_t node) const {
    const float* v = vec_at(node);
    double s = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) s += static_cast<double>(q[d]) * v[d];
    return s;
  }

  int draw_level() {
    const std::uint64_t bits = splitmix64(rng_state_);
    // Uniform in (0, 1].
    const double u = (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
    return static_cast<int>(std::floor(-std::log(u) * level_mult_));
  }

  std::uint32_t greedy_closest(const float* q, std::uint32_t ep, int level) const {
    double best = similarity(q, ep);
    for (bool improved = true; improved;) {
      improved = false;
      for (auto nb : nodes_[ep].links[static_cast<std::size_t>(level)]) {
        const double s = similarity(q, nb);
        if (s > best || (s == best && nb < ep)) {
          best = s;
          ep = nb;
          improved = true;
        }
      }
    }
    return ep;
  }

  // Beam search on one layer; returns up to ef candidates, closest first.
  std::vector<Candidate> search_layer(const float* q, const std::vector<Candidate>& entry_points, std::size_t ef,
                                      int level) const {
    std::vector<char> visited(nodes_.size(), 0);
    std::priority_queue<Candidate, std::vector<Candidate>, ClosestOnTop> frontier;
    std::priority_queue<Candidate, std::vector<Candidate>, FurthestOnTop> best;
    for (const auto& c : entry_points) {
      if (visited[c.node]) continue;
      visited[c.node] = 1;
      frontier.push(c);
      best.push(c);
      if (best.size() > ef) best.pop();
    }
    while (!frontier.empty()) {
      const Candidate c = frontier.top();
      if (best.size() >= ef && closer(best.top(), c)) break;
      frontier.pop();
      for (auto nb : nodes_[c.node].links[static_cast<std::size_t>(level)]) {
        if (visited[nb]) continue;
        visited[nb] = 1;
        const Candidate cand{similarity(q, nb), nb};
        if (best.size() < ef || closer(cand, best.top())) {
          frontier.push(cand);
          best.push(cand);
          if (best.size() > ef) best.pop();
        }
      }
    }
    std::vector<Candidate> out;
    out.reserve(best.size());
    while (!best.empty()) {
      out.push_back(best.top());
      best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  // Diversity heuristic: keep a candidate only if it is closer to the base
  // than to every neighbour already kept. Input sorted closest first.
  std::vector<Candidate> select_neighbours(const std::vector<Candidate>& sorted, std::size_t m) const {
    std::vector<Candidate> kept;
    for (const auto& c : sorted) {
      if (kept.size() >= m) break;
      bool diverse = true;
      for (const auto& k : kept) {
        if (similarity(vec_at(c.node), k.node) > c.sim) {
          diverse = false;
          break;
        }
      }
      if (diverse) kept.push_back(c);
    }
    return kept;
  }

  void shrink_links(std::uint32_t node, int level, std::size_t cap) {
    auto& links = nodes_[node].links[static_cast<std::size_t>(level)];
    std::vector<Candidate> cands;
    cands.reserve(links.size());
    const float* base = vec_at(node);
    for (auto l : links) cands.push_back({similarity(base, l), l});
    std::sort(cands.begin(), cands.end(), closer);
    links.clear();
    for (const auto& c : select_neighbours(cands, cap)) links.push_back(c.node);
  }

  std::vector<SearchHit> to_hits(const std::vector<Candidate>& cands, std::size_t k) const {
    std::vector<SearchHit> hits;
    hits.reserve(cands.size());
    for (const auto& c : cands) hits.push_back({nodes_[c.node].id, std::clamp(c.sim, -1.0, 1.0)});
    const std::size_t n = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), hit_order);
    hits.resize(n);
    return hits;
  }

  std::size_t dim_ = kDefaultDimension;
  HnswParams params_;
  double level_mult_ = 0.0;
  std::uint64_t rng_state_ = 0;
  std::vector<float> data_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::uint32_t> by_id_;
  std::uint32_t entry_ = 0;
  int max_level_ = -1;
  mutable WriterPreferringMutex mutex_;
};

}  // namespace memcost::vector_index
