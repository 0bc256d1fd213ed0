#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "memcost/core/dataset.hpp"
#include "memcost/core/error.hpp"
#include "memcost/vector_index/hnsw_index.hpp"
#include "memcost/vector_index/similarity.hpp"
#include "support.hpp"

using namespace memcost;
using namespace memcost::vector_index;
using testsupport::random_unit_vector;

namespace {

std::vector<float> basis(std::size_t dim, std::size_t i) {
  std::vector<float> v(dim, 0.0f);
  v[i] = 1.0f;
  return v;
}

HnswIndex build(std::size_t n, std::size_t dim, std::uint64_t data_seed, HnswParams params = {}) {
  std::mt19937_64 rng(data_seed);
  HnswIndex idx(dim, params);
  for (std::size_t i = 0; i < n; ++i) idx.insert("r" + std::to_string(i), random_unit_vector(rng, dim));
  return idx;
}

std::set<std::string> id_set(const std::vector<SearchHit>& hits) {
  std::set<std::string> s;
  for (const auto& h : hits) s.insert(h.record_id);
  return s;
}

}  // namespace

TEST(Cosine, Examples) {
  std::mt19937_64 rng(1);
  auto v = random_unit_vector(rng, 64);
  for (auto& x : v) x *= 3.0f;
  EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-6);
  EXPECT_NEAR(cosine_similarity(basis(8, 0), basis(8, 1)), 0.0, 1e-12);
  auto neg = v;
  for (auto& x : neg) x = -x;
  EXPECT_NEAR(cosine_similarity(v, neg), -1.0, 1e-6);
}

TEST(Cosine, SymmetricAndBounded) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_unit_vector(rng, 32), b = random_unit_vector(rng, 32);
    const double ab = cosine_similarity(a, b);
    EXPECT_DOUBLE_EQ(ab, cosine_similarity(b, a));
    EXPECT_LE(ab, 1.0);
    EXPECT_GE(ab, -1.0);
  }
}

TEST(Cosine, ZeroNormAndMismatch) {
  std::vector<float> z(4, 0.0f);
  EXPECT_THROW(cosine_similarity(z, basis(4, 0)), InvalidInput);
  EXPECT_THROW(cosine_similarity(basis(3, 0), basis(4, 0)), InvalidInput);
}

TEST(Hnsw, ParamsValidated) {
  EXPECT_THROW(HnswIndex(8, HnswParams{1, 64, 64}), InvalidInput);
  EXPECT_THROW(HnswIndex(8, HnswParams{16, 8, 64}), InvalidInput);
  EXPECT_THROW(HnswIndex(8, HnswParams{16, 64, 0}), InvalidInput);
  const HnswParams d;
  EXPECT_EQ(d.m, 16u);
  EXPECT_EQ(d.ef_construction, 64u);
  EXPECT_EQ(d.ef_search, 64u);
}

TEST(Hnsw, InsertThenFind) {
  std::mt19937_64 rng(3);
  HnswIndex idx(32);
  const auto v = random_unit_vector(rng, 32);
  idx.insert("x", v);
  const auto hits = idx.search(v, 1);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].record_id, "x");
  EXPECT_NEAR(hits[0].similarity, 1.0, 1e-6);
}

TEST(Hnsw, DuplicateIdConflicts) {
  HnswIndex idx(4);
  idx.insert("x", basis(4, 0));
  EXPECT_THROW(idx.insert("x", basis(4, 1)), ConflictError);
  EXPECT_EQ(idx.size(), 1u);
}

TEST(Hnsw, InvalidVectorsRejected) {
  HnswIndex idx(4);
  EXPECT_THROW(idx.insert("a", basis(3, 0)), InvalidInput);
  EXPECT_THROW(idx.insert("b", std::vector<float>(4, 0.0f)), InvalidInput);
  std::vector<float> nan(4, 0.0f);
  nan[0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(idx.insert("c", nan), InvalidInput);
  idx.insert("d", basis(4, 0));
  EXPECT_THROW(idx.search(basis(5, 0), 1), InvalidInput);
}

TEST(Hnsw, EmptyIndexReturnsNothing) {
  HnswIndex idx(4);
  EXPECT_TRUE(idx.search(basis(4, 0), 5).empty());
  EXPECT_TRUE(idx.exact_search(basis(4, 0), 5).empty());
}

TEST(Hnsw, SingleElementAlwaysReturned) {
  std::mt19937_64 rng(4);
  HnswIndex idx(16);
  idx.insert("only", random_unit_vector(rng, 16));
  for (int i = 0; i < 20; ++i) {
    const auto hits = idx.search(random_unit_vector(rng, 16), 5);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].record_id, "only");
  }
}

TEST(Hnsw, ExhaustiveBeamEqualsExact) {
  const auto idx = build(50, 64, 5);
  std::mt19937_64 rng(6);
  for (int q = 0; q < 50; ++q) {
    const auto query = random_unit_vector(rng, 64);
    EXPECT_EQ(id_set(idx.search(query, 10, 50)), id_set(idx.exact_search(query, 10)));
  }
}

TEST(Hnsw, ExactSearchIsPrefixOfFullSort) {
  const auto idx = build(120, 24, 7);
  std::mt19937_64 rng(8);
  for (int q = 0; q < 20; ++q) {
    const auto query = random_unit_vector(rng, 24);
    const auto all = idx.exact_search(query, 1000);
    ASSERT_EQ(all.size(), 120u);
    EXPECT_TRUE(std::is_sorted(all.begin(), all.end(), hit_order));
    const auto top = idx.exact_search(query, 7);
    ASSERT_EQ(top.size(), 7u);
    EXPECT_TRUE(std::equal(top.begin(), top.end(), all.begin()));
  }
}

TEST(Hnsw, TwoVectorsQueryEqualToOne) {
  HnswIndex idx(4);
  idx.insert("a", basis(4, 0));
  idx.insert("b", basis(4, 1));
  EXPECT_EQ(idx.exact_search(basis(4, 1), 2).front().record_id, "b");
}

TEST(Hnsw, TiesBrokenByIdAscending) {
  HnswIndex idx(4);
  idx.insert("b", basis(4, 0));
  idx.insert("a", basis(4, 0));
  idx.insert("c", basis(4, 1));
  const auto hits = idx.search(basis(4, 0), 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].record_id, "a");
  EXPECT_EQ(hits[1].record_id, "b");
}

TEST(Hnsw, ResultsSortedAndBoundedByK) {
  const auto idx = build(300, 32, 9);
  std::mt19937_64 rng(10);
  for (int q = 0; q < 30; ++q) {
    const auto hits = idx.search(random_unit_vector(rng, 32), 20);
    EXPECT_EQ(hits.size(), 20u);
    EXPECT_TRUE(std::is_sorted(hits.begin(), hits.end(), hit_order));
  }
}

TEST(Hnsw, RecallOnLowDimensionalData) {
  const auto idx = build(1000, 16, 11);
  std::mt19937_64 rng(12);
  double recall = 0;
  for (int q = 0; q < 100; ++q) {
    const auto query = random_unit_vector(rng, 16);
    const auto got = id_set(idx.search(query, 10));
    std::size_t hit = 0;
    for (const auto& h : idx.exact_search(query, 10)) hit += got.count(h.record_id);
    recall += hit / 10.0;
  }
  EXPECT_GE(recall / 100.0, 0.95);
}

TEST(Hnsw, DeterministicForSeedAndOrder) {
  const auto a = build(300, 32, 13);
  const auto b = build(300, 32, 13);
  std::mt19937_64 rng(14);
  for (int q = 0; q < 20; ++q) {
    const auto query = random_unit_vector(rng, 32);
    EXPECT_EQ(a.search(query, 10), b.search(query, 10));
  }
}

TEST(Hnsw, PersistenceRoundTrip) {
  testsupport::TempDir dir;
  const auto idx = build(400, 48, 15);
  idx.save(dir / "idx.hnsw");
  EXPECT_TRUE(std::filesystem::exists(HnswIndex::manifest_path(dir / "idx.hnsw")));
  const auto loaded = HnswIndex::load(dir / "idx.hnsw");
  EXPECT_EQ(loaded.size(), idx.size());
  EXPECT_EQ(loaded.dimension(), idx.dimension());
  std::mt19937_64 rng(16);
  for (int q = 0; q < 30; ++q) {
    const auto query = random_unit_vector(rng, 48);
    EXPECT_EQ(loaded.search(query, 10), idx.search(query, 10));
  }
}

TEST(Hnsw, ThousandInsertsPersistByteIdentically) {
  testsupport::TempDir dir;
  build(1000, 64, 17).save(dir / "a.hnsw");
  build(1000, 64, 17).save(dir / "b.hnsw");
  const auto a = read_text_file(dir / "a.hnsw");
  const auto b = read_text_file(dir / "b.hnsw");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Hnsw, LoadedIndexKeepsGrowingDeterministically) {
  testsupport::TempDir dir;
  auto first = build(200, 16, 18);
  first.save(dir / "i.hnsw");
  auto resumed = HnswIndex::load(dir / "i.hnsw");
  std::mt19937_64 rng(19);
  for (int i = 0; i < 50; ++i) {
    const auto v = random_unit_vector(rng, 16);
    first.insert("n" + std::to_string(i), v);
    resumed.insert("n" + std::to_string(i), v);
  }
  first.save(dir / "a.hnsw");
  resumed.save(dir / "b.hnsw");
  EXPECT_EQ(read_text_file(dir / "a.hnsw"), read_text_file(dir / "b.hnsw"));
}

TEST(Hnsw, CorruptFilesRejected) {
  testsupport::TempDir dir;
  build(20, 8, 20).save(dir / "i.hnsw");
  auto bytes = read_text_file(dir / "i.hnsw");
  // Tampering is caught by the manifest checksum.
  bytes[bytes.size() - 5] ^= 0x1;
  write_text_file(dir / "i.hnsw", bytes);
  EXPECT_THROW(HnswIndex::load(dir / "i.hnsw"), IoError);
  // Without a manifest, truncation is caught by the parser.
  std::filesystem::remove(HnswIndex::manifest_path(dir / "i.hnsw"));
  write_text_file(dir / "i.hnsw", bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(HnswIndex::load(dir / "i.hnsw"), IoError);
  write_text_file(dir / "junk.hnsw", "not an index");
  EXPECT_THROW(HnswIndex::load(dir / "junk.hnsw"), IoError);
  EXPECT_THROW(HnswIndex::load(dir / "missing.hnsw"), IoError);
}

TEST(Hnsw, ConcurrentReadersSeeConsistentResults) {
  const auto idx = build(500, 32, 21);
  std::mt19937_64 rng(22);
  std::vector<std::vector<float>> queries;
  std::vector<std::vector<SearchHit>> expected;
  for (int q = 0; q < 40; ++q) {
    queries.push_back(random_unit_vector(rng, 32));
    expected.push_back(idx.search(queries.back(), 10));
  }
  std::atomic<int> mismatches{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (std::size_t q = 0; q < queries.size(); ++q) {
        if (idx.search(queries[q], 10) != expected[q]) ++mismatches;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(mismatches.load(), 0);
}

TEST(Hnsw, WriterAndReadersInterleave) {
  HnswIndex idx(16);
  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) idx.insert("seed" + std::to_string(i), random_unit_vector(rng, 16));
  std::vector<std::vector<float>> fresh;
  for (int i = 0; i < 200; ++i) fresh.push_back(random_unit_vector(rng, 16));
  std::atomic<bool> done{false};
  std::thread writer([&] {
    for (std::size_t i = 0; i < fresh.size(); ++i) idx.insert("w" + std::to_string(i), fresh[i]);
    done = true;
  });
  std::vector<std::thread> readers;
  std::atomic<int> bad{0};
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      std::mt19937_64 r(100 + t);
      while (!done) {
        const auto hits = idx.search(random_unit_vector(r, 16), 5);
        if (hits.empty() || !std::is_sorted(hits.begin(), hits.end(), hit_order)) ++bad;
      }
    });
  }
  writer.join();
  for (auto& t : readers) t.join();
  EXPECT_EQ(bad.load(), 0);
  EXPECT_EQ(idx.size(), 250u);
  for (std::size_t i = 0; i < fresh.size(); i += 17) {
    EXPECT_EQ(idx.search(fresh[i], 1).front().record_id, "w" + std::to_string(i));
  }
}
