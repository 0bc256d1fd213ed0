#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "memcost/core/error.hpp"

namespace memcost::vector_index {

using Vector = std::vector<float>;

inline constexpr std::size_t kDefaultDimension = 1536;

inline double l2_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

/// Throws unless every entry is finite and the norm is positive.
inline void validate_vector(std::span<const float> v, std::size_t expected_dim) {
  if (v.size() != expected_dim) {
    throw InvalidInput("vector dimension " + std::to_string(v.size()) + " != index dimension " +
                       std::to_string(expected_dim));
  }
  for (float x : v) {
    if (!std::isfinite(x)) throw InvalidInput("vector has a non-finite entry");
  }
  if (!(l2_norm(v) > 0.0)) throw InvalidInput("vector has zero norm");
}

inline double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw InvalidInput("cosine_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw InvalidInput("cosine_similarity: zero-norm vector");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

inline Vector normalized(std::span<const float> v) {
  const double n = l2_norm(v);
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / n);
  return out;
}

}  // namespace memcost::vector_index
