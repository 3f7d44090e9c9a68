#pragma once

#include <cmath>
#include <stdexcept>

#include "contaski/types.hpp"

namespace contaski {

class SimilarityDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Cluster-membership threshold in [0, 1].
class SimilarityThreshold {
 public:
  static constexpr double kDefault = 0.65;

  constexpr SimilarityThreshold() = default;
  explicit SimilarityThreshold(double v) : value_(v) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("similarity threshold must lie in [0, 1]");
  }
  constexpr double value() const { return value_; }

 private:
  double value_{kDefault};
};

/// Cosine similarity of two capability sets viewed as indicator vectors:
/// |a ∩ b| / sqrt(|a| * |b|).
inline double capability_similarity(const CapabilitySet& a, const CapabilitySet& b) {
  if (a.empty() || b.empty()) throw SimilarityDomainError("capability similarity of an empty set is undefined");
  const auto shared = static_cast<double>(a.intersection_size(b));
  return shared / std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

/// Inclusive threshold test; no rounding is applied before the comparison.
inline bool is_similar(const CapabilitySet& a, const CapabilitySet& b, SimilarityThreshold t) {
  return capability_similarity(a, b) >= t.value();
}

inline bool required_subset(const CapabilitySet& required, const CapabilitySet& owned) {
  return required.is_subset_of(owned);
}

}  // namespace contaski
