#pragma once

#include <netlasso/types.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace netlasso {

/// Cluster labels per node, renumbered 0, 1, ... in order of first appearance
/// so that equal set partitions compare equal.
class Partition {
 public:
  Partition() = default;

  explicit Partition(const std::vector<Index>& labels) : labels_(labels.size()) {
    std::map<Index, Index> remap;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto [it, inserted] = remap.try_emplace(labels[i], static_cast<Index>(remap.size()));
      labels_[i] = it->second;
    }
    k_ = static_cast<Index>(remap.size());
  }

  static Partition singletons(Index n) {
    std::vector<Index> l(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) l[static_cast<std::size_t>(i)] = i;
    return Partition(l);
  }

  static Partition single_cluster(Index n) { return Partition(std::vector<Index>(static_cast<std::size_t>(n), 0)); }

  Index size() const { return static_cast<Index>(labels_.size()); }
  Index num_clusters() const { return k_; }
  const std::vector<Index>& labels() const { return labels_; }
  Index label(Index i) const { return labels_.at(static_cast<std::size_t>(i)); }

  /// Members of each cluster in increasing node order.
  std::vector<std::vector<Index>> clusters() const {
    std::vector<std::vector<Index>> c(static_cast<std::size_t>(k_));
    for (std::size_t i = 0; i < labels_.size(); ++i) c[static_cast<std::size_t>(labels_[i])].push_back(static_cast<Index>(i));
    return c;
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<Index> labels_;
  Index k_ = 0;
};

enum class PartitionRelation { perfect, nontrivial_coarsening, trivial_coarsening, other };

inline std::string to_string(PartitionRelation r) {
  switch (r) {
    case PartitionRelation::perfect: return "perfect";
    case PartitionRelation::nontrivial_coarsening: return "nontrivial-coarsening";
    case PartitionRelation::trivial_coarsening: return "trivial-coarsening";
    case PartitionRelation::other: return "other";
  }
  return "unknown";
}

/// How an estimated partition relates to the true one: identical, a coarsening
/// (every estimated cluster is a union of true clusters), or neither.
inline PartitionRelation partition_relation(const Partition& estimate, const Partition& truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("partition_relation: size mismatch");
  if (estimate == truth) return PartitionRelation::perfect;
  std::vector<Index> image(static_cast<std::size_t>(truth.num_clusters()), -1);
  for (Index i = 0; i < truth.size(); ++i) {
    Index& slot = image[static_cast<std::size_t>(truth.label(i))];
    if (slot < 0)
      slot = estimate.label(i);
    else if (slot != estimate.label(i))
      return PartitionRelation::other;
  }
  return estimate.num_clusters() == 1 ? PartitionRelation::trivial_coarsening
                                      : PartitionRelation::nontrivial_coarsening;
}

/// Adjusted Rand index from the pair-counting contingency table. Returns 1
/// when both partitions are the same trivial split (the index is otherwise 0/0).
inline double adjusted_rand_index(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) throw std::invalid_argument("adjusted_rand_index: size mismatch");
  const Index n = a.size();
  auto pairs = [](std::int64_t c) { return c * (c - 1) / 2; };
  std::map<std::pair<Index, Index>, std::int64_t> table;
  std::vector<std::int64_t> rows(static_cast<std::size_t>(a.num_clusters())), cols(static_cast<std::size_t>(b.num_clusters()));
  for (Index i = 0; i < n; ++i) {
    ++table[{a.label(i), b.label(i)}];
    ++rows[static_cast<std::size_t>(a.label(i))];
    ++cols[static_cast<std::size_t>(b.label(i))];
  }
  std::int64_t index = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [key, c] : table) index += pairs(c);
  for (auto c : rows) sum_rows += pairs(c);
  for (auto c : cols) sum_cols += pairs(c);
  const long double total = static_cast<long double>(pairs(n));
  if (total == 0) return 1.0;
  const long double expected = static_cast<long double>(sum_rows) * static_cast<long double>(sum_cols) / total;
  const long double max_index = (static_cast<long double>(sum_rows) + static_cast<long double>(sum_cols)) / 2;
  if (max_index == expected) return 1.0;
  return static_cast<double>((static_cast<long double>(index) - expected) / (max_index - expected));
}

}  // namespace netlasso
