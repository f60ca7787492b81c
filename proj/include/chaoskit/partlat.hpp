#pragma once

#include "chaoskit/rational.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ck {

// Partition of {1..n}. Stored canonically: ascending blocks ordered by least
// element, with labels() giving the restricted-growth string (0-based).
class SetPartition {
public:
  SetPartition() = default;
  SetPartition(int n, std::vector<std::vector<int>> blocks);

  static SetPartition from_labels(const std::vector<int>& labels);
  static SetPartition parse(const std::string& text);
  static SetPartition finest(int n);
  static SetPartition coarsest(int n);
  // Interval partition with consecutive blocks of the given sizes (d^{⊗m}).
  static SetPartition intervals(const std::vector<int>& sizes);

  int size() const { return n_; }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  const std::vector<int>& labels() const { return labels_; }
  // Block of element i (1-based element).
  int block_of(int i) const { return labels_[i - 1]; }

  std::string str() const;
  bool is_noncrossing() const;
  // Block sizes sorted in decreasing order.
  std::vector<int> block_class() const;
  // True when every block of *this lies inside a block of other.
  bool refines(const SetPartition& other) const;

  friend bool operator==(const SetPartition& a, const SetPartition& b) {
    return a.n_ == b.n_ && a.labels_ == b.labels_;
  }
  friend bool operator!=(const SetPartition& a, const SetPartition& b) { return !(a == b); }
  friend bool operator<(const SetPartition& a, const SetPartition& b) {
    return a.n_ != b.n_ ? a.n_ < b.n_ : a.labels_ < b.labels_;
  }

private:
  int n_ = 0;
  std::vector<std::vector<int>> blocks_;
  std::vector<int> labels_;
};

struct PartitionFilter {
  bool noncrossing = false;
  std::optional<std::set<int>> allowed_block_sizes;
  // σ must satisfy σ ∧ respects = 0̂.
  std::optional<SetPartition> respects;
  // Required block-size census (any order).
  std::optional<std::vector<int>> block_class;

  static PartitionFilter pairings(bool nc = false) {
    PartitionFilter f;
    f.noncrossing = nc;
    f.allowed_block_sizes = std::set<int>{2};
    return f;
  }
};

enum class Lattice { classical, noncrossing };

// Cap on the ground-set size; HOMSUM_CAP overrides the default of 14.
int partition_cap();
void check_partition_cap(int n, const char* what = "n");

// Streams every partition that passes the filter, as its label vector and
// block count, in lexicographic order of the restricted-growth string.
void for_each_partition(int n, const PartitionFilter& filter,
                        const std::function<void(const std::vector<int>&, int)>& visit);
std::vector<SetPartition> enumerate_partitions(int n, const PartitionFilter& filter = {});
std::uint64_t count_partitions(int n, const PartitionFilter& filter = {});

bool labels_noncrossing(const std::vector<int>& labels);

SetPartition kernel_of(const std::vector<int>& indices);
SetPartition lattice_meet(const SetPartition& a, const SetPartition& b);
SetPartition lattice_join(const SetPartition& a, const SetPartition& b);

// μ(σ, 1̂) in P(n) or NC(n).
Rational moebius_to_top(const SetPartition& sigma, Lattice lattice);

std::uint64_t catalan(int k);
std::uint64_t riordan(int m);
std::uint64_t double_factorial(int n);
std::uint64_t bell(int n);
// |P₂*(d^{⊗m})| or |NC₂*(d^{⊗m})|.
std::uint64_t respectful_pairings(int d, int m, Lattice lattice);
// Same count for unequal group sizes.
std::uint64_t respectful_pairings(const std::vector<int>& sizes, Lattice lattice);

} // namespace ck
