#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "emrm/rational.hpp"

namespace emrm {

inline constexpr int kMaxPartitionSize = 12;

// Partition of {0..k-1} (printed 1-based).  Blocks are sorted internally and
// ordered by their minimum element.
class SetPartition {
 public:
  SetPartition() = default;

  // From a restricted growth string: labels[0] = 0, labels[i] <= 1 + max(labels[0..i-1]).
  static SetPartition from_labels(std::vector<int> labels) {
    SetPartition p;
    int blocks = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || labels[i] > blocks) throw InvalidArgumentError("labels are not a restricted growth string");
      if (labels[i] == blocks) ++blocks;
    }
    p.labels_ = std::move(labels);
    p.blocks_.assign(blocks, {});
    for (std::size_t i = 0; i < p.labels_.size(); ++i) p.blocks_[p.labels_[i]].push_back(static_cast<int>(i));
    return p;
  }

  // Any block list covering {0..k-1} disjointly; canonicalized.
  static SetPartition from_blocks(int ground_size, const std::vector<std::vector<int>>& blocks) {
    std::vector<int> owner(ground_size, -1);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].empty()) throw InvalidArgumentError("empty block");
      for (int e : blocks[b]) {
        if (e < 0 || e >= ground_size || owner[e] != -1) throw InvalidArgumentError("blocks are not a partition");
        owner[e] = static_cast<int>(b);
      }
    }
    std::vector<int> relabel(blocks.size(), -1);
    std::vector<int> labels(ground_size);
    int next = 0;
    for (int e = 0; e < ground_size; ++e) {
      if (owner[e] == -1) throw InvalidArgumentError("blocks do not cover the ground set");
      if (relabel[owner[e]] == -1) relabel[owner[e]] = next++;
      labels[e] = relabel[owner[e]];
    }
    return from_labels(std::move(labels));
  }

  int ground_size() const { return static_cast<int>(labels_.size()); }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  const std::vector<int>& labels() const { return labels_; }
  int block_of(int element) const { return labels_.at(element); }
  bool same_block(int a, int b) const { return labels_.at(a) == labels_.at(b); }

  // Membership in S_pi: i_m = i_n exactly when m ~ n.
  template <typename Tuple>
  bool admits(const Tuple& indices) const {
    if (static_cast<int>(indices.size()) != ground_size()) return false;
    for (int a = 0; a < ground_size(); ++a)
      for (int b = a + 1; b < ground_size(); ++b)
        if ((indices[a] == indices[b]) != same_block(a, b)) return false;
    return true;
  }

  // |S_pi(N)| = N (N-1) ... (N-|pi|+1).
  Integer index_count(const Integer& n) const { return falling_factorial(n, block_count()); }

  std::string to_string() const {
    std::string out = "{";
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (b) out += "|";
      for (std::size_t i = 0; i < blocks_[b].size(); ++i) {
        if (i) out += ",";
        out += std::to_string(blocks_[b][i] + 1);
      }
    }
    return out + "}";
  }

  friend bool operator==(const SetPartition& a, const SetPartition& b) { return a.labels_ == b.labels_; }
  friend bool operator<(const SetPartition& a, const SetPartition& b) { return a.labels_ < b.labels_; }

 private:
  std::vector<int> labels_;
  std::vector<std::vector<int>> blocks_;
};

namespace detail {

inline void check_partition_size(int k) {
  if (k < 0 || k > kMaxPartitionSize)
    throw GuardError("partition ground size " + std::to_string(k) + " outside [0, " + std::to_string(kMaxPartitionSize) + "]");
}

// Restricted growth strings in lexicographic order; `allowed(labels, pos, label)`
// prunes partial assignments.
template <typename Allowed, typename Visit>
void for_each_rgs(int k, Allowed&& allowed, Visit&& visit) {
  std::vector<int> labels(k, 0);
  std::function<void(int, int)> rec = [&](int pos, int used) {
    if (pos == k) {
      visit(labels);
      return;
    }
    for (int label = 0; label <= used; ++label) {
      if (!allowed(labels, pos, label)) continue;
      labels[pos] = label;
      rec(pos + 1, std::max(used, label + 1));
    }
  };
  rec(0, 0);
}

}  // namespace detail

// Calls visit(const SetPartition&) for every partition of {0..k-1}.
template <typename Visit>
void for_each_set_partition(int k, Visit&& visit) {
  detail::check_partition_size(k);
  detail::for_each_rgs(
      k, [](const std::vector<int>&, int, int) { return true; },
      [&](const std::vector<int>& labels) { visit(SetPartition::from_labels(labels)); });
}

inline std::vector<SetPartition> enumerate_set_partitions(int k) {
  if (k < 1) throw GuardError("set partitions need k >= 1");
  std::vector<SetPartition> out;
  for_each_set_partition(k, [&](const SetPartition& p) { out.push_back(p); });
  return out;
}

// Perfect matchings of {0..r-1}; a single empty partition for r = 0.
inline std::vector<SetPartition> enumerate_pair_partitions(int r) {
  detail::check_partition_size(r);
  std::vector<SetPartition> out;
  if (r % 2 != 0) return out;
  std::vector<std::vector<int>> blocks;
  std::vector<bool> used(r, false);
  std::function<void()> rec = [&]() {
    int first = 0;
    while (first < r && used[first]) ++first;
    if (first == r) {
      out.push_back(SetPartition::from_blocks(r, blocks));
      return;
    }
    used[first] = true;
    for (int partner = first + 1; partner < r; ++partner) {
      if (used[partner]) continue;
      used[partner] = true;
      blocks.push_back({first, partner});
      rec();
      blocks.pop_back();
      used[partner] = false;
    }
    used[first] = false;
  };
  rec();
  return out;
}

// Vertex `index` of the `origin`-th set.
struct TaggedVertex {
  int origin;
  int index;
  friend bool operator==(const TaggedVertex&, const TaggedVertex&) = default;
};

// Partition of the disjoint union V_1 + ... + V_r with at most one vertex of
// each V_j per block.  Global vertex ids run through V_1 first, then V_2, ...
class CrossPartition {
 public:
  CrossPartition(std::vector<int> parts, SetPartition partition) : parts_(std::move(parts)), partition_(std::move(partition)) {
    offsets_.assign(parts_.size() + 1, 0);
    for (std::size_t j = 0; j < parts_.size(); ++j) offsets_[j + 1] = offsets_[j] + parts_[j];
    if (offsets_.back() != partition_.ground_size()) throw InvalidArgumentError("cross partition shape mismatch");
    for (const auto& block : partition_.blocks()) {
      std::vector<bool> seen(parts_.size(), false);
      for (int v : block) {
        const int o = origin_of(v);
        if (seen[o]) throw InvalidArgumentError("cross partition block holds two vertices of one origin");
        seen[o] = true;
      }
    }
  }

  const std::vector<int>& parts() const { return parts_; }
  const SetPartition& partition() const { return partition_; }
  int block_count() const { return partition_.block_count(); }

  int global_id(int origin, int index) const { return offsets_.at(origin) + index; }
  int origin_of(int global) const {
    return static_cast<int>(std::upper_bound(offsets_.begin(), offsets_.end(), global) - offsets_.begin()) - 1;
  }
  TaggedVertex tagged(int global) const {
    const int o = origin_of(global);
    return {o, global - offsets_[o]};
  }
  // Block holding vertex `index` of set `origin`.
  int block_of(int origin, int index) const { return partition_.block_of(global_id(origin, index)); }

  // Induced partition of {0..r-1}: origins sharing some block are linked.
  SetPartition induced_origin_partition() const {
    const int r = static_cast<int>(parts_.size());
    std::vector<int> parent(r);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (const auto& block : partition_.blocks())
      for (std::size_t i = 1; i < block.size(); ++i) parent[find(origin_of(block[i]))] = find(origin_of(block[0]));
    std::vector<int> root(r);
    for (int j = 0; j < r; ++j) root[j] = find(j);
    std::vector<std::vector<int>> groups;
    std::vector<int> group_of(r, -1);
    for (int j = 0; j < r; ++j) {
      if (group_of[root[j]] == -1) {
        group_of[root[j]] = static_cast<int>(groups.size());
        groups.emplace_back();
      }
      groups[group_of[root[j]]].push_back(j);
    }
    return SetPartition::from_blocks(r, groups);
  }

  std::string to_string() const {
    std::string out = "{";
    const auto& blocks = partition_.blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (b) out += "|";
      for (std::size_t i = 0; i < blocks[b].size(); ++i) {
        if (i) out += ",";
        const auto t = tagged(blocks[b][i]);
        out += std::to_string(t.index + 1) + "." + std::to_string(t.origin + 1);
      }
    }
    return out + "}";
  }

 private:
  std::vector<int> parts_;
  std::vector<int> offsets_;
  SetPartition partition_;
};

template <typename Visit>
void for_each_cross_partition(const std::vector<int>& sizes, Visit&& visit) {
  int total = 0;
  for (int s : sizes) {
    if (s < 0) throw InvalidArgumentError("negative part size");
    total += s;
  }
  if (total > kMaxPartitionSize)
    throw GuardError("cross partition total size " + std::to_string(total) + " exceeds " + std::to_string(kMaxPartitionSize));
  std::vector<int> origin(total);
  for (int j = 0, g = 0; j < static_cast<int>(sizes.size()); ++j)
    for (int i = 0; i < sizes[j]; ++i) origin[g++] = j;
  detail::for_each_rgs(
      total,
      [&](const std::vector<int>& labels, int pos, int label) {
        for (int prev = 0; prev < pos; ++prev)
          if (labels[prev] == label && origin[prev] == origin[pos]) return false;
        return true;
      },
      [&](const std::vector<int>& labels) { visit(CrossPartition(sizes, SetPartition::from_labels(labels))); });
}

inline std::vector<CrossPartition> enumerate_cross_partitions(const std::vector<int>& sizes) {
  std::vector<CrossPartition> out;
  for_each_cross_partition(sizes, [&](const CrossPartition& c) { out.push_back(c); });
  return out;
}

// Multisets m_1 >= ... >= m_r >= 2 with sum k; one empty multiset for k = 0.
inline std::vector<std::vector<int>> enumerate_integer_partitions_min2(int k) {
  if (k < 0) throw InvalidArgumentError("negative integer to partition");
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  std::function<void(int, int)> rec = [&](int remaining, int cap) {
    if (remaining == 0) {
      out.push_back(current);
      return;
    }
    for (int m = std::min(remaining, cap); m >= 2; --m) {
      current.push_back(m);
      rec(remaining - m, m);
      current.pop_back();
    }
  };
  rec(k, k);
  return out;
}

}  // namespace emrm
