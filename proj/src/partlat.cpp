#include "chaoskit/partlat.hpp"

#include "chaoskit/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <sstream>

namespace ck {

SetPartition::SetPartition(int n, std::vector<std::vector<int>> blocks) : n_(n) {
  if (n < 0) throw ValidationError("invalid_partition", "negative ground-set size", "n");
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (auto& b : blocks) {
    if (b.empty()) throw ValidationError("invalid_partition", "empty block", "blocks");
    std::sort(b.begin(), b.end());
    for (int x : b) {
      if (x < 1 || x > n)
        throw ValidationError("invalid_partition", "element out of range: " + std::to_string(x), "blocks");
      if (seen[x - 1]++)
        throw ValidationError("invalid_partition", "element repeated: " + std::to_string(x), "blocks");
    }
  }
  for (int i = 0; i < n; ++i)
    if (!seen[i])
      throw ValidationError("invalid_partition", "element missing: " + std::to_string(i + 1), "blocks");
  std::sort(blocks.begin(), blocks.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  blocks_ = std::move(blocks);
  labels_.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t j = 0; j < blocks_.size(); ++j)
    for (int x : blocks_[j]) labels_[x - 1] = static_cast<int>(j);
}

SetPartition SetPartition::from_labels(const std::vector<int>& labels) {
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<int>(i) + 1);
  std::vector<std::vector<int>> blocks;
  for (auto& [k, v] : groups) blocks.push_back(std::move(v));
  return SetPartition(static_cast<int>(labels.size()), std::move(blocks));
}

SetPartition SetPartition::parse(const std::string& text) {
  std::vector<std::vector<int>> blocks;
  int n = 0;
  std::string cleaned;
  for (char c : text)
    if (c != '{' && c != '}' && c != ' ') cleaned += c;
  std::stringstream ss(cleaned);
  std::string block;
  while (std::getline(ss, block, '|')) {
    std::vector<int> b;
    std::stringstream bs(block);
    std::string item;
    while (std::getline(bs, item, ',')) {
      try {
        std::size_t pos = 0;
        int v = std::stoi(item, &pos);
        if (pos != item.size()) throw std::invalid_argument(item);
        b.push_back(v);
        n = std::max(n, v);
      } catch (const std::exception&) {
        throw ValidationError("parse_error", "bad partition element '" + item + "'", "partition");
      }
    }
    blocks.push_back(std::move(b));
  }
  std::size_t total = 0;
  for (auto& b : blocks) total += b.size();
  if (total != static_cast<std::size_t>(n))
    throw ValidationError("parse_error", "partition text does not cover 1..max", "partition");
  return SetPartition(n, std::move(blocks));
}

SetPartition SetPartition::finest(int n) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[i] = i;
  return from_labels(labels);
}

SetPartition SetPartition::coarsest(int n) {
  return from_labels(std::vector<int>(static_cast<std::size_t>(n), 0));
}

SetPartition SetPartition::intervals(const std::vector<int>& sizes) {
  std::vector<int> labels;
  for (std::size_t j = 0; j < sizes.size(); ++j)
    for (int k = 0; k < sizes[j]; ++k) labels.push_back(static_cast<int>(j));
  return from_labels(labels);
}

std::string SetPartition::str() const {
  std::string out;
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (j) out += '|';
    for (std::size_t k = 0; k < blocks_[j].size(); ++k) {
      if (k) out += ',';
      out += std::to_string(blocks_[j][k]);
    }
  }
  return out;
}

bool SetPartition::is_noncrossing() const { return labels_noncrossing(labels_); }

std::vector<int> SetPartition::block_class() const {
  std::vector<int> c;
  for (auto& b : blocks_) c.push_back(static_cast<int>(b.size()));
  std::sort(c.rbegin(), c.rend());
  return c;
}

bool SetPartition::refines(const SetPartition& other) const {
  if (other.n_ != n_) return false;
  for (auto& b : blocks_)
    for (int x : b)
      if (other.labels_[x - 1] != other.labels_[b.front() - 1]) return false;
  return true;
}

bool labels_noncrossing(const std::vector<int>& labels) {
  const int n = static_cast<int>(labels.size());
  int maxlab = -1;
  for (int l : labels) maxlab = std::max(maxlab, l);
  std::vector<int> lo(static_cast<std::size_t>(maxlab + 1), n), hi(static_cast<std::size_t>(maxlab + 1), -1),
      prev(static_cast<std::size_t>(maxlab + 1), -1);
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0) continue;
    lo[labels[i]] = std::min(lo[labels[i]], i);
    hi[labels[i]] = std::max(hi[labels[i]], i);
  }
  for (int c = 0; c < n; ++c) {
    int x = labels[c];
    if (x < 0) continue;
    int p = prev[x];
    prev[x] = c;
    if (p < 0) continue;
    for (int b = p + 1; b < c; ++b) {
      int y = labels[b];
      if (y < 0 || y == x) continue;
      if (lo[y] < p || hi[y] > c) return false;
    }
  }
  return true;
}

int partition_cap() {
  if (const char* env = std::getenv("HOMSUM_CAP")) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(env, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || env[pos] != '\0' || v < 1)
      throw ValidationError("invalid_parameter", std::string("HOMSUM_CAP must be a positive integer, got '") + env + "'",
                            "HOMSUM_CAP");
    return v;
  }
  return 14;
}

void check_partition_cap(int n, const char* what) {
  int cap = partition_cap();
  if (n > cap)
    throw SizeLimitError("partition ground set " + std::to_string(n) + " exceeds cap " +
                             std::to_string(cap) + " (set HOMSUM_CAP to raise it)",
                         what);
}

namespace {

struct Generator {
  int n;
  const PartitionFilter& f;
  const std::function<void(const std::vector<int>&, int)>& visit;
  int min_size = 1;
  int max_size;
  std::vector<int> outer;  // block of the respected partition, per element
  std::vector<int> labels, size, first, last;
  std::vector<std::uint64_t> mask;
  std::vector<int> target_class;

  Generator(int n_, const PartitionFilter& f_, const std::function<void(const std::vector<int>&, int)>& v)
      : n(n_), f(f_), visit(v), max_size(n_) {
    if (f.allowed_block_sizes) {
      if (f.allowed_block_sizes->empty()) max_size = 0;
      else {
        min_size = *f.allowed_block_sizes->begin();
        max_size = std::min(n, *f.allowed_block_sizes->rbegin());
      }
    }
    if (f.block_class) {
      target_class = *f.block_class;
      std::sort(target_class.rbegin(), target_class.rend());
      if (!target_class.empty()) {
        max_size = std::min(max_size, target_class.front());
        min_size = std::max(min_size, target_class.back());
      }
    }
    if (f.respects) outer = f.respects->labels();
    labels.assign(static_cast<std::size_t>(n), -1);
    size.assign(static_cast<std::size_t>(n), 0);
    first.assign(static_cast<std::size_t>(n), 0);
    last.assign(static_cast<std::size_t>(n), 0);
    mask.assign(static_cast<std::size_t>(n), 0);
  }

  bool crosses(int k, int g) const {
    int b = last[g];
    for (int c = b + 1; c < k; ++c)
      if (first[labels[c]] < b) return true;
    return false;
  }

  bool accept(int nb) const {
    for (int g = 0; g < nb; ++g) {
      if (f.allowed_block_sizes && !f.allowed_block_sizes->count(size[g])) return false;
    }
    if (f.block_class) {
      std::vector<int> c(size.begin(), size.begin() + nb);
      std::sort(c.rbegin(), c.rend());
      if (c != target_class) return false;
    }
    return true;
  }

  void run(int k, int nb) {
    if (k == n) {
      if (accept(nb)) visit(labels, nb);
      return;
    }
    const std::uint64_t bit = outer.empty() ? 0 : (std::uint64_t{1} << outer[k]);
    for (int g = 0; g <= nb; ++g) {
      const bool fresh = g == nb;
      if (!fresh) {
        if (mask[g] & bit) continue;
        if (size[g] + 1 > max_size) continue;
        if (f.noncrossing && crosses(k, g)) continue;
      } else if (max_size < 1) {
        continue;
      }
      labels[k] = g;
      ++size[g];
      int saved_last = last[g];
      std::uint64_t saved_mask = mask[g];
      if (fresh) {
        first[g] = k;
        mask[g] = 0;
      }
      last[g] = k;
      mask[g] |= bit;
      int nb2 = fresh ? nb + 1 : nb;
      int deficit = 0;
      for (int h = 0; h < nb2; ++h) deficit += std::max(0, min_size - size[h]);
      if (deficit <= n - k - 1) run(k + 1, nb2);
      last[g] = saved_last;
      mask[g] = saved_mask;
      --size[g];
      labels[k] = -1;
    }
  }
};

} // namespace

void for_each_partition(int n, const PartitionFilter& filter,
                        const std::function<void(const std::vector<int>&, int)>& visit) {
  if (n < 0) throw ValidationError("invalid_argument", "n must be non-negative", "n");
  check_partition_cap(n);
  if (filter.respects && filter.respects->size() != n)
    throw ValidationError("size_mismatch", "respected partition has a different ground set", "respects");
  if (filter.respects && filter.respects->block_count() > 64)
    throw SizeLimitError("respected partition has more than 64 blocks", "respects");
  if (filter.block_class) {
    int s = 0;
    for (int c : *filter.block_class) s += c;
    if (s != n) throw ValidationError("invalid_filter", "block class does not sum to n", "class");
  }
  if (n == 0) {
    visit({}, 0);
    return;
  }
  Generator gen(n, filter, visit);
  gen.run(0, 0);
}

std::vector<SetPartition> enumerate_partitions(int n, const PartitionFilter& filter) {
  std::vector<SetPartition> out;
  for_each_partition(n, filter, [&](const std::vector<int>& labels, int) {
    out.push_back(SetPartition::from_labels(labels));
  });
  return out;
}

std::uint64_t count_partitions(int n, const PartitionFilter& filter) {
  std::uint64_t c = 0;
  for_each_partition(n, filter, [&](const std::vector<int>&, int) { ++c; });
  return c;
}

SetPartition kernel_of(const std::vector<int>& indices) {
  if (indices.empty()) throw ValidationError("invalid_argument", "empty index sequence", "indices");
  return SetPartition::from_labels(indices);
}

SetPartition lattice_meet(const SetPartition& a, const SetPartition& b) {
  if (a.size() != b.size()) throw ValidationError("size_mismatch", "meet of partitions of different sets");
  std::vector<int> labels(static_cast<std::size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i) labels[i] = a.labels()[i] * (b.block_count() + 1) + b.labels()[i];
  return SetPartition::from_labels(labels);
}

SetPartition lattice_join(const SetPartition& a, const SetPartition& b) {
  if (a.size() != b.size()) throw ValidationError("size_mismatch", "join of partitions of different sets");
  const int n = a.size();
  std::vector<int> parent(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  auto unite = [&](const SetPartition& p) {
    for (auto& blk : p.blocks())
      for (int x : blk) parent[find(x - 1)] = find(blk.front() - 1);
  };
  unite(a);
  unite(b);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[i] = find(i);
  return SetPartition::from_labels(labels);
}

namespace {

// Visits every coarsening of s (as a partition of its blocks) that passes the
// non-crossing test on the ground set when nc is set.
void for_each_coarsening(const SetPartition& s, bool nc, const std::function<void(const SetPartition&)>& visit) {
  const int b = s.block_count();
  std::vector<int> ground(static_cast<std::size_t>(s.size()), -1);
  std::vector<int> group(static_cast<std::size_t>(b), -1);
  std::function<void(int, int)> rec = [&](int j, int ng) {
    if (j == b) {
      visit(SetPartition::from_labels(ground));
      return;
    }
    for (int g = 0; g <= ng; ++g) {
      group[j] = g;
      for (int x : s.blocks()[j]) ground[x - 1] = g;
      if (!nc || labels_noncrossing(ground)) rec(j + 1, g == ng ? ng + 1 : ng);
      for (int x : s.blocks()[j]) ground[x - 1] = -1;
    }
  };
  rec(0, 0);
}

} // namespace

Rational moebius_to_top(const SetPartition& sigma, Lattice lattice) {
  check_partition_cap(sigma.size());
  const int b = sigma.block_count();
  if (lattice == Lattice::classical) {
    Rational r = factorial(b - 1);
    return (b - 1) % 2 ? -r : r;
  }
  if (!sigma.is_noncrossing())
    throw ValidationError("not_noncrossing", "partition " + sigma.str() + " is crossing", "sigma");
  std::map<SetPartition, Rational> memo;
  std::function<Rational(const SetPartition&)> mu = [&](const SetPartition& t) -> Rational {
    if (t.block_count() <= 1) return Rational(1);
    auto it = memo.find(t);
    if (it != memo.end()) return it->second;
    Rational acc(0);
    for_each_coarsening(t, true, [&](const SetPartition& r) {
      if (r.block_count() < t.block_count()) acc += mu(r);
    });
    Rational res = -acc;
    memo.emplace(t, res);
    return res;
  };
  return mu(sigma);
}

std::uint64_t catalan(int k) {
  if (k < 0) throw ValidationError("invalid_argument", "negative Catalan index", "k");
  std::uint64_t c = 1;
  for (int i = 0; i < k; ++i) c = c * 2 * (2 * static_cast<std::uint64_t>(i) + 1) / (static_cast<std::uint64_t>(i) + 2);
  return c;
}

std::uint64_t riordan(int m) {
  if (m < 0) throw ValidationError("invalid_argument", "negative Riordan index", "m");
  // R_n = (n-1)/(n+1) (2 R_{n-1} + 3 R_{n-2}), R_0 = 1, R_1 = 0.
  std::vector<std::uint64_t> r{1, 0};
  for (int n = 2; n <= m; ++n)
    r.push_back((static_cast<std::uint64_t>(n) - 1) * (2 * r[n - 1] + 3 * r[n - 2]) / (static_cast<std::uint64_t>(n) + 1));
  return r[static_cast<std::size_t>(m)];
}

std::uint64_t double_factorial(int n) {
  if (n < -1) throw ValidationError("invalid_argument", "double factorial of " + std::to_string(n), "n");
  std::uint64_t r = 1;
  for (int k = n; k > 1; k -= 2) r *= static_cast<std::uint64_t>(k);
  return r;
}

std::uint64_t bell(int n) {
  std::vector<std::uint64_t> row{1};
  for (int i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (auto v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

std::uint64_t respectful_pairings(const std::vector<int>& sizes, Lattice lattice) {
  int total = 0;
  for (int s : sizes) {
    if (s < 0) throw ValidationError("invalid_argument", "negative group size", "sizes");
    total += s;
  }
  if (total % 2) return 0;
  PartitionFilter f = PartitionFilter::pairings(lattice == Lattice::noncrossing);
  f.respects = SetPartition::intervals(sizes);
  return count_partitions(total, f);
}

std::uint64_t respectful_pairings(int d, int m, Lattice lattice) {
  return respectful_pairings(std::vector<int>(static_cast<std::size_t>(m), d), lattice);
}

} // namespace ck
