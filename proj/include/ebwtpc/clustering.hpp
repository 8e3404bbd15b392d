#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ebwtpc {

/// An eBWT range [a, b] (0-based, inclusive) with the position p of the
/// rightmost LCP maximum over (a, b] and that maximum M.
struct Cluster {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t p = 0;
  std::uint32_t max_lcp = 0;

  std::uint64_t size() const { return b - a + 1; }
  bool operator==(const Cluster&) const = default;
};

// Scans the LCP array once: every maximal run [s, e] of positions with
// lcp >= tau yields the suffix range [s-1, e]; runs are split at interior
// strict local minima (lcp[i] < lcp[i-1] and lcp[i] <= lcp[i+1], leftmost
// index of a plateau), the left piece ending at i-1 and the right one
// starting at i. Emitted clusters are disjoint, sorted by start and at
// least min_size long.
std::vector<Cluster> find_clusters(std::span<const std::uint32_t> lcp, std::uint32_t tau,
                                   std::uint64_t min_size = 2);

// True iff lcp[a+1..p] is non-decreasing and lcp[p+1..b] non-increasing.
bool verify_unimodal(std::span<const std::uint32_t> lcp, const Cluster& c);

// Cluster file: header (magic, version, count) then (a, b, p, M) records as
// 64-bit little-endian. Lossless, order preserving.
void write_clusters(const std::string& path, std::span<const Cluster> clusters);
std::vector<Cluster> read_clusters(const std::string& path);

}  // namespace ebwtpc
