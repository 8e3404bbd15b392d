#include "ebwtpc/clustering.hpp"

#include <fstream>
#include <stdexcept>

#include "ebwtpc/binio.hpp"

namespace ebwtpc {

namespace {

constexpr char kClusterMagic[8] = {'E', 'P', 'C', 'C', 'L', 'U', '0', '1'};
constexpr std::uint32_t kVersion = 1;

// Emit [a, b] with peak over lcp positions a+1..b.
void emit(std::vector<Cluster>& out, std::span<const std::uint32_t> lcp, std::uint64_t a,
          std::uint64_t b, std::uint64_t min_size) {
  if (b - a + 1 < min_size) return;
  Cluster c;
  c.a = a;
  c.b = b;
  c.p = a + 1;
  c.max_lcp = lcp[a + 1];
  for (std::uint64_t i = a + 2; i <= b; ++i) {
    if (lcp[i] >= c.max_lcp) {  // rightmost occurrence of the maximum
      c.max_lcp = lcp[i];
      c.p = i;
    }
  }
  out.push_back(c);
}

}  // namespace

std::vector<Cluster> find_clusters(std::span<const std::uint32_t> lcp, std::uint32_t tau,
                                   std::uint64_t min_size) {
  if (tau < 1) throw std::invalid_argument("find_clusters: tau must be >= 1");
  if (min_size < 2) min_size = 2;
  std::vector<Cluster> out;
  const std::uint64_t n = lcp.size();
  std::uint64_t i = 1;  // lcp[0] is 0 by construction
  while (i < n) {
    if (lcp[i] < tau) {
      ++i;
      continue;
    }
    std::uint64_t s = i;
    while (i < n && lcp[i] >= tau) ++i;
    std::uint64_t e = i - 1;  // maximal run [s, e]
    std::uint64_t start = s - 1;
    for (std::uint64_t t = s + 1; t < e; ++t) {
      if (lcp[t] < lcp[t - 1] && lcp[t] <= lcp[t + 1]) {
        emit(out, lcp, start, t - 1, min_size);
        start = t;
      }
    }
    emit(out, lcp, start, e, min_size);
  }
  return out;
}

bool verify_unimodal(std::span<const std::uint32_t> lcp, const Cluster& c) {
  if (c.b >= lcp.size() || c.a > c.b) throw std::out_of_range("verify_unimodal: cluster out of bounds");
  if (c.a == c.b) return true;  // vacuous
  if (c.p <= c.a || c.p > c.b) return false;
  for (std::uint64_t i = c.a + 2; i <= c.p; ++i)
    if (lcp[i] < lcp[i - 1]) return false;
  for (std::uint64_t i = c.p + 2; i <= c.b; ++i)
    if (lcp[i] > lcp[i - 1]) return false;
  return true;
}

void write_clusters(const std::string& path, std::span<const Cluster> clusters) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  binio::put_magic(os, kClusterMagic);
  binio::put_u32(os, kVersion);
  binio::put_u64(os, clusters.size());
  for (const Cluster& c : clusters) {
    binio::put_u64(os, c.a);
    binio::put_u64(os, c.b);
    binio::put_u64(os, c.p);
    binio::put_u64(os, c.max_lcp);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<Cluster> read_clusters(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  binio::check_magic(is, kClusterMagic, path);
  std::uint32_t v = binio::get_u32(is);
  if (v != kVersion) throw std::runtime_error(path + ": unsupported version");
  std::uint64_t count = binio::get_u64(is);
  std::vector<Cluster> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Cluster c;
    try {
      c.a = binio::get_u64(is);
      c.b = binio::get_u64(is);
      c.p = binio::get_u64(is);
      c.max_lcp = static_cast<std::uint32_t>(binio::get_u64(is));
    } catch (const std::runtime_error&) {
      throw std::runtime_error(path + ": truncated cluster file");
    }
    if (c.b < c.a || c.p < c.a || c.p > c.b)
      throw std::runtime_error(path + ": corrupt cluster record");
    out.push_back(c);
  }
  return out;
}

}  // namespace ebwtpc
