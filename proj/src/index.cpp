#include "ebwtpc/index.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ebwtpc/binio.hpp"

namespace ebwtpc {

namespace {

constexpr char kGsaMagic[8] = {'E', 'P', 'C', 'G', 'S', 'A', '0', '1'};
constexpr char kBwtMagic[8] = {'E', 'P', 'C', 'B', 'W', 'T', '0', '1'};
constexpr char kLcpMagic[8] = {'E', 'P', 'C', 'L', 'C', 'P', '0', '1'};
constexpr std::uint32_t kVersion = 1;

// Per-symbol counts of A,C,G,T in the eBWT plus the number of end-markers.
struct SymbolCounts {
  std::array<std::uint64_t, 4> base = {0, 0, 0, 0};
  std::uint64_t markers = 0;
};

SymbolCounts count_symbols(const IndexTriplet& idx) {
  SymbolCounts sc;
  for (char ch : idx.ebwt) {
    if (ch == kEndMarker) {
      ++sc.markers;
    } else {
      int b = base_index(ch);
      if (b < 0) throw std::runtime_error("index: invalid eBWT symbol");
      ++sc.base[static_cast<std::size_t>(b)];
    }
  }
  return sc;
}

// F-column start of each base block: markers occupy rows [0, m).
std::array<std::uint64_t, 4> base_starts(const SymbolCounts& sc) {
  std::array<std::uint64_t, 4> st{};
  std::uint64_t acc = sc.markers;
  for (int b = 0; b < 4; ++b) {
    st[static_cast<std::size_t>(b)] = acc;
    acc += sc.base[static_cast<std::size_t>(b)];
  }
  return st;
}

}  // namespace

int suffix_compare(const ReadCollection& c, SuffixRef x, SuffixRef y) {
  const std::string& a = c.reads[x.read - 1].bases;
  const std::string& b = c.reads[y.read - 1].bases;
  std::size_t i = x.offset - 1;  // == size() means the end-marker
  std::size_t j = y.offset - 1;
  for (;;) {
    bool ea = i >= a.size(), eb = j >= b.size();
    if (ea && eb) return x.read < y.read ? -1 : (x.read > y.read ? 1 : 0);
    if (ea) return -1;  // $_x < any base
    if (eb) return 1;
    if (a[i] != b[j]) return a[i] < b[j] ? -1 : 1;
    ++i;
    ++j;
  }
}

IndexTriplet build_index(const ReadCollection& c, const BuildOptions& opt) {
  if (c.empty()) throw std::invalid_argument("build_index: empty collection");
  const std::size_t m = c.size();

  std::uint64_t n64 = 0;
  for (const auto& r : c.reads) {
    if (r.bases.empty()) throw std::invalid_argument("build_index: empty read");
    n64 += r.bases.size() + 1;
  }
  if (n64 > static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max()) - 2 ||
      41 * n64 > opt.memory_budget_bytes)
    throw std::length_error("build_index: collection exceeds configured memory budget");
  const std::size_t n = static_cast<std::size_t>(n64);

  // Concatenation with distinct per-read separators: symbol of $_i is i-1,
  // bases map to m..m+3. Separator distinctness means suffix comparisons
  // never cross a read boundary, so ranks are final after ~log2(maxlen)
  // doubling rounds.
  std::vector<std::int32_t> sym(n);
  std::vector<std::uint32_t> read_of(n);
  std::vector<std::uint64_t> read_start(m);
  {
    std::size_t pos = 0;
    for (std::size_t r = 0; r < m; ++r) {
      read_start[r] = pos;
      for (char ch : c.reads[r].bases) {
        int b = base_index(ch);
        if (b < 0) throw std::invalid_argument("build_index: non-ACGT symbol in read");
        sym[pos] = static_cast<std::int32_t>(m) + b;
        read_of[pos] = static_cast<std::uint32_t>(r);
        ++pos;
      }
      sym[pos] = static_cast<std::int32_t>(r);
      read_of[pos] = static_cast<std::uint32_t>(r);
      ++pos;
    }
  }

  std::vector<std::int32_t> sa(n), sa2(n), rank(n), rank_new(n);
  std::vector<std::int32_t> cnt;
  const std::size_t ni = n;

  // Round 0: counting sort by the initial symbol, then densify ranks so the
  // all-distinct loop exit below is meaningful.
  std::int64_t max_rank = 0;
  {
    cnt.assign(m + 5, 0);
    for (std::size_t i = 0; i < ni; ++i) ++cnt[static_cast<std::size_t>(sym[i]) + 1];
    for (std::size_t i = 1; i < cnt.size(); ++i) cnt[i] += cnt[i - 1];
    for (std::size_t i = 0; i < ni; ++i)
      sa[static_cast<std::size_t>(cnt[static_cast<std::size_t>(sym[i])]++)] =
          static_cast<std::int32_t>(i);
    rank[static_cast<std::size_t>(sa[0])] = 0;
    for (std::size_t i = 1; i < ni; ++i) {
      bool same = sym[static_cast<std::size_t>(sa[i])] == sym[static_cast<std::size_t>(sa[i - 1])];
      rank[static_cast<std::size_t>(sa[i])] =
          rank[static_cast<std::size_t>(sa[i - 1])] + (same ? 0 : 1);
    }
    max_rank = rank[static_cast<std::size_t>(sa[ni - 1])];
  }

  cnt.assign(ni + 1, 0);
  for (std::size_t h = 1; max_rank != static_cast<std::int64_t>(ni) - 1; h <<= 1) {
    // Order by second key (positions with no i+h first), then stable-sort by rank.
    std::size_t idx = 0;
    for (std::size_t i = (h >= ni ? 0 : ni - h); i < ni; ++i)
      sa2[idx++] = static_cast<std::int32_t>(i);
    for (std::size_t i = 0; i < ni; ++i)
      if (static_cast<std::size_t>(sa[i]) >= h)
        sa2[idx++] = sa[i] - static_cast<std::int32_t>(h);

    std::fill(cnt.begin(), cnt.begin() + max_rank + 2, 0);
    for (std::size_t i = 0; i < ni; ++i) ++cnt[static_cast<std::size_t>(rank[i]) + 1];
    for (std::int64_t i = 1; i <= max_rank + 1; ++i) cnt[static_cast<std::size_t>(i)] += cnt[static_cast<std::size_t>(i - 1)];
    for (std::size_t i = 0; i < ni; ++i) {
      std::int32_t x = sa2[i];
      sa[static_cast<std::size_t>(cnt[static_cast<std::size_t>(rank[static_cast<std::size_t>(x)])]++)] = x;
    }

    auto key2 = [&](std::int32_t p) -> std::int64_t {
      std::size_t q = static_cast<std::size_t>(p) + h;
      return q < ni ? rank[q] : -1;
    };
    rank_new[static_cast<std::size_t>(sa[0])] = 0;
    for (std::size_t i = 1; i < ni; ++i) {
      std::int32_t prev = sa[i - 1], cur = sa[i];
      bool same = rank[static_cast<std::size_t>(prev)] == rank[static_cast<std::size_t>(cur)] &&
                  key2(prev) == key2(cur);
      rank_new[static_cast<std::size_t>(cur)] =
          rank_new[static_cast<std::size_t>(prev)] + (same ? 0 : 1);
    }
    rank.swap(rank_new);
    max_rank = rank[static_cast<std::size_t>(sa[ni - 1])];
  }
  sa2.clear();
  sa2.shrink_to_fit();
  rank_new.clear();
  rank_new.shrink_to_fit();
  cnt.clear();
  cnt.shrink_to_fit();

  IndexTriplet out;
  out.num_reads = m;
  out.sample_boundary = c.sample_boundary;
  out.gsa.resize(ni);
  out.ebwt.resize(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    std::size_t p = static_cast<std::size_t>(sa[i]);
    std::uint32_t r = read_of[p];
    std::uint32_t j = static_cast<std::uint32_t>(p - read_start[r] + 1);
    out.gsa[i] = SuffixRef{j, r + 1};
    if (j == 1) {
      out.ebwt[i] = kEndMarker;
    } else {
      out.ebwt[i] = index_base(sym[p - 1] - static_cast<std::int32_t>(m));
    }
  }
  read_of.clear();
  read_of.shrink_to_fit();

  // Kasai over the separator-distinct symbols: end-markers never match, so
  // this is exactly the read-suffix LCP.
  out.lcp.assign(ni, 0);
  {
    std::int64_t h = 0;
    for (std::size_t i = 0; i < ni; ++i) {
      std::int64_t ri = rank[i];
      if (ri > 0) {
        std::size_t j = static_cast<std::size_t>(sa[static_cast<std::size_t>(ri - 1)]);
        while (i + static_cast<std::size_t>(h) < ni && j + static_cast<std::size_t>(h) < ni &&
               sym[i + static_cast<std::size_t>(h)] == sym[j + static_cast<std::size_t>(h)])
          ++h;
        out.lcp[static_cast<std::size_t>(ri)] = static_cast<std::uint32_t>(h);
        if (h > 0) --h;
      } else {
        h = 0;
      }
    }
  }
  return out;
}

IndexTriplet build_index_naive(const ReadCollection& c) {
  if (c.empty()) throw std::invalid_argument("build_index_naive: empty collection");
  std::vector<SuffixRef> refs;
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (c.reads[r].bases.empty()) throw std::invalid_argument("build_index_naive: empty read");
    for (std::uint32_t j = 1; j <= c.reads[r].bases.size() + 1; ++j)
      refs.push_back(SuffixRef{j, static_cast<std::uint32_t>(r + 1)});
  }
  std::sort(refs.begin(), refs.end(),
            [&](SuffixRef x, SuffixRef y) { return suffix_compare(c, x, y) < 0; });

  auto naive_lcp = [&](SuffixRef x, SuffixRef y) -> std::uint32_t {
    const std::string& a = c.reads[x.read - 1].bases;
    const std::string& b = c.reads[y.read - 1].bases;
    std::size_t i = x.offset - 1, j = y.offset - 1;
    std::uint32_t h = 0;
    while (i < a.size() && j < b.size() && a[i] == b[j]) {
      ++h;
      ++i;
      ++j;
    }
    return h;
  };

  IndexTriplet out;
  out.num_reads = c.size();
  out.sample_boundary = c.sample_boundary;
  out.gsa = std::move(refs);
  out.ebwt.resize(out.gsa.size());
  out.lcp.assign(out.gsa.size(), 0);
  for (std::size_t i = 0; i < out.gsa.size(); ++i) {
    SuffixRef s = out.gsa[i];
    out.ebwt[i] = s.offset == 1 ? kEndMarker : c.reads[s.read - 1].bases[s.offset - 2];
    if (i > 0) out.lcp[i] = naive_lcp(out.gsa[i - 1], s);
  }
  return out;
}

std::size_t lf_map(const IndexTriplet& idx, std::size_t i) {
  if (i >= idx.size()) throw std::out_of_range("lf_map: position out of range");
  char ch = idx.ebwt[i];
  if (ch == kEndMarker) return static_cast<std::size_t>(idx.gsa[i].read) - 1;
  SymbolCounts sc = count_symbols(idx);
  auto st = base_starts(sc);
  int b = base_index(ch);
  std::uint64_t occ = 0;
  for (std::size_t t = 0; t <= i; ++t)
    if (idx.ebwt[t] == ch) ++occ;
  return static_cast<std::size_t>(st[static_cast<std::size_t>(b)] + occ - 1);
}

std::size_t fl_map(const IndexTriplet& idx, std::size_t i) {
  if (i >= idx.size()) throw std::out_of_range("fl_map: position out of range");
  SymbolCounts sc = count_symbols(idx);
  if (sc.markers != idx.num_reads)
    throw std::runtime_error("fl_map: end-marker count disagrees with read count");
  if (i < sc.markers) {
    std::uint32_t want = static_cast<std::uint32_t>(i + 1);
    for (std::size_t t = 0; t < idx.size(); ++t)
      if (idx.ebwt[t] == kEndMarker && idx.gsa[t].read == want) return t;
    throw std::runtime_error("fl_map: end-marker rank not present in eBWT");
  }
  auto st = base_starts(sc);
  int b = 3;
  while (b > 0 && i < st[static_cast<std::size_t>(b)]) --b;
  std::uint64_t k = i - st[static_cast<std::size_t>(b)] + 1;
  char ch = index_base(b);
  for (std::size_t t = 0; t < idx.size(); ++t)
    if (idx.ebwt[t] == ch && --k == 0) return t;
  throw std::runtime_error("fl_map: symbol occurrence not found");
}

std::vector<std::uint64_t> build_lf_table(const IndexTriplet& idx) {
  SymbolCounts sc = count_symbols(idx);
  auto next = base_starts(sc);
  std::vector<std::uint64_t> lf(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    char ch = idx.ebwt[i];
    if (ch == kEndMarker) {
      std::uint32_t r = idx.gsa[i].read;
      if (r == 0 || r > idx.num_reads)
        throw std::runtime_error("build_lf_table: end-marker with invalid read rank");
      lf[i] = r - 1;
    } else {
      lf[i] = next[static_cast<std::size_t>(base_index(ch))]++;
    }
  }
  return lf;
}

ReadCollection invert_ebwt(const IndexTriplet& idx) {
  const std::size_t pp = idx.size();
  if (idx.ebwt.size() != pp || idx.lcp.size() != pp)
    throw std::runtime_error("invert_ebwt: triplet arrays disagree in length");
  const std::uint64_t m = idx.num_reads;
  if (m == 0 || m > pp) throw std::runtime_error("invert_ebwt: invalid read count");

  SymbolCounts sc = count_symbols(idx);
  if (sc.markers != m)
    throw std::runtime_error("invert_ebwt: end-marker count disagrees with read count");

  std::vector<std::uint64_t> lf = build_lf_table(idx);
  ReadCollection out;
  out.reads.reserve(m);
  std::uint64_t total = 0;
  for (std::uint64_t q = 1; q <= m; ++q) {
    std::string rev;
    std::size_t i = static_cast<std::size_t>(q - 1);  // F row of the $_q suffix
    std::uint64_t steps = 0;
    for (;;) {
      char ch = idx.ebwt[i];
      if (ch == kEndMarker) {
        if (idx.gsa[i].read != q)
          throw std::runtime_error("invert_ebwt: walk reached a foreign end-marker");
        break;
      }
      rev.push_back(ch);
      i = static_cast<std::size_t>(lf[i]);
      if (++steps > pp) throw std::runtime_error("invert_ebwt: LF walk does not terminate");
    }
    if (rev.empty()) throw std::runtime_error("invert_ebwt: reconstructed an empty read");
    std::reverse(rev.begin(), rev.end());
    total += rev.size();
    Sample s = (q - 1) < idx.sample_boundary ? Sample::Sample1 : Sample::Sample2;
    out.push_back(std::move(rev), s);
  }
  if (total != pp - m)
    throw std::runtime_error("invert_ebwt: reconstructed length disagrees with P'");
  out.finalize();
  return out;
}

std::pair<std::size_t, std::size_t> prefix_range(const ReadCollection& c, const IndexTriplet& idx,
                                                 std::string_view pattern) {
  // -1 / 0 / +1: suffix before / prefixed-by / after the pattern.
  auto cmp = [&](SuffixRef s) -> int {
    const std::string& a = c.reads[s.read - 1].bases;
    std::size_t i = s.offset - 1;
    for (std::size_t t = 0; t < pattern.size(); ++t, ++i) {
      if (i >= a.size()) return -1;  // suffix ended (end-marker < any base)
      if (a[i] != pattern[t]) return a[i] < pattern[t] ? -1 : 1;
    }
    return 0;
  };
  auto lo = std::partition_point(idx.gsa.begin(), idx.gsa.end(),
                                 [&](SuffixRef s) { return cmp(s) < 0; });
  auto hi = std::partition_point(lo, idx.gsa.end(), [&](SuffixRef s) { return cmp(s) == 0; });
  return {static_cast<std::size_t>(lo - idx.gsa.begin()),
          static_cast<std::size_t>(hi - idx.gsa.begin())};
}

namespace {

void write_header(std::ostream& os, const char magic[8], std::uint64_t pp, std::uint64_t m) {
  binio::put_magic(os, magic);
  binio::put_u32(os, kVersion);
  binio::put_u64(os, pp);
  binio::put_u64(os, m);
}

std::pair<std::uint64_t, std::uint64_t> read_header(std::istream& is, const char magic[8],
                                                    const std::string& what) {
  binio::check_magic(is, magic, what);
  std::uint32_t v = binio::get_u32(is);
  if (v != kVersion) throw std::runtime_error(what + ": unsupported version");
  std::uint64_t pp = binio::get_u64(is);
  std::uint64_t m = binio::get_u64(is);
  return {pp, m};
}

}  // namespace

void save_index(const IndexTriplet& idx, const std::string& prefix) {
  const std::uint64_t pp = idx.size(), m = idx.num_reads;
  {
    std::ofstream os(prefix + ".gsa", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + prefix + ".gsa");
    write_header(os, kGsaMagic, pp, m);
    std::vector<unsigned char> buf;
    buf.reserve(1 << 20);
    for (const SuffixRef& s : idx.gsa) {
      std::uint64_t f[2] = {s.offset, s.read};
      for (std::uint64_t v : f)
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
      if (buf.size() >= (1 << 20)) {
        os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        buf.clear();
      }
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os) throw std::runtime_error("write failed: " + prefix + ".gsa");
  }
  {
    std::ofstream os(prefix + ".ebwt", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + prefix + ".ebwt");
    write_header(os, kBwtMagic, pp, m);
    os.write(idx.ebwt.data(), static_cast<std::streamsize>(idx.ebwt.size()));
    if (!os) throw std::runtime_error("write failed: " + prefix + ".ebwt");
  }
  {
    std::ofstream os(prefix + ".lcp", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + prefix + ".lcp");
    write_header(os, kLcpMagic, pp, m);
    std::vector<unsigned char> buf;
    buf.reserve(1 << 20);
    for (std::uint32_t v : idx.lcp) {
      for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
      if (buf.size() >= (1 << 20)) {
        os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        buf.clear();
      }
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os) throw std::runtime_error("write failed: " + prefix + ".lcp");
  }
}

IndexTriplet load_index(const std::string& prefix) {
  IndexTriplet idx;
  std::uint64_t pp = 0, m = 0;
  {
    std::ifstream is(prefix + ".gsa", std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + prefix + ".gsa");
    std::tie(pp, m) = read_header(is, kGsaMagic, prefix + ".gsa");
    idx.gsa.resize(pp);
    std::vector<unsigned char> buf(static_cast<std::size_t>(16) * (1 << 16));
    std::size_t done = 0;
    while (done < pp) {
      std::size_t batch = std::min<std::size_t>(1 << 16, pp - done);
      is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(16 * batch));
      if (!is) throw std::runtime_error(prefix + ".gsa: truncated payload");
      for (std::size_t t = 0; t < batch; ++t) {
        std::uint64_t off = 0, rd = 0;
        for (int i = 7; i >= 0; --i) off = (off << 8) | buf[16 * t + static_cast<std::size_t>(i)];
        for (int i = 7; i >= 0; --i) rd = (rd << 8) | buf[16 * t + 8 + static_cast<std::size_t>(i)];
        idx.gsa[done + t] = SuffixRef{static_cast<std::uint32_t>(off), static_cast<std::uint32_t>(rd)};
      }
      done += batch;
    }
  }
  {
    std::ifstream is(prefix + ".ebwt", std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + prefix + ".ebwt");
    auto [pp2, m2] = read_header(is, kBwtMagic, prefix + ".ebwt");
    if (pp2 != pp || m2 != m)
      throw std::runtime_error("triplet files disagree: " + prefix + ".ebwt header");
    idx.ebwt.resize(pp);
    is.read(idx.ebwt.data(), static_cast<std::streamsize>(pp));
    if (!is) throw std::runtime_error(prefix + ".ebwt: truncated payload");
    for (char ch : idx.ebwt)
      if (ch != kEndMarker && base_index(ch) < 0)
        throw std::runtime_error(prefix + ".ebwt: invalid symbol byte");
  }
  {
    std::ifstream is(prefix + ".lcp", std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + prefix + ".lcp");
    auto [pp3, m3] = read_header(is, kLcpMagic, prefix + ".lcp");
    if (pp3 != pp || m3 != m)
      throw std::runtime_error("triplet files disagree: " + prefix + ".lcp header");
    idx.lcp.resize(pp);
    std::vector<unsigned char> buf(static_cast<std::size_t>(4) * (1 << 16));
    std::size_t done = 0;
    while (done < pp) {
      std::size_t batch = std::min<std::size_t>(1 << 16, pp - done);
      is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(4 * batch));
      if (!is) throw std::runtime_error(prefix + ".lcp: truncated payload");
      for (std::size_t t = 0; t < batch; ++t) {
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | buf[4 * t + static_cast<std::size_t>(i)];
        idx.lcp[done + t] = v;
      }
      done += batch;
    }
  }
  idx.num_reads = m;
  idx.sample_boundary = m;
  return idx;
}

std::vector<std::uint32_t> load_lcp(const std::string& prefix) {
  std::ifstream is(prefix + ".lcp", std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + prefix + ".lcp");
  auto [pp, m] = read_header(is, kLcpMagic, prefix + ".lcp");
  (void)m;
  std::vector<std::uint32_t> lcp(pp);
  std::vector<unsigned char> buf(static_cast<std::size_t>(4) * (1 << 16));
  std::size_t done = 0;
  while (done < pp) {
    std::size_t batch = std::min<std::size_t>(1 << 16, pp - done);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(4 * batch));
    if (!is) throw std::runtime_error(prefix + ".lcp: truncated payload");
    for (std::size_t t = 0; t < batch; ++t) {
      std::uint32_t v = 0;
      for (int i = 3; i >= 0; --i) v = (v << 8) | buf[4 * t + static_cast<std::size_t>(i)];
      lcp[done + t] = v;
    }
    done += batch;
  }
  return lcp;
}

}  // namespace ebwtpc
