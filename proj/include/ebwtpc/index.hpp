#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ebwtpc/sequences.hpp"

namespace ebwtpc {

// In the eBWT the end-marker of read i is a distinguished symbol; on disk and
// in memory it is the byte '$', and its read rank is recoverable from the GSA
// entry at the same position (offset == 1 rows).
inline constexpr char kEndMarker = '$';

/// A suffix of read `read` starting at `offset`. Both fields are 1-based;
/// offset == read length + 1 denotes the end-marker-only suffix.
struct SuffixRef {
  std::uint32_t offset = 0;
  std::uint32_t read = 0;

  bool operator==(const SuffixRef&) const = default;
};

/// Co-indexed GSA + eBWT + LCP arrays of a read collection, length
/// P' = P + m. Immutable after construction.
struct IndexTriplet {
  std::vector<SuffixRef> gsa;
  std::vector<char> ebwt;          // 'A' 'C' 'G' 'T' or kEndMarker
  std::vector<std::uint32_t> lcp;  // lcp[0] == 0
  std::uint64_t num_reads = 0;
  // First global read rank (0-based) belonging to Sample2; == num_reads when
  // single-sample. Carried for convenience; not part of the file header.
  std::uint64_t sample_boundary = 0;

  std::size_t size() const { return gsa.size(); }

  // Read rank (1-based) of the end-marker stored at eBWT position i.
  // Only meaningful when ebwt[i] == kEndMarker.
  std::uint32_t end_marker_rank(std::size_t i) const { return gsa[i].read; }
};

struct BuildOptions {
  // Refuse to build indexes whose working set would exceed this many bytes.
  std::uint64_t memory_budget_bytes = 8ull << 30;
};

// Suffix sorting over the concatenation with per-read distinct separators
// (prefix doubling); O(P' log maxReadLen) time.
IndexTriplet build_index(const ReadCollection& c, const BuildOptions& opt = {});

// Test oracle: explicit suffix materialization + comparison sort. Same
// contract as build_index, kept on an independent code path.
IndexTriplet build_index_naive(const ReadCollection& c);

// Three-way comparison of two read suffixes under the extended order
// $_1 < ... < $_m < A < C < G < T.
int suffix_compare(const ReadCollection& c, SuffixRef x, SuffixRef y);

// LF mapping: position of the suffix one step earlier in the same read
// (cyclically, wrapping through the end-marker). O(P') per call; build the
// table below for bulk walks. Positions are 0-based; throws std::out_of_range.
std::size_t lf_map(const IndexTriplet& idx, std::size_t i);
std::size_t fl_map(const IndexTriplet& idx, std::size_t i);

// Full LF table in O(P').
std::vector<std::uint64_t> build_lf_table(const IndexTriplet& idx);

// Reconstructs the reads by walking LF from each end-marker. Throws
// std::runtime_error on an inconsistent triplet.
ReadCollection invert_ebwt(const IndexTriplet& idx);

// GSA range [lo, hi) of suffixes whose first pattern.size() symbols equal
// `pattern` (end-markers never match).
std::pair<std::size_t, std::size_t> prefix_range(const ReadCollection& c, const IndexTriplet& idx,
                                                 std::string_view pattern);

// Binary serialization: prefix.gsa / prefix.ebwt / prefix.lcp, each headed by
// (magic, version, P', m); GSA fields as 64-bit LE, symbols as bytes, LCP as
// 32-bit LE.
void save_index(const IndexTriplet& idx, const std::string& prefix);
IndexTriplet load_index(const std::string& prefix);

// Loads just the LCP array (the cluster stage needs nothing else).
std::vector<std::uint32_t> load_lcp(const std::string& prefix);

}  // namespace ebwtpc
