#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ebwtpc/clustering.hpp"
#include "ebwtpc/index.hpp"
#include "ebwtpc/sequences.hpp"
#include "ebwtpc/stats.hpp"

namespace ebwtpc {

struct CallParams {
  int left_len = 20;                  // -L: window ending at (and including) the SNP
  int right_len = 30;                 // -R
  std::uint64_t min_per_sample = 4;   // -m
  int max_snps = 3;                   // -v: main SNP plus up to v-1 in the left window
  double alpha = 0.05;
  std::uint32_t lcp_min = 16;         // context length for the Poisson model
  double min_consensus = 0.6;
  double epsilon = 0.0012;
  double genome_length = 0;           // n; required
  double mean_read_length = 0;        // r
  double reads_per_genome = 0;        // model m: reads carrying forward-oriented copies
  int threads = 1;
  std::uint64_t buffer_coord_cap = 1ull << 26;  // spill to disk beyond this many coords
  std::string spill_dir;              // empty: system temp dir
};

enum class ClusterRejection : std::uint8_t {
  Accepted,
  TooSmall,
  LeftTail,
  RightTail,
  SameAllele,
  MissingSample,
  NoConsensus,
};

struct FilterResult {
  bool accepted = false;
  ClusterRejection reason = ClusterRejection::Accepted;
};

// Accepts iff size lies in the two-tail band and both samples contribute at
// least min_per_sample letters. The right tail rejection is what discards
// ambiguous (multiplicity >= 2) clusters.
FilterResult filter_cluster(const Cluster& c, const std::array<std::uint64_t, 2>& per_sample_letters,
                            const PoissonModel& model, double alpha, std::uint64_t min_per_sample);
FilterResult filter_cluster(const IndexTriplet& idx, const Cluster& c, const PoissonModel& model,
                            double alpha, std::uint64_t min_per_sample);

struct AllelePair {
  char b1 = 0, b2 = 0;
  std::uint64_t support1 = 0, support2 = 0;
  bool tie1 = false, tie2 = false;  // plurality decided by the lexicographic tie-break
};

// Most frequent non-end-marker symbol per sample over [a, b]; nullopt when a
// sample is unrepresented or the pluralities agree.
std::optional<AllelePair> extract_alleles(const IndexTriplet& idx, const Cluster& c);

// GSA entry at the sample's rightmost LCP maximum within (a, b]; throws when
// the sample is absent from the cluster.
SuffixRef peak_read(const IndexTriplet& idx, const Cluster& c, Sample sample);

/// (read, snp_pos): 1-based read rank and 1-based position of the variant
/// base within that read.
struct ReadCoord {
  std::uint64_t read = 0;
  std::uint32_t snp_pos = 0;
};

// Per-column plurality vote over the aligned read windows ending at the SNP
// (window length = left_len, SNP included as the last column). Shorter
// prefixes drop out of the vote; nullopt when a column has no votes or its
// plurality fraction is below min_consensus.
std::optional<std::string> assemble_left_context(const ReadCollection& reads,
                                                 std::span<const ReadCoord> coords, int left_len,
                                                 double min_consensus);

struct ExtraVariant {
  int dist = 0;  // columns left of the main SNP
  char b1 = 0, b2 = 0;
};

struct SnpCall {
  std::uint64_t id = 0;  // 1-based output id
  char b1 = 0, b2 = 0;
  std::uint64_t support1 = 0, support2 = 0;
  std::string left1, right1;  // left = L chars ending with the allele
  std::string left2, right2;
  SuffixRef peak1, peak2;
  bool low_confidence = false;
  std::vector<ExtraVariant> extras;
  std::uint64_t cluster_index = 0;
};

struct CallCounters {
  // File passes (set by the driver that owns the files).
  std::uint64_t ebwt_loads = 0, gsa_loads = 0, lcp_loads = 0, clusters_loads = 0;
  std::uint64_t reads_file_passes = 0;
  // Pipeline accounting.
  std::uint64_t clusters_seen = 0;
  std::uint64_t candidates = 0;
  std::uint64_t calls_emitted = 0;
  std::uint64_t rejected_too_small = 0;
  std::uint64_t rejected_left_tail = 0;
  std::uint64_t rejected_right_tail = 0;
  std::uint64_t rejected_same_allele = 0;
  std::uint64_t rejected_missing_sample = 0;
  std::uint64_t rejected_no_consensus = 0;
  std::uint64_t buffered_coords = 0;       // total coordinates buffered for pass 2
  std::uint64_t buffer_peak_bytes = 0;     // peak in-memory request buffer
  std::uint64_t spilled_chunks = 0;
};

/// One sequential pass over the reads in global rank order.
class ReadSource {
 public:
  virtual ~ReadSource() = default;
  // Calls fn(rank, bases) for every read, rank increasing from 0.
  virtual void scan(const std::function<void(std::uint64_t, std::string_view)>& fn) = 0;
  virtual std::uint64_t passes() const = 0;
};

class CollectionReadSource final : public ReadSource {
 public:
  explicit CollectionReadSource(const ReadCollection& c) : c_(c) {}
  void scan(const std::function<void(std::uint64_t, std::string_view)>& fn) override;
  std::uint64_t passes() const override { return passes_; }

 private:
  const ReadCollection& c_;
  std::uint64_t passes_ = 0;
};

class FastaReadSource final : public ReadSource {
 public:
  explicit FastaReadSource(std::string path) : path_(std::move(path)) {}
  void scan(const std::function<void(std::uint64_t, std::string_view)>& fn) override;
  std::uint64_t passes() const override { return passes_; }

 private:
  std::string path_;
  std::uint64_t passes_ = 0;
};

struct CallResult {
  std::vector<SnpCall> calls;
  CallCounters counters;
  PoissonModel model;
  long band_lo = 0, band_hi = 0;
};

// Two passes: one scan of the clusters against the in-memory triplet buffers
// candidate coordinates, one scan of the reads file resolves contexts and
// votes. Output is sorted by cluster start whatever the thread count.
CallResult call_snps(const IndexTriplet& idx, std::span<const Cluster> clusters, ReadSource& reads,
                     const CallParams& params);

// KisSNP2-style record pair per call:
//   >SNP_<id>|sample1|<b1>/<b2>|support=<s1>
//   <left window including b1><right context>
// and the symmetric sample2 record with <b2>/<b1>.
void write_kissnp2(std::ostream& os, std::span<const SnpCall> calls);

}  // namespace ebwtpc
