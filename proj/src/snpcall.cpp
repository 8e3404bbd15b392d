#include "ebwtpc/snpcall.hpp"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace ebwtpc {

namespace {

struct Plurality {
  char base = 0;
  std::uint64_t count = 0;
  bool tie = false;
};

// Highest count wins; ties resolved toward the lexicographically smaller base.
Plurality plurality(const std::array<std::uint64_t, 4>& counts) {
  Plurality p;
  for (int b = 0; b < 4; ++b) {
    if (counts[static_cast<std::size_t>(b)] > p.count) {
      p.base = index_base(b);
      p.count = counts[static_cast<std::size_t>(b)];
      p.tie = false;
    } else if (counts[static_cast<std::size_t>(b)] == p.count && p.count > 0) {
      p.tie = true;
    }
  }
  return p;
}

std::array<std::array<std::uint64_t, 4>, 2> letter_counts(const IndexTriplet& idx,
                                                          const Cluster& c) {
  if (c.b >= idx.size() || c.a > c.b)
    throw std::out_of_range("cluster range outside the index");
  std::array<std::array<std::uint64_t, 4>, 2> counts{};
  for (std::uint64_t row = c.a; row <= c.b; ++row) {
    char ch = idx.ebwt[static_cast<std::size_t>(row)];
    if (ch == kEndMarker) continue;
    std::uint64_t rank0 = idx.gsa[static_cast<std::size_t>(row)].read - 1;
    std::size_t s = rank0 < idx.sample_boundary ? 0 : 1;
    ++counts[s][static_cast<std::size_t>(base_index(ch))];
  }
  return counts;
}

}  // namespace

FilterResult filter_cluster(const Cluster& c, const std::array<std::uint64_t, 2>& per_sample_letters,
                            const PoissonModel& model, double alpha,
                            std::uint64_t min_per_sample) {
  auto [lo, hi] = cluster_length_band(model, alpha);
  if (per_sample_letters[0] < min_per_sample || per_sample_letters[1] < min_per_sample)
    return {false, ClusterRejection::TooSmall};
  const std::uint64_t size = c.size();
  if (size < static_cast<std::uint64_t>(lo)) return {false, ClusterRejection::LeftTail};
  if (size > static_cast<std::uint64_t>(hi)) return {false, ClusterRejection::RightTail};
  return {true, ClusterRejection::Accepted};
}

FilterResult filter_cluster(const IndexTriplet& idx, const Cluster& c, const PoissonModel& model,
                            double alpha, std::uint64_t min_per_sample) {
  auto counts = letter_counts(idx, c);
  std::array<std::uint64_t, 2> totals = {0, 0};
  for (std::size_t s = 0; s < 2; ++s)
    for (int b = 0; b < 4; ++b) totals[s] += counts[s][static_cast<std::size_t>(b)];
  return filter_cluster(c, totals, model, alpha, min_per_sample);
}

std::optional<AllelePair> extract_alleles(const IndexTriplet& idx, const Cluster& c) {
  auto counts = letter_counts(idx, c);
  Plurality p1 = plurality(counts[0]);
  Plurality p2 = plurality(counts[1]);
  if (p1.count == 0 || p2.count == 0) return std::nullopt;
  if (p1.base == p2.base) return std::nullopt;
  AllelePair out;
  out.b1 = p1.base;
  out.b2 = p2.base;
  out.support1 = p1.count;
  out.support2 = p2.count;
  out.tie1 = p1.tie;
  out.tie2 = p2.tie;
  return out;
}

SuffixRef peak_read(const IndexTriplet& idx, const Cluster& c, Sample sample) {
  if (c.b >= idx.size() || c.a > c.b)
    throw std::out_of_range("peak_read: cluster range outside the index");
  const std::size_t want = sample == Sample::Sample1 ? 0 : 1;
  bool found = false;
  std::uint64_t best_row = 0;
  std::uint32_t best_lcp = 0;
  for (std::uint64_t row = c.a + 1; row <= c.b; ++row) {
    std::uint64_t rank0 = idx.gsa[static_cast<std::size_t>(row)].read - 1;
    std::size_t s = rank0 < idx.sample_boundary ? 0 : 1;
    if (s != want) continue;
    if (!found || idx.lcp[static_cast<std::size_t>(row)] >= best_lcp) {
      best_lcp = idx.lcp[static_cast<std::size_t>(row)];
      best_row = row;
      found = true;
    }
  }
  if (!found) {
    // Sample may still own row a alone.
    std::uint64_t rank0 = idx.gsa[static_cast<std::size_t>(c.a)].read - 1;
    std::size_t s = rank0 < idx.sample_boundary ? 0 : 1;
    if (s == want) return idx.gsa[static_cast<std::size_t>(c.a)];
    throw std::invalid_argument("peak_read: sample absent from cluster");
  }
  return idx.gsa[static_cast<std::size_t>(best_row)];
}

namespace {

// Column votes: index 0 is the SNP column, d > 0 is d bases to its left.
using ColumnVotes = std::vector<std::array<std::uint32_t, 4>>;

std::optional<std::string> assemble_from_votes(const ColumnVotes& votes, double min_consensus) {
  const std::size_t len = votes.size();
  std::string out(len, 'N');
  for (std::size_t d = 0; d < len; ++d) {
    std::uint64_t total = 0;
    std::array<std::uint64_t, 4> counts{};
    for (int b = 0; b < 4; ++b) {
      counts[static_cast<std::size_t>(b)] = votes[d][static_cast<std::size_t>(b)];
      total += counts[static_cast<std::size_t>(b)];
    }
    if (total == 0) return std::nullopt;
    Plurality p = plurality(counts);
    if (static_cast<double>(p.count) < min_consensus * static_cast<double>(total))
      return std::nullopt;
    out[len - 1 - d] = p.base;
  }
  return out;
}

}  // namespace

std::optional<std::string> assemble_left_context(const ReadCollection& reads,
                                                 std::span<const ReadCoord> coords, int left_len,
                                                 double min_consensus) {
  if (left_len <= 0) throw std::invalid_argument("assemble_left_context: left_len must be > 0");
  ColumnVotes votes(static_cast<std::size_t>(left_len), {0, 0, 0, 0});
  for (const ReadCoord& rc : coords) {
    if (rc.read == 0 || rc.read > reads.size())
      throw std::out_of_range("assemble_left_context: read rank out of range");
    const std::string& bases = reads.reads[static_cast<std::size_t>(rc.read - 1)].bases;
    if (rc.snp_pos == 0 || rc.snp_pos > bases.size())
      throw std::out_of_range("assemble_left_context: snp position out of range");
    for (int d = 0; d < left_len; ++d) {
      std::int64_t i = static_cast<std::int64_t>(rc.snp_pos) - 1 - d;
      if (i < 0) break;
      int b = base_index(bases[static_cast<std::size_t>(i)]);
      if (b < 0) throw std::invalid_argument("assemble_left_context: non-ACGT base");
      ++votes[static_cast<std::size_t>(d)][static_cast<std::size_t>(b)];
    }
  }
  return assemble_from_votes(votes, min_consensus);
}

void CollectionReadSource::scan(const std::function<void(std::uint64_t, std::string_view)>& fn) {
  ++passes_;
  for (std::size_t i = 0; i < c_.size(); ++i) fn(i, c_.reads[i].bases);
}

void FastaReadSource::scan(const std::function<void(std::uint64_t, std::string_view)>& fn) {
  ++passes_;
  std::ifstream in(path_);
  if (!in) throw std::runtime_error("cannot open reads file: " + path_);
  std::string line, seq;
  bool have = false;
  std::uint64_t rank = 0;
  auto emit = [&]() {
    if (!have) return;
    if (seq.empty()) throw std::runtime_error(path_ + ": empty read record");
    fn(rank++, seq);
    seq.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      emit();
      have = true;
      continue;
    }
    if (!have) throw std::runtime_error(path_ + ": sequence before first header");
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c)))
        seq.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  emit();
}

namespace {

// A buffered pass-2 request. For votes, pos is the 1-based SNP position in
// the read; for peak fetches it is the suffix start.
struct Request {
  std::uint64_t read = 0;
  std::uint64_t cand = 0;
  std::uint32_t pos = 0;
  std::uint8_t sample = 0;
  std::uint8_t peak = 0;
};

bool request_less(const Request& x, const Request& y) {
  if (x.read != y.read) return x.read < y.read;
  if (x.cand != y.cand) return x.cand < y.cand;
  if (x.pos != y.pos) return x.pos < y.pos;
  return x.peak < y.peak;
}

// Holds pass-2 requests; spills sorted chunks to disk past the cap so the
// reads file is still read exactly once.
class RequestBuffer {
 public:
  RequestBuffer(std::uint64_t cap, std::string dir, CallCounters& counters)
      : cap_(std::max<std::uint64_t>(cap, 16)), dir_(std::move(dir)), counters_(counters) {
    if (dir_.empty()) dir_ = std::filesystem::temp_directory_path().string();
  }

  ~RequestBuffer() {
    for (const auto& f : chunk_files_) {
      std::error_code ec;
      std::filesystem::remove(f, ec);
    }
  }

  void add(const Request& r) {
    mem_.push_back(r);
    ++counters_.buffered_coords;
    counters_.buffer_peak_bytes =
        std::max<std::uint64_t>(counters_.buffer_peak_bytes, mem_.size() * sizeof(Request));
    if (mem_.size() >= cap_) spill();
  }

  // After this, next() yields every request in (read, cand, pos, peak) order.
  void finalize() {
    std::sort(mem_.begin(), mem_.end(), request_less);
    mem_pos_ = 0;
    streams_.clear();
    streams_.reserve(chunk_files_.size());
    for (const auto& f : chunk_files_) {
      streams_.emplace_back(std::make_unique<std::ifstream>(f, std::ios::binary));
      if (!*streams_.back()) throw std::runtime_error("cannot reopen spill chunk " + f);
    }
    heads_.assign(streams_.size(), Request{});
    alive_.assign(streams_.size(), false);
    for (std::size_t i = 0; i < streams_.size(); ++i) advance(i);
  }

  std::optional<Request> next() {
    bool have = false, from_mem = false;
    Request best{};
    int best_stream = -1;
    if (mem_pos_ < mem_.size()) {
      best = mem_[mem_pos_];
      have = from_mem = true;
    }
    for (std::size_t i = 0; i < streams_.size(); ++i) {
      if (!alive_[i]) continue;
      if (!have || request_less(heads_[i], best)) {
        best = heads_[i];
        have = true;
        from_mem = false;
        best_stream = static_cast<int>(i);
      }
    }
    if (!have) return std::nullopt;
    if (from_mem) {
      ++mem_pos_;
    } else {
      advance(static_cast<std::size_t>(best_stream));
    }
    return best;
  }

 private:
  void spill() {
    std::sort(mem_.begin(), mem_.end(), request_less);
    std::string file = dir_ + "/ebwtpc_spill_" + std::to_string(::getpid()) + "_" +
                       std::to_string(chunk_files_.size()) + ".bin";
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("cannot create spill chunk " + file);
    os.write(reinterpret_cast<const char*>(mem_.data()),
             static_cast<std::streamsize>(mem_.size() * sizeof(Request)));
    if (!os) throw std::runtime_error("write failed on spill chunk " + file);
    chunk_files_.push_back(file);
    ++counters_.spilled_chunks;
    mem_.clear();
  }

  void advance(std::size_t i) {
    Request r;
    if (streams_[i]->read(reinterpret_cast<char*>(&r), sizeof(Request))) {
      heads_[i] = r;
      alive_[i] = true;
    } else {
      alive_[i] = false;
    }
  }

  std::uint64_t cap_;
  std::string dir_;
  CallCounters& counters_;
  std::vector<Request> mem_;
  std::size_t mem_pos_ = 0;
  std::vector<std::string> chunk_files_;
  std::vector<std::unique_ptr<std::ifstream>> streams_;
  std::vector<Request> heads_;
  std::vector<bool> alive_;
};

struct Coord {
  std::uint64_t read = 0;
  std::uint32_t snp_pos = 0;
  std::uint8_t sample = 0;
};

struct Analysis {
  ClusterRejection reason = ClusterRejection::Accepted;
  Cluster c;
  AllelePair alleles;
  SuffixRef peak[2];
  std::vector<Coord> coords;
};

// Candidate state accumulated during the reads pass.
struct CandState {
  std::uint64_t cluster_index = 0;
  Cluster c;
  AllelePair alleles;
  SuffixRef peak[2];
  std::array<ColumnVotes, 2> votes;
  std::array<std::string, 2> right;
  std::array<bool, 2> peak_seen = {false, false};
};

Analysis analyze_cluster(const IndexTriplet& idx, const Cluster& c, long lo, long hi,
                         std::uint64_t min_per_sample) {
  Analysis out;
  out.c = c;
  if (c.b >= idx.size() || c.a > c.b)
    throw std::runtime_error("call: cluster range outside the index (inconsistent inputs)");

  std::array<std::array<std::uint64_t, 4>, 2> counts{};
  std::array<std::uint64_t, 2> nlet = {0, 0};
  std::uint32_t best_lcp[2] = {0, 0};
  std::uint64_t best_row[2] = {0, 0};
  bool has_peak[2] = {false, false};
  out.coords.reserve(static_cast<std::size_t>(c.size()));

  for (std::uint64_t row = c.a; row <= c.b; ++row) {
    const SuffixRef sref = idx.gsa[static_cast<std::size_t>(row)];
    const std::size_t s = (sref.read - 1) < idx.sample_boundary ? 0 : 1;
    if (row > c.a) {
      const std::uint32_t l = idx.lcp[static_cast<std::size_t>(row)];
      if (!has_peak[s] || l >= best_lcp[s]) {
        best_lcp[s] = l;
        best_row[s] = row;
        has_peak[s] = true;
      }
    }
    const char ch = idx.ebwt[static_cast<std::size_t>(row)];
    if (ch != kEndMarker) {
      ++counts[s][static_cast<std::size_t>(base_index(ch))];
      ++nlet[s];
      out.coords.push_back(Coord{sref.read, sref.offset - 1, static_cast<std::uint8_t>(s)});
    }
  }

  if (nlet[0] < min_per_sample || nlet[1] < min_per_sample) {
    out.reason = ClusterRejection::TooSmall;
    return out;
  }
  const std::uint64_t size = c.size();
  if (size < static_cast<std::uint64_t>(lo)) {
    out.reason = ClusterRejection::LeftTail;
    return out;
  }
  if (size > static_cast<std::uint64_t>(hi)) {
    out.reason = ClusterRejection::RightTail;
    return out;
  }

  Plurality p1 = plurality(counts[0]);
  Plurality p2 = plurality(counts[1]);
  if (p1.count == 0 || p2.count == 0) {
    out.reason = ClusterRejection::MissingSample;
    return out;
  }
  if (p1.base == p2.base) {
    out.reason = ClusterRejection::SameAllele;
    return out;
  }
  out.alleles = AllelePair{p1.base, p2.base, p1.count, p2.count, p1.tie, p2.tie};

  for (std::size_t s = 0; s < 2; ++s) {
    if (has_peak[s]) {
      out.peak[s] = idx.gsa[static_cast<std::size_t>(best_row[s])];
    } else {
      const SuffixRef a_ref = idx.gsa[static_cast<std::size_t>(c.a)];
      const std::size_t sa = (a_ref.read - 1) < idx.sample_boundary ? 0 : 1;
      if (sa != s) {
        out.reason = ClusterRejection::MissingSample;
        return out;
      }
      out.peak[s] = a_ref;
    }
  }
  out.reason = ClusterRejection::Accepted;
  return out;
}

}  // namespace

CallResult call_snps(const IndexTriplet& idx, std::span<const Cluster> clusters, ReadSource& reads,
                     const CallParams& params) {
  if (!(params.genome_length > 0))
    throw std::invalid_argument("call: genome length (n) is required for the Poisson model");
  if (params.left_len <= 0 || params.right_len <= 0)
    throw std::invalid_argument("call: context window lengths must be positive");
  if (params.max_snps < 1) throw std::invalid_argument("call: -v must be >= 1");
  if (idx.num_reads == 0) throw std::invalid_argument("call: empty index");

  CallResult result;
  PoissonModel& model = result.model;
  model.n = params.genome_length;
  model.m = params.reads_per_genome > 0 ? params.reads_per_genome
                                        : static_cast<double>(idx.num_reads) / 2.0;
  model.r = params.mean_read_length > 0
                ? params.mean_read_length
                : static_cast<double>(idx.size() - idx.num_reads) /
                      static_cast<double>(idx.num_reads);
  model.epsilon = params.epsilon;
  model.k = static_cast<int>(params.lcp_min);
  model.t = 1;
  auto [lo, hi] = cluster_length_band(model, params.alpha);
  result.band_lo = lo;
  result.band_hi = hi;

  CallCounters& counters = result.counters;
  counters.clusters_seen = clusters.size();

  RequestBuffer requests(params.buffer_coord_cap, params.spill_dir, counters);
  std::vector<CandState> cands;

  const int threads = std::max(1, params.threads);
  const std::size_t chunk_size = 8192;
  std::vector<Analysis> slots;
  const std::size_t left_cols = static_cast<std::size_t>(params.left_len);

  for (std::size_t base = 0; base < clusters.size(); base += chunk_size) {
    const std::size_t end = std::min(base + chunk_size, clusters.size());
    slots.assign(end - base, Analysis{});
    std::exception_ptr worker_error;
    std::mutex error_mutex;
    auto work = [&](std::size_t from, std::size_t to) {
      try {
        for (std::size_t i = from; i < to; ++i)
          slots[i - base] = analyze_cluster(idx, clusters[i], lo, hi, params.min_per_sample);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!worker_error) worker_error = std::current_exception();
      }
    };
    if (threads == 1 || end - base < 2 * static_cast<std::size_t>(threads)) {
      work(base, end);
    } else {
      std::vector<std::thread> pool;
      const std::size_t per = (end - base + static_cast<std::size_t>(threads) - 1) /
                              static_cast<std::size_t>(threads);
      for (int t = 0; t < threads; ++t) {
        std::size_t from = base + static_cast<std::size_t>(t) * per;
        std::size_t to = std::min(end, from + per);
        if (from >= to) break;
        pool.emplace_back(work, from, to);
      }
      for (auto& th : pool) th.join();
    }
    if (worker_error) std::rethrow_exception(worker_error);

    // Drain in cluster order: tally rejections, register candidates, queue
    // the pass-2 requests.
    for (std::size_t i = base; i < end; ++i) {
      Analysis& a = slots[i - base];
      switch (a.reason) {
        case ClusterRejection::TooSmall: ++counters.rejected_too_small; continue;
        case ClusterRejection::LeftTail: ++counters.rejected_left_tail; continue;
        case ClusterRejection::RightTail: ++counters.rejected_right_tail; continue;
        case ClusterRejection::SameAllele: ++counters.rejected_same_allele; continue;
        case ClusterRejection::MissingSample: ++counters.rejected_missing_sample; continue;
        case ClusterRejection::NoConsensus:
        case ClusterRejection::Accepted: break;
      }
      const std::uint64_t cand_id = cands.size();
      CandState st;
      st.cluster_index = i;
      st.c = a.c;
      st.alleles = a.alleles;
      st.peak[0] = a.peak[0];
      st.peak[1] = a.peak[1];
      st.votes[0].assign(left_cols, {0, 0, 0, 0});
      st.votes[1].assign(left_cols, {0, 0, 0, 0});
      cands.push_back(std::move(st));
      ++counters.candidates;
      for (const Coord& co : a.coords)
        requests.add(Request{co.read, cand_id, co.snp_pos, co.sample, 0});
      for (std::size_t s = 0; s < 2; ++s)
        requests.add(Request{a.peak[s].read, cand_id, a.peak[s].offset,
                             static_cast<std::uint8_t>(s), 1});
      a.coords.clear();
      a.coords.shrink_to_fit();
    }
  }

  // Pass 2: one scan of the reads resolves votes and peak contexts.
  requests.finalize();
  std::optional<Request> cur = requests.next();
  reads.scan([&](std::uint64_t rank0, std::string_view bases) {
    const std::uint64_t want = rank0 + 1;
    if (cur && cur->read < want)
      throw std::runtime_error("call: buffered coordinate precedes the current read (corrupt inputs)");
    while (cur && cur->read == want) {
      CandState& st = cands[static_cast<std::size_t>(cur->cand)];
      if (cur->peak) {
        if (cur->pos == 0 || static_cast<std::size_t>(cur->pos - 1) > bases.size())
          throw std::runtime_error("call: peak coordinate outside its read");
        std::size_t from = static_cast<std::size_t>(cur->pos - 1);
        std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(params.right_len),
                                                bases.size() - from);
        st.right[cur->sample].assign(bases.substr(from, len));
        st.peak_seen[cur->sample] = true;
      } else {
        if (cur->pos == 0 || cur->pos > bases.size())
          throw std::runtime_error("call: SNP coordinate outside its read");
        for (std::size_t d = 0; d < left_cols; ++d) {
          std::int64_t p = static_cast<std::int64_t>(cur->pos) - 1 - static_cast<std::int64_t>(d);
          if (p < 0) break;
          int b = base_index(bases[static_cast<std::size_t>(p)]);
          if (b < 0) throw std::runtime_error("call: non-ACGT base in reads file");
          ++st.votes[cur->sample][d][static_cast<std::size_t>(b)];
        }
      }
      cur = requests.next();
    }
  });
  if (cur) throw std::runtime_error("call: reads file ended before all coordinates were resolved");

  // Assemble windows and emit in cluster order.
  for (CandState& st : cands) {
    auto w1 = assemble_from_votes(st.votes[0], params.min_consensus);
    auto w2 = assemble_from_votes(st.votes[1], params.min_consensus);
    if (!w1 || !w2 || !st.peak_seen[0] || !st.peak_seen[1]) {
      ++counters.rejected_no_consensus;
      continue;
    }
    SnpCall call;
    call.id = result.calls.size() + 1;
    call.b1 = st.alleles.b1;
    call.b2 = st.alleles.b2;
    call.support1 = st.alleles.support1;
    call.support2 = st.alleles.support2;
    call.left1 = std::move(*w1);
    call.left2 = std::move(*w2);
    call.right1 = std::move(st.right[0]);
    call.right2 = std::move(st.right[1]);
    call.peak1 = st.peak[0];
    call.peak2 = st.peak[1];
    call.low_confidence = st.alleles.tie1 || st.alleles.tie2;
    call.cluster_index = st.cluster_index;
    // The assembled SNP column and the eBWT plurality use the same votes and
    // tie-break; keep the allele as the single source of truth.
    call.left1.back() = call.b1;
    call.left2.back() = call.b2;
    // Additional SNPs in the left window, nearest first.
    for (int d = 1; d < params.left_len &&
                    call.extras.size() + 1 < static_cast<std::size_t>(params.max_snps);
         ++d) {
      char c1 = call.left1[static_cast<std::size_t>(params.left_len - 1 - d)];
      char c2 = call.left2[static_cast<std::size_t>(params.left_len - 1 - d)];
      if (c1 != c2) call.extras.push_back(ExtraVariant{d, c1, c2});
    }
    ++counters.calls_emitted;
    result.calls.push_back(std::move(call));
  }
  return result;
}

void write_kissnp2(std::ostream& os, std::span<const SnpCall> calls) {
  for (const SnpCall& c : calls) {
    os << ">SNP_" << c.id << "|sample1|" << c.b1 << "/" << c.b2 << "|support=" << c.support1
       << "\n"
       << c.left1 << c.right1 << "\n";
    os << ">SNP_" << c.id << "|sample2|" << c.b2 << "/" << c.b1 << "|support=" << c.support2
       << "\n"
       << c.left2 << c.right2 << "\n";
  }
}

}  // namespace ebwtpc
