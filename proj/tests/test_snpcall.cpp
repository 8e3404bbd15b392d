#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <map>
#include <sstream>

#include "ebwtpc/clustering.hpp"
#include "ebwtpc/index.hpp"
#include "ebwtpc/simulate.hpp"
#include "ebwtpc/snpcall.hpp"
#include "ebwtpc/validate.hpp"
#include "support/testutil.hpp"

using namespace ebwtpc;

namespace {

// Synthetic triplet: one row per entry of `rows` = (ebwt symbol, read rank);
// sample from the boundary, offsets fixed at 5 so every letter row has a
// left context.
IndexTriplet fake_triplet(const std::vector<std::pair<char, std::uint32_t>>& rows,
                          std::uint64_t boundary, std::uint64_t num_reads,
                          std::vector<std::uint32_t> lcp = {}) {
  IndexTriplet idx;
  idx.num_reads = num_reads;
  idx.sample_boundary = boundary;
  for (auto [ch, rank] : rows) {
    idx.ebwt.push_back(ch);
    idx.gsa.push_back(SuffixRef{ch == kEndMarker ? 1u : 5u, rank});
  }
  idx.lcp = lcp.empty() ? std::vector<std::uint32_t>(rows.size(), 20) : std::move(lcp);
  return idx;
}

ReadCollection joint_collection(const Scenario& sc) {
  ReadCollection joint;
  for (const auto& r : sc.sample1.reads) joint.push_back(r.bases, Sample::Sample1);
  for (const auto& r : sc.sample2.reads) joint.push_back(r.bases, Sample::Sample2);
  joint.finalize();
  return augment_with_rc(joint);
}

CallParams params_for(std::size_t genome_len) {
  CallParams p;
  p.genome_length = static_cast<double>(genome_len);
  return p;
}

}  // namespace

TEST_CASE("filter_cluster: tooSmall, tails, and the mode is always accepted") {
  PoissonModel model{52000, 100000, 100, 0.0012, 16, 1};
  double lam = lambda(model);

  Cluster small{10, 11, 11, 20};
  CHECK(filter_cluster(small, {2, 30}, model, 0.05, 4).reason == ClusterRejection::TooSmall);

  Cluster doubled{10, 10 + 2 * static_cast<std::uint64_t>(lam), 11, 20};
  auto fr = filter_cluster(doubled, {40, 40}, model, 0.05, 4);
  CHECK_FALSE(fr.accepted);
  CHECK(fr.reason == ClusterRejection::RightTail);

  Cluster tiny_size{10, 12, 11, 20};
  CHECK(filter_cluster(tiny_size, {30, 30}, model, 0.05, 4).reason ==
        ClusterRejection::LeftTail);

  // size = ceil(lambda) sits inside any 95% band once lambda >= 4.
  for (double target = 4; target <= 100; target += 7) {
    PoissonModel m2 = model;
    m2.m = target * m2.n / ((m2.r - m2.k) * std::pow(1 - m2.epsilon, m2.k));
    double l2 = lambda(m2);
    Cluster at_mode{0, static_cast<std::uint64_t>(std::ceil(l2)) - 1, 1, 20};
    auto r = filter_cluster(at_mode, {100, 100}, m2, 0.05, 1);
    CHECK(r.accepted);
  }
}

TEST_CASE("extract_alleles: plurality per sample, none on agreement") {
  // sample1: A x5, sample2: G x4 -> (A,5),(G,4)
  std::vector<std::pair<char, std::uint32_t>> rows;
  for (int i = 0; i < 5; ++i) rows.push_back({'A', 1});
  for (int i = 0; i < 4; ++i) rows.push_back({'G', 11});
  IndexTriplet idx = fake_triplet(rows, 10, 20);
  Cluster c{0, rows.size() - 1, 1, 20};
  auto al = extract_alleles(idx, c);
  REQUIRE(al.has_value());
  CHECK(al->b1 == 'A');
  CHECK(al->b2 == 'G');
  CHECK(al->support1 == 5);
  CHECK(al->support2 == 4);
  CHECK_FALSE(al->tie1);

  // Both samples majority C -> no variant.
  rows.clear();
  for (int i = 0; i < 5; ++i) rows.push_back({'C', 1});
  for (int i = 0; i < 5; ++i) rows.push_back({'C', 11});
  rows.push_back({'T', 11});
  CHECK_FALSE(extract_alleles(fake_triplet(rows, 10, 20), Cluster{0, rows.size() - 1, 1, 20})
                  .has_value());

  // One stray error: plurality wins.
  rows.clear();
  for (int i = 0; i < 5; ++i) rows.push_back({'A', 1});
  rows.push_back({'C', 2});
  for (int i = 0; i < 4; ++i) rows.push_back({'G', 11});
  auto al2 = extract_alleles(fake_triplet(rows, 10, 20), Cluster{0, rows.size() - 1, 1, 20});
  REQUIRE(al2.has_value());
  CHECK(al2->b1 == 'A');

  // Missing sample -> none; end-markers do not vote.
  rows.clear();
  rows.push_back({'A', 1});
  rows.push_back({kEndMarker, 11});
  CHECK_FALSE(extract_alleles(fake_triplet(rows, 10, 20), Cluster{0, 1, 1, 20}).has_value());

  // Tie flagged, lexicographic winner.
  rows.clear();
  rows.push_back({'G', 1});
  rows.push_back({'C', 1});
  for (int i = 0; i < 3; ++i) rows.push_back({'T', 11});
  auto al3 = extract_alleles(fake_triplet(rows, 10, 20), Cluster{0, rows.size() - 1, 1, 20});
  REQUIRE(al3.has_value());
  CHECK(al3->b1 == 'C');
  CHECK(al3->tie1);
}

TEST_CASE("peak_read: per-sample rightmost LCP maximum; single-sample equals global") {
  //            row:   0    1    2    3    4
  // lcp:              0   17   22   22   18
  std::vector<std::pair<char, std::uint32_t>> rows = {
      {'A', 1}, {'A', 2}, {'A', 11}, {'A', 3}, {'A', 12}};
  IndexTriplet idx = fake_triplet(rows, 10, 20, {0, 17, 22, 22, 18});
  Cluster c{0, 4, 3, 22};

  // Sample1 rows in (a,b] are 1 and 3 with lcp 17 and 22 -> row 3.
  CHECK(peak_read(idx, c, Sample::Sample1) == idx.gsa[3]);
  // Sample2 rows are 2 and 4 with lcp 22 and 18 -> row 2.
  CHECK(peak_read(idx, c, Sample::Sample2) == idx.gsa[2]);

  // Single-sample cluster: equals the cluster's global peak p.
  std::vector<std::pair<char, std::uint32_t>> rows1 = {{'A', 1}, {'A', 2}, {'A', 3}, {'A', 4}};
  IndexTriplet one = fake_triplet(rows1, 10, 20, {0, 9, 12, 12});
  auto clusters = find_clusters(one.lcp, 2);
  REQUIRE(clusters.size() == 1);
  CHECK(peak_read(one, clusters[0], Sample::Sample1) ==
        one.gsa[static_cast<std::size_t>(clusters[0].p)]);
  CHECK_THROWS_AS(peak_read(one, clusters[0], Sample::Sample2), std::invalid_argument);
}

TEST_CASE("peak_read points at the longest error-free right extension") {
  // Noisy forward-strand simulation; within each context range the
  // per-sample peak row must maximize the clean prefix length, checked
  // against the planted error offsets.
  const std::size_t n = 20000, r = 100;
  std::string g = random_genome(n, 1212);
  std::vector<ReadOrigin> origins;
  ReadCollection reads =
      simulate_reads(g, 20 * n / r, r, 0.004, 1213, StrandMode::ForwardOnly, Sample::Sample1,
                     &origins);
  IndexTriplet idx = build_index(reads);
  ContextOracle oracle(g, r);

  auto clean_len = [&](SuffixRef s) -> std::uint32_t {
    const ReadOrigin& o = origins[s.read - 1];
    std::uint32_t len =
        static_cast<std::uint32_t>(reads.reads[s.read - 1].bases.size()) - s.offset + 1;
    for (std::uint32_t e : o.errors)
      if (e >= s.offset) return std::min(len, e - s.offset);
    return len;
  };

  std::size_t tested = 0, best = 0;
  for (std::uint64_t i = r; i + r <= n && tested < 300; i += 61) {
    auto ctx = oracle.query(i);
    if (ctx.ambiguous) continue;
    auto [lo, hi] = prefix_range(reads, idx, std::string_view(g).substr(i, ctx.k));
    if (hi - lo < 3) continue;
    // Condition the check the way the shape statement is conditioned: no
    // noise and distinct leftmost-error letters.
    bool clean = true;
    std::map<std::uint32_t, std::vector<char>> at_offset;
    for (std::uint64_t row = lo; row < hi; ++row) {
      SuffixRef s = idx.gsa[row];
      const ReadOrigin& o = origins[s.read - 1];
      if (s.offset < 2 || o.pos + s.offset - 2 != i) clean = false;
      for (std::uint32_t e : o.errors) {
        if (e < s.offset) continue;
        if (e - s.offset >= ctx.k)
          at_offset[e - s.offset].push_back(reads.reads[s.read - 1].bases[e - 1]);
        break;
      }
    }
    for (auto& [x, letters] : at_offset) {
      std::sort(letters.begin(), letters.end());
      for (std::size_t t = 1; t < letters.size(); ++t)
        if (letters[t] == letters[t - 1]) clean = false;
    }
    if (!clean) continue;
    ++tested;
    Cluster c{lo, hi - 1, lo + 1, 0};
    SuffixRef peak = peak_read(idx, c, Sample::Sample1);
    std::uint32_t peak_clean = clean_len(peak);
    std::uint32_t max_lcp = 0;
    for (std::uint64_t row = lo + 1; row < hi; ++row) max_lcp = std::max(max_lcp, idx.lcp[row]);
    // The peak's clean extension covers the range's LCP maximum, and no two
    // rows can be cleaner than it (they would share a longer prefix).
    CHECK(peak_clean >= max_lcp);
    std::size_t cleaner = 0;
    std::uint32_t max_clean = 0;
    for (std::uint64_t row = lo; row < hi; ++row) {
      std::uint32_t cl = clean_len(idx.gsa[row]);
      max_clean = std::max(max_clean, cl);
      if (cl > peak_clean) ++cleaner;
    }
    CHECK(cleaner <= 1);
    if (peak_clean == max_clean) ++best;
  }
  REQUIRE(tested >= 100);
  // The exact-maximum form is heuristic; it holds in the overwhelming
  // majority of clusters.
  CHECK(static_cast<double>(best) >= 0.9 * static_cast<double>(tested));
}

TEST_CASE("assemble_left_context: agreement, threshold failure, error recovery") {
  ReadCollection reads;
  // Six reads sharing the 8-base window ACGTACGT ending at the SNP column.
  for (int i = 0; i < 6; ++i) reads.push_back("ACGTACGT", Sample::Sample1);
  reads.finalize();
  std::vector<ReadCoord> coords;
  for (std::uint64_t i = 1; i <= 6; ++i) coords.push_back(ReadCoord{i, 8});
  auto w = assemble_left_context(reads, coords, 8, 0.6);
  REQUIRE(w.has_value());
  CHECK(*w == "ACGTACGT");

  // 50/50 split under a 0.6 floor -> none.
  ReadCollection split;
  split.push_back("AAAA", Sample::Sample1);
  split.push_back("ATAA", Sample::Sample1);
  split.finalize();
  std::vector<ReadCoord> sc = {{1, 4}, {2, 4}};
  CHECK_FALSE(assemble_left_context(split, sc, 4, 0.6).has_value());
  CHECK(assemble_left_context(split, sc, 4, 0.5).has_value());

  // One stray error per read at distinct columns: consensus recovers.
  ReadCollection noisy;
  noisy.push_back("TCGTACGT", Sample::Sample1);
  noisy.push_back("AGGTACGT", Sample::Sample1);
  noisy.push_back("ACTTACGT", Sample::Sample1);
  noisy.push_back("ACGAACGT", Sample::Sample1);
  noisy.push_back("ACGTCCGT", Sample::Sample1);
  noisy.push_back("ACGTAAGT", Sample::Sample1);
  noisy.finalize();
  std::vector<ReadCoord> nc;
  for (std::uint64_t i = 1; i <= 6; ++i) nc.push_back(ReadCoord{i, 8});
  auto wn = assemble_left_context(noisy, nc, 8, 0.6);
  REQUIRE(wn.has_value());
  CHECK(*wn == "ACGTACGT");

  // Shorter reads drop out of deep columns instead of blocking consensus.
  ReadCollection shorty;
  shorty.push_back("GTACGT", Sample::Sample1);
  shorty.push_back("ACGTACGT", Sample::Sample1);
  shorty.finalize();
  std::vector<ReadCoord> pc = {{1, 6}, {2, 8}};
  auto wp = assemble_left_context(shorty, pc, 8, 0.6);
  REQUIRE(wp.has_value());
  CHECK(*wp == "ACGTACGT");
}

TEST_CASE("call_snps: isolated planted SNP found once per strand at eps=0") {
  ScenarioParams sp;
  sp.n = 3000;
  sp.coverage1 = 20;
  sp.coverage2 = 20;
  sp.read_len = 100;
  sp.epsilon = 0.0;
  sp.plant.count = 1;
  sp.plant.non_isolated_fraction = 0.0;
  sp.seed = 4242;
  Scenario sc = simulate_scenario(sp);
  REQUIRE(sc.truth.variants.size() == 1);

  ReadCollection joint = joint_collection(sc);
  IndexTriplet idx = build_index(joint);
  auto clusters = find_clusters(idx.lcp, 16, 4);
  CollectionReadSource source(joint);
  CallResult res = call_snps(idx, clusters, source, params_for(sp.n));

  REQUIRE(res.calls.size() == 2);  // right and left breakpoint of the same SNP
  const Variant& v = sc.truth.variants[0];
  bool fwd = false, rc = false;
  for (const SnpCall& call : res.calls) {
    CHECK(call.support1 >= 4);
    CHECK(call.support2 >= 4);
    CHECK(call.extras.empty());
    if (call.b1 == v.ref && call.b2 == v.alt) fwd = true;
    if (call.b1 == complement(v.ref) && call.b2 == complement(v.alt)) rc = true;
  }
  CHECK(fwd);
  CHECK(rc);

  // The validator merges the two strand detections into one TP.
  std::ostringstream fa;
  write_kissnp2(fa, res.calls);
  std::istringstream fain(fa.str());
  auto pairs = parse_kissnp2(fain, "mem");
  TruthGrid grid = build_grid(to_truth_snps(sc.truth.variants), sc.truth.genome, 20, 30);
  ValidationReport rep = score_calls(grid, pairs);
  CHECK(rep.tp == 1);
  CHECK(rep.fp == 0);
  CHECK(rep.fn == 0);
}

TEST_CASE("call_snps: zero planted variants yield zero calls") {
  ScenarioParams sp;
  sp.n = 2500;
  sp.coverage1 = 18;
  sp.coverage2 = 18;
  sp.epsilon = 0.0012;
  sp.plant.count = 0;
  sp.seed = 999;
  Scenario sc = simulate_scenario(sp);
  ReadCollection joint = joint_collection(sc);
  IndexTriplet idx = build_index(joint);
  auto clusters = find_clusters(idx.lcp, 16, 4);
  CollectionReadSource source(joint);
  for (double alpha : {0.01, 0.05, 0.2}) {
    CallParams p = params_for(sp.n);
    p.alpha = alpha;
    CHECK(call_snps(idx, clusters, source, p).calls.empty());
  }
}

TEST_CASE("call_snps: adjacent pair inside the left window is captured") {
  ScenarioParams sp;
  sp.n = 4000;
  sp.coverage1 = 25;
  sp.coverage2 = 25;
  sp.epsilon = 0.0;
  sp.plant.count = 2;
  sp.plant.non_isolated_fraction = 1.0;
  sp.plant.pair_min_gap = 7;
  sp.plant.pair_max_gap = 7;
  sp.seed = 31337;
  Scenario sc = simulate_scenario(sp);
  REQUIRE(sc.truth.variants.size() == 2);
  REQUIRE(sc.truth.variants[1].pos - sc.truth.variants[0].pos == 7);

  ReadCollection joint = joint_collection(sc);
  IndexTriplet idx = build_index(joint);
  auto clusters = find_clusters(idx.lcp, 16, 4);
  CollectionReadSource source(joint);
  CallResult res = call_snps(idx, clusters, source, params_for(sp.n));
  REQUIRE_FALSE(res.calls.empty());
  bool saw_extra = false;
  for (const SnpCall& c : res.calls)
    if (!c.extras.empty()) saw_extra = true;
  CHECK(saw_extra);

  std::ostringstream fa;
  write_kissnp2(fa, res.calls);
  std::istringstream fain(fa.str());
  TruthGrid grid = build_grid(to_truth_snps(sc.truth.variants), sc.truth.genome, 20, 30);
  ValidationReport rep = score_calls(grid, parse_kissnp2(fain, "mem"));
  CHECK(rep.tp == 2);  // both members of the pair recovered
  CHECK(rep.fn == 0);
}

TEST_CASE("call_snps: deterministic across thread counts; spill path matches") {
  ScenarioParams sp;
  sp.n = 6000;
  sp.coverage1 = 22;
  sp.coverage2 = 20;
  sp.epsilon = 0.0012;
  sp.plant.count = 8;
  sp.seed = 777;
  Scenario sc = simulate_scenario(sp);
  ReadCollection joint = joint_collection(sc);
  IndexTriplet idx = build_index(joint);
  auto clusters = find_clusters(idx.lcp, 16, 4);

  auto render = [&](int threads, std::uint64_t cap) {
    CollectionReadSource source(joint);
    CallParams p = params_for(sp.n);
    p.threads = threads;
    p.buffer_coord_cap = cap;
    CallResult res = call_snps(idx, clusters, source, p);
    std::ostringstream os;
    write_kissnp2(os, res.calls);
    return std::make_pair(os.str(), res.counters);
  };
  auto [base, counters1] = render(1, 1ull << 24);
  auto [threaded, counters4] = render(4, 1ull << 24);
  auto [spilled, counters_spill] = render(1, 64);
  CHECK(base == threaded);
  CHECK(base == spilled);
  CHECK(counters_spill.spilled_chunks >= 1);
  CHECK(counters1.spilled_chunks == 0);
  CHECK_FALSE(base.empty());

  // Output order follows the cluster order whatever the thread count.
  CollectionReadSource source(joint);
  CallParams p = params_for(sp.n);
  p.threads = 4;
  CallResult res = call_snps(idx, clusters, source, p);
  for (std::size_t i = 1; i < res.calls.size(); ++i)
    CHECK(res.calls[i - 1].cluster_index < res.calls[i].cluster_index);
}

TEST_CASE("call_snps accounting: one reads pass, buffer proportional to candidates") {
  ScenarioParams sp;
  sp.n = 5000;
  sp.coverage1 = 20;
  sp.coverage2 = 20;
  sp.epsilon = 0.0012;
  sp.plant.count = 5;
  sp.seed = 555;
  Scenario sc = simulate_scenario(sp);
  ReadCollection joint = joint_collection(sc);
  IndexTriplet idx = build_index(joint);
  auto clusters = find_clusters(idx.lcp, 16, 4);
  CollectionReadSource source(joint);
  CallResult res = call_snps(idx, clusters, source, params_for(sp.n));
  CHECK(source.passes() == 1);
  const CallCounters& c = res.counters;
  CHECK(c.clusters_seen == clusters.size());
  // Buffered coordinates stay proportional to candidates x band width, never
  // to the whole eBWT.
  CHECK(c.buffered_coords <=
        c.candidates * (static_cast<std::uint64_t>(res.band_hi) + 2));
  CHECK(c.buffered_coords < idx.size() / 4);
  for (const SnpCall& call : res.calls) {
    CHECK(call.support1 >= 4);
    CHECK(call.support2 >= 4);
  }
}

TEST_CASE("call_snps parameter validation") {
  IndexTriplet idx = fake_triplet({{'A', 1}}, 1, 2);
  ReadCollection empty;
  CollectionReadSource src(empty);
  CallParams p;  // genome_length left unset
  CHECK_THROWS_AS(call_snps(idx, {}, src, p), std::invalid_argument);
}
