#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <set>

#include "ebwtpc/clustering.hpp"
#include "ebwtpc/index.hpp"
#include "ebwtpc/simulate.hpp"
#include "support/testutil.hpp"

using namespace ebwtpc;

TEST_CASE("find_clusters: run rule and interior-minimum split") {
  // Maximal runs of lcp >= tau yield [runStart-1, runEnd].
  std::vector<std::uint32_t> lcp1 = {0, 5, 5, 1, 5, 5};
  auto c1 = find_clusters(lcp1, 2);
  REQUIRE(c1.size() == 2);
  CHECK(c1[0].a == 0);
  CHECK(c1[0].b == 2);
  CHECK(c1[1].a == 3);
  CHECK(c1[1].b == 5);
  CHECK(c1[0].max_lcp == 5);
  CHECK(c1[0].p == 2);  // rightmost maximum

  // Interior strict local minimum splits the run.
  std::vector<std::uint32_t> lcp2 = {0, 5, 2, 5};
  auto c2 = find_clusters(lcp2, 2);
  REQUIRE(c2.size() == 2);
  CHECK(c2[0].a == 0);
  CHECK(c2[0].b == 1);
  CHECK(c2[1].a == 2);
  CHECK(c2[1].b == 3);

  // Plateau minima split once, at the leftmost index.
  std::vector<std::uint32_t> lcp3 = {0, 9, 3, 3, 9};
  auto c3 = find_clusters(lcp3, 2);
  REQUIRE(c3.size() == 2);
  CHECK(c3[0].b == 1);
  CHECK(c3[1].a == 2);

  CHECK(find_clusters(std::vector<std::uint32_t>(16, 0), 2).empty());
  CHECK_THROWS_AS(find_clusters(lcp1, 0), std::invalid_argument);
}

TEST_CASE("find_clusters: emitted clusters are disjoint, sorted, interior >= tau") {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    std::size_t n = 2 + rng.below(400);
    std::vector<std::uint32_t> lcp(n, 0);
    for (std::size_t i = 1; i < n; ++i) lcp[i] = static_cast<std::uint32_t>(rng.below(8));
    std::uint32_t tau = 1 + static_cast<std::uint32_t>(rng.below(6));
    std::uint64_t min_size = 2 + rng.below(3);
    auto clusters = find_clusters(lcp, tau, min_size);
    std::uint64_t prev_end = 0;
    bool first = true;
    for (const Cluster& c : clusters) {
      CHECK(c.size() >= min_size);
      if (!first) CHECK(c.a > prev_end);
      first = false;
      prev_end = c.b;
      CHECK(c.b < n);
      std::uint32_t maxl = 0;
      for (std::uint64_t i = c.a + 1; i <= c.b; ++i) {
        CHECK(lcp[i] >= tau);
        maxl = std::max(maxl, lcp[i]);
      }
      CHECK(c.max_lcp == maxl);
      CHECK(lcp[c.p] == maxl);
      for (std::uint64_t i = c.p + 1; i <= c.b; ++i) CHECK(lcp[i] < maxl);  // rightmost max
    }
  }
}

TEST_CASE("verify_unimodal") {
  // lcp segment [x, 3, 4, 4, 2] with the peak at the rightmost 4.
  std::vector<std::uint32_t> lcp = {0, 3, 4, 4, 2};
  Cluster good{0, 4, 3, 4};
  CHECK(verify_unimodal(lcp, good));

  // (3, 1, 4) admits no valid peak.
  std::vector<std::uint32_t> bad = {0, 3, 1, 4};
  for (std::uint64_t p = 1; p <= 3; ++p) {
    Cluster c{0, 3, p, bad[p]};
    CHECK_FALSE(verify_unimodal(bad, c));
  }

  Cluster single{2, 2, 2, 0};
  CHECK(verify_unimodal(lcp, single));
  CHECK_THROWS_AS(verify_unimodal(lcp, Cluster{0, 9, 1, 0}), std::out_of_range);
}

TEST_CASE("find_clusters emissions pass verify_unimodal when shaped, split otherwise") {
  // A concatenation of two unimodal clusters has a strict interior minimum,
  // so the scanner separates them and each piece is unimodal again.
  std::vector<std::uint32_t> lcp = {0, 4, 5, 6, 5, 3, 4, 7, 7, 2};
  auto clusters = find_clusters(lcp, 3);
  REQUIRE(clusters.size() == 2);
  for (const Cluster& c : clusters) CHECK(verify_unimodal(lcp, c));
}

TEST_CASE("cluster file round trip, empty file, truncation") {
  testutil::TempDir dir("clusters");
  Rng rng(3);
  std::vector<Cluster> clusters;
  std::uint64_t pos = 0;
  for (int i = 0; i < 100000; ++i) {
    std::uint64_t a = pos + rng.below(5);
    std::uint64_t b = a + 1 + rng.below(40);
    std::uint64_t p = a + 1 + rng.below(b - a);
    clusters.push_back(Cluster{a, b, p, static_cast<std::uint32_t>(rng.below(100))});
    pos = b + 1;
  }
  write_clusters(dir.file("c.bin"), clusters);
  CHECK(read_clusters(dir.file("c.bin")) == clusters);

  write_clusters(dir.file("empty.bin"), {});
  CHECK(read_clusters(dir.file("empty.bin")).empty());

  // Truncated payload -> integrity error.
  std::filesystem::resize_file(dir.file("c.bin"),
                               std::filesystem::file_size(dir.file("c.bin")) - 9);
  CHECK_THROWS_AS(read_clusters(dir.file("c.bin")), std::runtime_error);
  CHECK_THROWS_AS(read_clusters(dir.file("missing.bin")), std::runtime_error);
}

TEST_CASE("error-free simulation: copies with full context land in one unimodal cluster") {
  // eps = 0, coverage 20x; positions whose context length is below the LCP
  // floor get all their full-context read-copies into exactly one emitted
  // cluster, and that cluster is unimodal.
  const std::size_t n = 20000, r = 100;
  const std::uint32_t tau = 16;
  std::string g = random_genome(n, 909);
  std::vector<ReadOrigin> origins;
  ReadCollection reads = simulate_reads(g, 20 * n / r, r, 0.0, 910, StrandMode::ForwardOnly,
                                        Sample::Sample1, &origins);
  IndexTriplet idx = build_index(reads);
  auto clusters = find_clusters(idx.lcp, tau, 2);
  ContextOracle oracle(g, r);

  std::size_t tested = 0, ok = 0;
  for (std::uint64_t i = 200; i + 200 < n; i += 97) {
    auto ctx = oracle.query(i);
    if (ctx.ambiguous || ctx.k >= tau) continue;
    // Rows of read-copies of G[i] whose suffix keeps >= tau following bases.
    auto [lo, hi] = prefix_range(reads, idx, std::string_view(g).substr(i, tau));
    std::set<std::uint64_t> rows;
    bool full_coverage_ok = true;
    for (std::size_t rd = 0; rd < reads.size(); ++rd) {
      const ReadOrigin& o = origins[rd];
      if (o.pos > i || o.pos + r - 1 < i) continue;
      std::uint32_t j = static_cast<std::uint32_t>(i - o.pos + 1);  // copy position in read
      if (j + tau > r) continue;  // not enough following bases
      bool found = false;
      for (std::uint64_t row = lo; row < hi; ++row) {
        if (idx.gsa[row].read == rd + 1 && idx.gsa[row].offset == j + 1) {
          rows.insert(row);
          found = true;
          break;
        }
      }
      if (!found) full_coverage_ok = false;
    }
    if (rows.size() < 2 || !full_coverage_ok) continue;
    ++tested;
    // All rows inside exactly one emitted cluster.
    const Cluster* home = nullptr;
    for (const Cluster& c : clusters) {
      if (*rows.begin() >= c.a && *rows.begin() <= c.b) {
        home = &c;
        break;
      }
    }
    if (!home) continue;
    bool all_in = true;
    for (std::uint64_t row : rows) all_in = all_in && row >= home->a && row <= home->b;
    if (all_in && verify_unimodal(idx.lcp, *home)) ++ok;
  }
  REQUIRE(tested >= 50);
  CHECK(static_cast<double>(ok) >= 0.99 * static_cast<double>(tested));
}
