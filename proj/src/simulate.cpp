#include "ebwtpc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ebwtpc {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below(0)");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

std::string random_genome(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::string g(n, 'A');
  for (std::size_t i = 0; i < n; ++i) g[i] = rng.base();
  return g;
}

ReadCollection simulate_reads(std::string_view g, std::size_t m, std::size_t r, double epsilon,
                              std::uint64_t seed, StrandMode strand, Sample sample,
                              std::vector<ReadOrigin>* origins) {
  if (r == 0 || r > g.size())
    throw std::invalid_argument("simulate_reads: read length must be in [1, n]");
  if (!(epsilon >= 0.0) || !(epsilon < 1.0))
    throw std::invalid_argument("simulate_reads: epsilon must be in [0,1)");
  Rng rng(seed);
  ReadCollection out;
  out.reads.reserve(m);
  for (std::size_t t = 0; t < m; ++t) {
    std::uint64_t pos = 1 + rng.below(g.size() - r + 1);
    bool rc = strand == StrandMode::Both && rng.below(2) == 1;
    std::string bases(g.substr(static_cast<std::size_t>(pos - 1), r));
    if (rc) bases = reverse_complement(bases);
    ReadOrigin origin;
    origin.pos = pos;
    origin.rc = rc;
    origin.sample = sample;
    for (std::size_t i = 0; i < r; ++i) {
      if (rng.uniform() < epsilon) {
        int cur = base_index(bases[i]);
        int alt = static_cast<int>(rng.below(3));
        if (alt >= cur) ++alt;  // uniform over the 3 other bases
        bases[i] = index_base(alt);
        origin.errors.push_back(static_cast<std::uint32_t>(i + 1));
      }
    }
    out.push_back(std::move(bases), sample);
    if (origins) origins->push_back(std::move(origin));
  }
  out.finalize();
  return out;
}

std::string mutate_genome(std::string_view g, std::span<const Variant> variants) {
  std::string out(g);
  std::uint64_t prev = 0;
  for (const Variant& v : variants) {
    if (v.pos == 0 || v.pos > g.size())
      throw std::invalid_argument("mutate_genome: variant position out of range");
    if (v.pos <= prev)
      throw std::invalid_argument("mutate_genome: overlapping or unsorted variants");
    if (g[static_cast<std::size_t>(v.pos - 1)] != v.ref)
      throw std::invalid_argument("mutate_genome: reference base mismatch");
    if (v.alt == v.ref || base_index(v.alt) < 0)
      throw std::invalid_argument("mutate_genome: bad alternate base");
    out[static_cast<std::size_t>(v.pos - 1)] = v.alt;
    prev = v.pos;
  }
  return out;
}

std::vector<Variant> plant_variants(std::string_view g, const PlantSpec& spec,
                                    std::uint64_t seed) {
  if (spec.count == 0) return {};
  if (spec.pair_min_gap < 1 || spec.pair_max_gap < spec.pair_min_gap)
    throw std::invalid_argument("plant_variants: bad pair gap range");
  Rng rng(seed);
  const std::uint64_t n = g.size();
  if (n < 2 * spec.margin + 2) throw std::invalid_argument("plant_variants: genome too short");
  const std::uint64_t lo = spec.margin + 1, hi = n - spec.margin;

  // Spread groups evenly with jitter; a group is a single SNP or a close pair.
  double groups_est = static_cast<double>(spec.count) / (1.0 + spec.non_isolated_fraction);
  std::uint64_t spacing = static_cast<std::uint64_t>(
      std::max<double>(static_cast<double>(spec.isolated_gap),
                       static_cast<double>(hi - lo) / (groups_est + 1.0)));

  std::vector<Variant> out;
  std::uint64_t pos = lo + rng.below(std::max<std::uint64_t>(1, spacing / 2));
  auto plant_at = [&](std::uint64_t p) {
    char ref = g[static_cast<std::size_t>(p - 1)];
    int cur = base_index(ref);
    if (cur < 0) throw std::invalid_argument("plant_variants: non-ACGT genome symbol");
    int alt = static_cast<int>(rng.below(3));
    if (alt >= cur) ++alt;
    out.push_back(Variant{p, ref, index_base(alt)});
  };
  while (out.size() < spec.count && pos <= hi) {
    bool pair = out.size() + 1 < spec.count && rng.uniform() < spec.non_isolated_fraction;
    plant_at(pos);
    if (pair) {
      std::uint64_t gap =
          spec.pair_min_gap + rng.below(spec.pair_max_gap - spec.pair_min_gap + 1);
      if (pos + gap <= hi) plant_at(pos + gap);
      pos += gap;
    }
    std::uint64_t jitter = rng.below(std::max<std::uint64_t>(1, spacing / 4));
    pos += std::max<std::uint64_t>(spec.isolated_gap, spacing / 2) + jitter;
  }
  if (out.size() < spec.count)
    throw std::invalid_argument("plant_variants: genome too short for requested variant count");
  return out;
}

std::vector<bool> non_isolated_flags(std::span<const Variant> variants, std::uint64_t k) {
  std::vector<bool> flags(variants.size(), false);
  for (std::size_t i = 0; i + 1 < variants.size(); ++i) {
    if (variants[i + 1].pos - variants[i].pos <= k) {
      flags[i] = true;
      flags[i + 1] = true;
    }
  }
  return flags;
}

Scenario simulate_scenario(const ScenarioParams& params) {
  Scenario sc;
  sc.truth.genome = random_genome(params.n, params.seed);
  sc.truth.variants = plant_variants(sc.truth.genome, params.plant, params.seed + 1);
  sc.truth.mutated = mutate_genome(sc.truth.genome, sc.truth.variants);
  auto reads_for = [&](double cov) {
    return static_cast<std::size_t>(
        std::llround(cov * static_cast<double>(params.n) / static_cast<double>(params.read_len)));
  };
  sc.sample1 = simulate_reads(sc.truth.genome, reads_for(params.coverage1), params.read_len,
                              params.epsilon, params.seed + 2, params.strand, Sample::Sample1,
                              &sc.truth.origins);
  sc.sample2 = simulate_reads(sc.truth.mutated, reads_for(params.coverage2), params.read_len,
                              params.epsilon, params.seed + 3, params.strand, Sample::Sample2,
                              &sc.truth.origins);
  return sc;
}

ContextOracle::ContextOracle(std::string_view g, std::size_t r) : n_(g.size()), r_(r) {
  if (n_ == 0) throw std::invalid_argument("ContextOracle: empty genome");
  if (r_ < 2) throw std::invalid_argument("ContextOracle: read length must be >= 2");
  holder_.push_back(std::string(g), Sample::Sample1);
  holder_.finalize();
  idx_ = build_index(holder_);
  row_of_.assign(n_ + 2, 0);
  for (std::size_t row = 0; row < idx_.size(); ++row)
    row_of_[idx_.gsa[row].offset] = static_cast<std::uint32_t>(row);
}

ContextOracle::Result ContextOracle::query(std::uint64_t i) const {
  if (i < 1 || i >= n_) throw std::out_of_range("ContextOracle::query: need 1 <= i <= n-1");
  const std::uint64_t s = i + 1;               // context start
  const std::uint64_t avail = n_ - s + 1;      // symbols to the genome end
  const std::size_t row = row_of_[static_cast<std::size_t>(s)];
  // Shortest prefix of the suffix at s occurring once in G: one more than the
  // larger LCP with its sorted neighbors.
  std::uint32_t nb = idx_.lcp[row];
  if (row + 1 < idx_.size()) nb = std::max(nb, idx_.lcp[row + 1]);
  const std::uint64_t unique_len = static_cast<std::uint64_t>(nb) + 1;

  Result res;
  if (unique_len <= avail && unique_len <= r_ - 1) {
    res.k = static_cast<std::uint32_t>(unique_len);
    res.ambiguous = false;
    res.multiplicity = 1;
    return res;
  }
  res.k = static_cast<std::uint32_t>(r_ - 1);
  res.ambiguous = true;
  const std::uint64_t ctx_len = std::min<std::uint64_t>(r_ - 1, avail);
  std::string_view g(holder_.reads[0].bases);
  auto [lo, hi] = prefix_range(holder_, idx_,
                               g.substr(static_cast<std::size_t>(s - 1),
                                        static_cast<std::size_t>(ctx_len)));
  res.multiplicity = hi - lo;
  return res;
}

void write_truth_tsv(const std::string& path, std::span<const Variant> variants,
                     std::span<const std::string> header_comments) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& line : header_comments) os << "# " << line << "\n";
  os << "# pos\tref\talt\n";
  for (const Variant& v : variants) os << v.pos << "\t" << v.ref << "\t" << v.alt << "\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<Variant> load_truth_tsv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<Variant> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Variant v;
    std::string ref, alt;
    if (!(ls >> v.pos >> ref >> alt) || ref.size() != 1 || alt.size() != 1) {
      std::ostringstream os;
      os << path << ": line " << lineno << ": expected 'pos ref alt'";
      throw std::runtime_error(os.str());
    }
    v.ref = ref[0];
    v.alt = alt[0];
    out.push_back(v);
  }
  return out;
}

void write_origins_tsv(const std::string& path, std::span<const ReadOrigin> origins,
                       std::span<const std::string> header_comments) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& line : header_comments) os << "# " << line << "\n";
  os << "# read\tsample\tpos\tstrand\terrors\n";
  for (std::size_t i = 0; i < origins.size(); ++i) {
    const ReadOrigin& o = origins[i];
    os << i << "\t" << (o.sample == Sample::Sample1 ? 1 : 2) << "\t" << o.pos << "\t"
       << (o.rc ? "RC" : "F") << "\t";
    if (o.errors.empty()) {
      os << "-";
    } else {
      for (std::size_t e = 0; e < o.errors.size(); ++e) os << (e ? "," : "") << o.errors[e];
    }
    os << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_genome_fasta(const std::string& path, std::string_view name, std::string_view g) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << ">" << name << "\n";
  for (std::size_t i = 0; i < g.size(); i += 80) os << g.substr(i, 80) << "\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::string load_genome_fasta(const std::string& path) {
  FastaLoadReport report;
  ReadCollection c = load_fasta(path, Sample::Sample1, &report);
  if (c.size() != 1)
    throw std::runtime_error(path + ": expected exactly one clean genome record");
  return c.reads[0].bases;
}

}  // namespace ebwtpc
