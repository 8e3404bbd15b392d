#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ebwtpc/index.hpp"
#include "ebwtpc/sequences.hpp"

namespace ebwtpc {

/// Deterministic RNG wrapper. mt19937_64 output is standardized, and the
/// derived draws below avoid std::uniform_*_distribution, whose algorithm is
/// implementation-defined; identical seeds give bit-identical streams on any
/// platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  char base() { return index_base(static_cast<int>(below(4))); }

 private:
  std::mt19937_64 eng_;
};

std::string random_genome(std::size_t n, std::uint64_t seed);

/// A planted substitution: genome position (1-based), reference and
/// alternate base.
struct Variant {
  std::uint64_t pos = 0;
  char ref = 'A';
  char alt = 'C';

  bool operator==(const Variant&) const = default;
};

/// Where a read came from: 1-based start of its genome window, strand, the
/// sample it belongs to, and the planted error offsets (1-based positions in
/// the read as stored).
struct ReadOrigin {
  std::uint64_t pos = 0;
  bool rc = false;
  Sample sample = Sample::Sample1;
  std::vector<std::uint32_t> errors;
};

struct GroundTruth {
  std::string genome;   // reference (sample 1 side)
  std::string mutated;  // sample 2 side
  std::vector<Variant> variants;
  std::vector<ReadOrigin> origins;  // sample 1 reads first, then sample 2
};

enum class StrandMode { Both, ForwardOnly };

// m uniform length-r windows of g (positions in [1, n-r+1]), i.i.d. per-base
// substitution at rate epsilon to one of the 3 other bases. Throws when r > n.
ReadCollection simulate_reads(std::string_view g, std::size_t m, std::size_t r, double epsilon,
                              std::uint64_t seed, StrandMode strand, Sample sample,
                              std::vector<ReadOrigin>* origins = nullptr);

// Applies an explicit variant list; positions must be strictly increasing,
// refs must match, alts must differ (overlapping/duplicate variants rejected).
std::string mutate_genome(std::string_view g, std::span<const Variant> variants);

struct PlantSpec {
  std::size_t count = 0;
  double non_isolated_fraction = 0.3;  // fraction of variants placed in close pairs
  std::uint64_t pair_min_gap = 2;
  std::uint64_t pair_max_gap = 30;
  std::uint64_t isolated_gap = 62;  // minimum distance between groups
  std::uint64_t margin = 40;        // keep full context windows inside the genome
};

std::vector<Variant> plant_variants(std::string_view g, const PlantSpec& spec, std::uint64_t seed);

// Variants whose nearest neighbor is within k bases.
std::vector<bool> non_isolated_flags(std::span<const Variant> variants, std::uint64_t k = 31);

struct ScenarioParams {
  std::size_t n = 100000;
  double coverage1 = 30.0;
  double coverage2 = 22.0;
  std::size_t read_len = 100;
  double epsilon = 0.0012;
  PlantSpec plant;
  std::uint64_t seed = 42;
  StrandMode strand = StrandMode::Both;
};

struct Scenario {
  GroundTruth truth;
  ReadCollection sample1;
  ReadCollection sample2;
};

// Reference genome, mutated copy, and a read set per sample.
Scenario simulate_scenario(const ScenarioParams& params);

/// Exact shortest-unique-context queries over a genome, backed by the genome
/// suffix array (built once).
class ContextOracle {
 public:
  ContextOracle(std::string_view g, std::size_t r);

  struct Result {
    std::uint32_t k = 0;
    bool ambiguous = false;
    std::uint64_t multiplicity = 1;  // t: positions sharing the context when ambiguous
  };

  // i is a 1-based genome position, 1 <= i <= n-1: smallest k < r with
  // G[i+1, i+k] occurring once in G; ambiguous (k = r-1) when none exists.
  Result query(std::uint64_t i) const;

  std::size_t genome_length() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::size_t r_ = 0;
  ReadCollection holder_;
  IndexTriplet idx_;
  std::vector<std::uint32_t> row_of_;  // suffix start (1-based) -> GSA row
};

// Truth TSV: "pos\tref\talt" rows, '#' comments ignored.
void write_truth_tsv(const std::string& path, std::span<const Variant> variants,
                     std::span<const std::string> header_comments = {});
std::vector<Variant> load_truth_tsv(const std::string& path);

// Origins TSV: "read\tsample\tpos\tstrand\terrors" with errors comma-joined
// ('-' when none).
void write_origins_tsv(const std::string& path, std::span<const ReadOrigin> origins,
                       std::span<const std::string> header_comments = {});

// Single-record FASTA helpers for genomes.
void write_genome_fasta(const std::string& path, std::string_view name, std::string_view g);
std::string load_genome_fasta(const std::string& path);

}  // namespace ebwtpc
