#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ebwtpc {

enum class Sample : std::uint8_t { Sample1 = 0, Sample2 = 1 };
enum class StrandOrigin : std::uint8_t { Given = 0, ReverseComplementAdded = 1 };

inline bool is_acgt(char c) { return c == 'A' || c == 'C' || c == 'G' || c == 'T'; }

// 0..3 for A,C,G,T; -1 otherwise.
inline int base_index(char c) {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    default: return -1;
  }
}

inline char index_base(int i) { return "ACGT"[i]; }

char complement(char c);  // throws std::invalid_argument on non-ACGT

/// One DNA read. `id` is the read's rank within its collection (0-based).
struct Read {
  std::size_t id = 0;
  std::string bases;
  Sample sample = Sample::Sample1;
  StrandOrigin strand_origin = StrandOrigin::Given;

  bool operator==(const Read&) const = default;
};

/// An ordered collection of reads; the order defines end-marker ranks.
struct ReadCollection {
  std::vector<Read> reads;
  // Rank of the first Sample2 read; == reads.size() when there is none.
  std::size_t sample_boundary = 0;

  std::size_t size() const { return reads.size(); }
  bool empty() const { return reads.empty(); }

  // Sum of read lengths, end-markers excluded.
  std::uint64_t total_length() const;

  // Mean read length (0 for an empty collection).
  double mean_read_length() const;

  Sample sample_of(std::size_t rank) const {
    return rank < sample_boundary ? Sample::Sample1 : Sample::Sample2;
  }

  void push_back(std::string bases, Sample s, StrandOrigin o = StrandOrigin::Given);

  // Re-derives sample_boundary from read labels and checks ordering
  // (all Sample1 reads must precede all Sample2 reads).
  void finalize();
};

std::string reverse_complement(std::string_view s);

// Doubles the collection: [S1, S1^RC, S2, S2^RC]. Sample labels are kept,
// so sample membership stays decidable from the read rank alone.
ReadCollection augment_with_rc(const ReadCollection& c);

struct FastaLoadReport {
  std::size_t records = 0;
  std::size_t skipped_non_acgt = 0;  // reads dropped because of N or other symbols
};

// Loads a FASTA file; lowercase is normalized, reads with non-ACGT symbols
// are dropped and counted in the report. Throws std::runtime_error with a
// line number on malformed input.
ReadCollection load_fasta(const std::string& path, Sample sample,
                          FastaLoadReport* report = nullptr);

// Same, from a stream (`name` only labels error messages).
ReadCollection load_fasta(std::istream& in, Sample sample, const std::string& name,
                          FastaLoadReport* report = nullptr);

// Writes one record per read, ">r<rank>" headers, single-line sequences.
void write_fasta(std::ostream& out, const ReadCollection& c);
void write_fasta(const std::string& path, const ReadCollection& c);

// True iff both collections hold the same bases in the same order.
bool same_reads(const ReadCollection& a, const ReadCollection& b);

}  // namespace ebwtpc
