#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ebwtpc/simulate.hpp"

namespace ebwtpc {

struct TruthSnp {
  std::uint64_t pos = 0;  // 1-based position on the reference genome
  char ref = 0;
  char alt = 0;
  bool non_isolated = false;
};

// Variant list -> truth records with non-isolated flags (nearest neighbor
// within k bases).
std::vector<TruthSnp> to_truth_snps(std::span<const Variant> variants, std::uint64_t k = 31);

/// 2D grid over the truth set: two points per SNP (F and RC strand), whose
/// coordinates are the ranks of the right context and of the reversed left
/// context among all truth contexts (reference-sample side, both strands).
/// Duplicate contexts get consecutive ranks; queries use closed rank ranges.
class TruthGrid {
 public:
  // Appends the ids of truth SNPs whose contexts are prefixed by `right` and
  // (reversed) `left` and whose variant pair equals {a, b} in either order.
  void query(std::string_view left, std::string_view right, char a, char b,
             std::vector<std::uint32_t>& out_ids) const;

  std::size_t truth_size() const { return truth_.size(); }
  std::size_t point_count() const { return points_.size(); }
  std::size_t skipped() const { return skipped_; }
  bool active(std::uint32_t id) const { return active_[id]; }  // false: contexts out of bounds
  const TruthSnp& truth(std::uint32_t id) const { return truth_[id]; }
  int left_len() const { return left_len_; }
  int right_len() const { return right_len_; }

 private:
  friend TruthGrid build_grid(std::span<const TruthSnp>, std::string_view, int, int);

  struct Point {
    std::uint32_t x = 0, y = 0;
    char s1 = 0, s2 = 0;
    std::uint32_t snp = 0;
  };

  std::vector<TruthSnp> truth_;
  std::vector<bool> active_;
  std::vector<std::string> xs_, ys_;  // sorted, duplicates kept
  std::vector<Point> points_;         // sorted by (x, y)
  std::size_t skipped_ = 0;
  int left_len_ = 20, right_len_ = 30;
};

// Contexts are taken from the reference genome; SNPs whose windows leave the
// genome are skipped (counted, excluded from scoring).
TruthGrid build_grid(std::span<const TruthSnp> truth, std::string_view genome, int left_len,
                     int right_len);

struct CallRecord {
  std::uint64_t id = 0;
  int sample = 0;  // 1 or 2
  char own = 0, other = 0;
  std::uint64_t support = 0;
  std::string seq;
};

struct CallPair {
  CallRecord r1, r2;
};

// Parses KisSNP2-style record pairs; throws std::runtime_error identifying
// the offending record on malformed input.
std::vector<CallPair> parse_kissnp2(std::istream& in, const std::string& name);
std::vector<CallPair> parse_kissnp2_file(const std::string& path);

struct ValidationReport {
  std::uint64_t tp = 0, fp = 0, fn = 0;
  double sensitivity = 0.0, precision = 0.0;
  std::uint64_t non_isolated_found = 0, non_isolated_total = 0;
  std::uint64_t truth_total = 0, truth_skipped = 0;
  std::uint64_t call_pairs = 0, call_units = 0, derived_units = 0;
};

// Each call pair is matched in both sample orders and on both strands; the
// differing interior columns of a pair are re-scored as additional candidate
// SNPs. TP counts matched truth SNPs (F/RC strand detections merge), FP
// counts unmatched call units, FN the unmatched truth.
ValidationReport score_calls(const TruthGrid& grid, std::span<const CallPair> calls);

void write_validation_tsv(std::ostream& os, const ValidationReport& r,
                          std::span<const std::string> header_comments = {});
void write_validation_text(std::ostream& os, const ValidationReport& r);

}  // namespace ebwtpc
