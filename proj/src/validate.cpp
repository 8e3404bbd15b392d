#include "ebwtpc/validate.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ebwtpc {

std::vector<TruthSnp> to_truth_snps(std::span<const Variant> variants, std::uint64_t k) {
  std::vector<bool> flags = non_isolated_flags(variants, k);
  std::vector<TruthSnp> out;
  out.reserve(variants.size());
  for (std::size_t i = 0; i < variants.size(); ++i)
    out.push_back(TruthSnp{variants[i].pos, variants[i].ref, variants[i].alt, flags[i]});
  return out;
}

namespace {

// First index whose string is >= the prefix, and first index whose string
// does not start with it: a closed rank range per prefix query.
std::pair<std::size_t, std::size_t> prefix_rank_range(const std::vector<std::string>& sorted,
                                                      std::string_view prefix) {
  auto starts_with = [&](const std::string& s) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
  };
  auto lb = std::partition_point(sorted.begin(), sorted.end(), [&](const std::string& s) {
    return s.compare(0, prefix.size(), prefix) < 0;
  });
  auto ub = std::partition_point(lb, sorted.end(),
                                 [&](const std::string& s) { return starts_with(s); });
  return {static_cast<std::size_t>(lb - sorted.begin()),
          static_cast<std::size_t>(ub - sorted.begin())};
}

std::string reversed(std::string_view s) { return std::string(s.rbegin(), s.rend()); }

}  // namespace

TruthGrid build_grid(std::span<const TruthSnp> truth, std::string_view genome, int left_len,
                     int right_len) {
  if (left_len < 2 || right_len < 1) throw std::invalid_argument("build_grid: bad context lengths");
  TruthGrid g;
  g.left_len_ = left_len;
  g.right_len_ = right_len;
  g.truth_.assign(truth.begin(), truth.end());
  g.active_.assign(truth.size(), false);

  const std::uint64_t n = genome.size();
  const std::uint64_t lmin = static_cast<std::uint64_t>(std::max(left_len, right_len + 1));
  const std::uint64_t lw = static_cast<std::uint64_t>(left_len - 1);
  const std::uint64_t rw = static_cast<std::uint64_t>(right_len);

  std::vector<std::pair<std::string, std::size_t>> xtmp, ytmp;
  for (std::size_t id = 0; id < truth.size(); ++id) {
    const TruthSnp& t = truth[id];
    if (t.pos < lmin || t.pos + std::max(rw, lw) > n) {
      ++g.skipped_;
      continue;
    }
    if (genome[static_cast<std::size_t>(t.pos - 1)] != t.ref)
      throw std::runtime_error("build_grid: truth reference base disagrees with the genome");
    g.active_[id] = true;
    std::string left(genome.substr(static_cast<std::size_t>(t.pos - 1 - lw),
                                   static_cast<std::size_t>(lw)));
    std::string right(genome.substr(static_cast<std::size_t>(t.pos), static_cast<std::size_t>(rw)));
    std::string left_r(genome.substr(static_cast<std::size_t>(t.pos - 1 - rw),
                                     static_cast<std::size_t>(rw)));
    std::string right_l(genome.substr(static_cast<std::size_t>(t.pos), static_cast<std::size_t>(lw)));

    // F strand: (right context, reversed left context), payload ref->alt.
    TruthGrid::Point f;
    f.s1 = t.ref;
    f.s2 = t.alt;
    f.snp = static_cast<std::uint32_t>(id);
    xtmp.emplace_back(right, g.points_.size());
    ytmp.emplace_back(reversed(left), g.points_.size());
    g.points_.push_back(f);
    // RC strand: contexts swap sides and complement; so does the variant.
    TruthGrid::Point rc;
    rc.s1 = complement(t.ref);
    rc.s2 = complement(t.alt);
    rc.snp = static_cast<std::uint32_t>(id);
    xtmp.emplace_back(reverse_complement(left_r), g.points_.size());
    ytmp.emplace_back(reversed(reverse_complement(right_l)), g.points_.size());
    g.points_.push_back(rc);
  }

  std::sort(xtmp.begin(), xtmp.end());
  std::sort(ytmp.begin(), ytmp.end());
  g.xs_.resize(xtmp.size());
  g.ys_.resize(ytmp.size());
  for (std::size_t r = 0; r < xtmp.size(); ++r) {
    g.xs_[r] = xtmp[r].first;
    g.points_[xtmp[r].second].x = static_cast<std::uint32_t>(r);
  }
  for (std::size_t r = 0; r < ytmp.size(); ++r) {
    g.ys_[r] = ytmp[r].first;
    g.points_[ytmp[r].second].y = static_cast<std::uint32_t>(r);
  }
  std::sort(g.points_.begin(), g.points_.end(), [](const auto& a, const auto& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  return g;
}

void TruthGrid::query(std::string_view left, std::string_view right, char a, char b,
                      std::vector<std::uint32_t>& out_ids) const {
  // Truth contexts are prefixed by the call's; longer call contexts are
  // truncated to the stored window lengths.
  if (right.size() > static_cast<std::size_t>(right_len_))
    right = right.substr(0, static_cast<std::size_t>(right_len_));
  std::string rev_left = reversed(left);
  if (rev_left.size() > static_cast<std::size_t>(left_len_ - 1))
    rev_left.resize(static_cast<std::size_t>(left_len_ - 1));

  auto [x1, x2] = prefix_rank_range(xs_, right);
  if (x1 == x2) return;
  auto [y1, y2] = prefix_rank_range(ys_, rev_left);
  if (y1 == y2) return;

  auto lb = std::partition_point(points_.begin(), points_.end(),
                                 [&](const Point& p) { return p.x < x1; });
  for (auto it = lb; it != points_.end() && it->x < x2; ++it) {
    if (it->y < y1 || it->y >= y2) continue;
    if ((it->s1 == a && it->s2 == b) || (it->s1 == b && it->s2 == a))
      out_ids.push_back(it->snp);
  }
}

std::vector<CallPair> parse_kissnp2(std::istream& in, const std::string& name) {
  std::vector<CallRecord> records;
  std::string line, seq;
  CallRecord cur;
  bool have = false;
  std::size_t lineno = 0, recno = 0;

  auto fail = [&](const std::string& why) {
    std::ostringstream os;
    os << name << ": record " << recno << " (line " << lineno << "): " << why;
    throw std::runtime_error(os.str());
  };
  auto flush = [&]() {
    if (!have) return;
    if (seq.empty()) fail("record has no sequence");
    cur.seq = seq;
    records.push_back(cur);
    seq.clear();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] != '>') {
      if (!have) fail("sequence before first header");
      seq += line;
      continue;
    }
    flush();
    ++recno;
    have = true;
    // >SNP_<id>|sample<k>|<b>/<b>|support=<n>
    std::vector<std::string> fields;
    std::size_t start = 1;
    for (std::size_t i = 1; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '|') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 4) fail("expected 4 '|'-separated header fields");
    if (fields[0].rfind("SNP_", 0) != 0) fail("header must start with '>SNP_<id>'");
    try {
      cur.id = std::stoull(fields[0].substr(4));
    } catch (...) {
      fail("bad SNP id");
    }
    if (fields[1] == "sample1") {
      cur.sample = 1;
    } else if (fields[1] == "sample2") {
      cur.sample = 2;
    } else {
      fail("expected 'sample1' or 'sample2'");
    }
    if (fields[2].size() != 3 || fields[2][1] != '/') fail("expected '<b>/<b>' allele field");
    cur.own = fields[2][0];
    cur.other = fields[2][2];
    if (fields[3].rfind("support=", 0) != 0) fail("expected 'support=<n>'");
    try {
      cur.support = std::stoull(fields[3].substr(8));
    } catch (...) {
      fail("bad support value");
    }
  }
  flush();

  if (records.size() % 2 != 0) {
    recno = records.size();
    fail("odd number of records; calls come in pairs");
  }
  std::vector<CallPair> pairs;
  pairs.reserve(records.size() / 2);
  for (std::size_t i = 0; i < records.size(); i += 2) {
    if (records[i].id != records[i + 1].id) {
      recno = i + 2;
      fail("consecutive records carry different SNP ids");
    }
    pairs.push_back(CallPair{records[i], records[i + 1]});
  }
  return pairs;
}

std::vector<CallPair> parse_kissnp2_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calls file: " + path);
  return parse_kissnp2(in, path);
}

ValidationReport score_calls(const TruthGrid& grid, std::span<const CallPair> calls) {
  const int L = grid.left_len();
  ValidationReport rep;
  rep.truth_total = grid.truth_size();
  rep.truth_skipped = grid.skipped();
  rep.call_pairs = calls.size();

  std::vector<bool> found(grid.truth_size(), false);
  std::vector<std::uint32_t> ids;

  // One validation unit = a claimed variant with its two (left, s, right)
  // triples; queried in both sample orders, the grid covering both strands.
  auto match_unit = [&](std::string_view l1, char s1, std::string_view r1, std::string_view l2,
                        char s2, std::string_view r2) {
    ids.clear();
    grid.query(l1, r1, s1, s2, ids);
    grid.query(l2, r2, s1, s2, ids);
    if (ids.empty()) {
      ++rep.fp;
      return;
    }
    for (std::uint32_t id : ids) found[id] = true;
  };

  for (const CallPair& pair : calls) {
    const std::string& a = pair.r1.seq;
    const std::string& b = pair.r2.seq;
    if (a.size() < static_cast<std::size_t>(L) || b.size() < static_cast<std::size_t>(L)) {
      std::ostringstream os;
      os << "call pair SNP_" << pair.r1.id << ": sequence shorter than the left window (" << L
         << ")";
      throw std::runtime_error(os.str());
    }
    const std::size_t main_col = static_cast<std::size_t>(L - 1);
    ++rep.call_units;
    match_unit(std::string_view(a).substr(0, main_col), a[main_col],
               std::string_view(a).substr(main_col + 1),
               std::string_view(b).substr(0, main_col), b[main_col],
               std::string_view(b).substr(main_col + 1));

    // Re-scan: any other column where the two sequences differ is an
    // additional claimed SNP.
    const std::size_t upto = std::min(a.size(), b.size());
    for (std::size_t c = 0; c < upto; ++c) {
      if (c == main_col || a[c] == b[c]) continue;
      ++rep.call_units;
      ++rep.derived_units;
      match_unit(std::string_view(a).substr(0, c), a[c], std::string_view(a).substr(c + 1),
                 std::string_view(b).substr(0, c), b[c], std::string_view(b).substr(c + 1));
    }
  }

  std::uint64_t active_truth = 0;
  for (std::size_t id = 0; id < grid.truth_size(); ++id) {
    if (!grid.active(static_cast<std::uint32_t>(id))) continue;
    ++active_truth;
    bool ni = grid.truth(static_cast<std::uint32_t>(id)).non_isolated;
    if (ni) ++rep.non_isolated_total;
    if (found[id]) {
      ++rep.tp;
      if (ni) ++rep.non_isolated_found;
    } else {
      ++rep.fn;
    }
  }
  rep.sensitivity = rep.tp + rep.fn ? static_cast<double>(rep.tp) / static_cast<double>(rep.tp + rep.fn) : 0.0;
  rep.precision = rep.tp + rep.fp ? static_cast<double>(rep.tp) / static_cast<double>(rep.tp + rep.fp) : 0.0;
  (void)active_truth;
  return rep;
}

void write_validation_tsv(std::ostream& os, const ValidationReport& r,
                          std::span<const std::string> header_comments) {
  for (const auto& line : header_comments) os << "# " << line << "\n";
  os << "TP\tFP\tFN\tSEN\tPREC\tnon_isolated_found\tnon_isolated_total\ttruth_total\t"
        "truth_skipped\tcall_pairs\tcall_units\tderived_units\n";
  os << r.tp << "\t" << r.fp << "\t" << r.fn << "\t" << r.sensitivity << "\t" << r.precision
     << "\t" << r.non_isolated_found << "\t" << r.non_isolated_total << "\t" << r.truth_total
     << "\t" << r.truth_skipped << "\t" << r.call_pairs << "\t" << r.call_units << "\t"
     << r.derived_units << "\n";
}

void write_validation_text(std::ostream& os, const ValidationReport& r) {
  os << "truth SNPs:          " << r.truth_total << " (" << r.truth_skipped
     << " skipped: context window out of genome bounds)\n";
  os << "call pairs / units:  " << r.call_pairs << " / " << r.call_units << " ("
     << r.derived_units << " from non-isolated re-scan)\n";
  os << "TP " << r.tp << "  FP " << r.fp << "  FN " << r.fn << "\n";
  os << "sensitivity:         " << r.sensitivity << "\n";
  os << "precision:           " << r.precision << "\n";
  os << "non-isolated found:  " << r.non_isolated_found << "/" << r.non_isolated_total << "\n";
}

}  // namespace ebwtpc
