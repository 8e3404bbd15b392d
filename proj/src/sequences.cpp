#include "ebwtpc/sequences.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ebwtpc {

char complement(char c) {
  switch (c) {
    case 'A': return 'T';
    case 'T': return 'A';
    case 'C': return 'G';
    case 'G': return 'C';
    default:
      throw std::invalid_argument(std::string("complement: symbol outside {A,C,G,T}: '") + c + "'");
  }
}

std::uint64_t ReadCollection::total_length() const {
  std::uint64_t p = 0;
  for (const auto& r : reads) p += r.bases.size();
  return p;
}

double ReadCollection::mean_read_length() const {
  if (reads.empty()) return 0.0;
  return static_cast<double>(total_length()) / static_cast<double>(reads.size());
}

void ReadCollection::push_back(std::string bases, Sample s, StrandOrigin o) {
  Read r;
  r.id = reads.size();
  r.bases = std::move(bases);
  r.sample = s;
  r.strand_origin = o;
  reads.push_back(std::move(r));
}

void ReadCollection::finalize() {
  sample_boundary = reads.size();
  bool seen2 = false;
  for (std::size_t i = 0; i < reads.size(); ++i) {
    reads[i].id = i;
    if (reads[i].sample == Sample::Sample2) {
      if (!seen2) {
        seen2 = true;
        sample_boundary = i;
      }
    } else if (seen2) {
      throw std::logic_error("ReadCollection: Sample1 read after Sample2 block");
    }
  }
}

std::string reverse_complement(std::string_view s) {
  std::string out(s.size(), '\0');
  for (std::size_t i = 0; i < s.size(); ++i)
    out[s.size() - 1 - i] = complement(s[i]);
  return out;
}

ReadCollection augment_with_rc(const ReadCollection& c) {
  ReadCollection out;
  out.reads.reserve(2 * c.reads.size());
  auto emit_block = [&](Sample s) {
    for (const auto& r : c.reads)
      if (r.sample == s) out.push_back(r.bases, s, r.strand_origin);
    for (const auto& r : c.reads)
      if (r.sample == s) out.push_back(reverse_complement(r.bases), s, StrandOrigin::ReverseComplementAdded);
  };
  emit_block(Sample::Sample1);
  emit_block(Sample::Sample2);
  out.finalize();
  return out;
}

namespace {

void flush_record(ReadCollection& out, Sample sample, std::string& seq, bool have_record,
                  std::size_t header_line, const std::string& name, FastaLoadReport* report) {
  if (!have_record) return;
  if (seq.empty()) {
    std::ostringstream os;
    os << name << ": record at line " << header_line << " has an empty sequence";
    throw std::runtime_error(os.str());
  }
  bool clean = std::all_of(seq.begin(), seq.end(), is_acgt);
  if (report) ++report->records;
  if (!clean) {
    if (report) ++report->skipped_non_acgt;
  } else {
    out.push_back(std::move(seq), sample);
  }
  seq.clear();
}

}  // namespace

ReadCollection load_fasta(std::istream& in, Sample sample, const std::string& name,
                          FastaLoadReport* report) {
  ReadCollection out;
  std::string line, seq;
  bool have_record = false;
  std::size_t lineno = 0, header_line = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      flush_record(out, sample, seq, have_record, header_line, name, report);
      have_record = true;
      header_line = lineno;
      continue;
    }
    if (!have_record) {
      std::ostringstream os;
      os << name << ": line " << lineno << ": sequence data before first '>' header";
      throw std::runtime_error(os.str());
    }
    for (char c : line) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      seq.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
  }
  flush_record(out, sample, seq, have_record, header_line, name, report);
  out.finalize();
  return out;
}

ReadCollection load_fasta(const std::string& path, Sample sample, FastaLoadReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open FASTA file: " + path);
  return load_fasta(in, sample, path, report);
}

void write_fasta(std::ostream& out, const ReadCollection& c) {
  for (const auto& r : c.reads)
    out << ">r" << r.id << "\n" << r.bases << "\n";
}

void write_fasta(const std::string& path, const ReadCollection& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_fasta(out, c);
  if (!out) throw std::runtime_error("write failed: " + path);
}

bool same_reads(const ReadCollection& a, const ReadCollection& b) {
  if (a.reads.size() != b.reads.size()) return false;
  for (std::size_t i = 0; i < a.reads.size(); ++i)
    if (a.reads[i].bases != b.reads[i].bases) return false;
  return true;
}

}  // namespace ebwtpc
