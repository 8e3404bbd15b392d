#include "ebwtpc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ebwtpc/clustering.hpp"
#include "ebwtpc/config.hpp"
#include "ebwtpc/index.hpp"
#include "ebwtpc/sequences.hpp"
#include "ebwtpc/simulate.hpp"
#include "ebwtpc/snpcall.hpp"
#include "ebwtpc/stats.hpp"
#include "ebwtpc/validate.hpp"

namespace ebwtpc::cli {

namespace {

struct SimulateOpts {
  std::uint64_t n = 100000;
  double coverage1 = 30.0;
  double coverage2 = 22.0;
  std::uint64_t read_len = 100;
  double epsilon = 0.0012;
  std::uint64_t seed = 42;
  double snp_rate = 0.001;
  std::uint64_t snp_count = 0;  // overrides snp_rate when > 0
  double non_isolated_frac = 0.3;
  std::string strand = "both";
  std::string out = "sim";
};

struct IndexOpts {
  std::string sample1;
  std::string sample2;
  bool no_rc = false;
  std::string out = "idx";
  std::uint64_t memory_budget_mb = 8192;
};

struct ClusterOpts {
  std::string index_prefix = "idx";
  std::uint32_t lcp_min = 16;
  std::uint64_t min_size = 4;
  std::string out;
};

struct CallOpts {
  std::string index_prefix = "idx";
  std::string clusters;
  std::string reads;
  std::string out = "calls.fa";
  PipelineConfig cfg;
};

struct ValidateOpts {
  std::string truth;
  std::string genome;
  std::string calls;
  int left_len = 20;
  int right_len = 30;
  std::uint64_t non_isolated_k = 31;
  std::string out;
};

struct StatsOpts {
  double m = 0;
  double n = 0;
  double r = 100;
  double epsilon = 0.0012;
  int t = 1;
  double alpha = 0.05;
  int k_min = 1;
  int k_max = 31;
  std::string out;
};

struct AllOpts {
  SimulateOpts sim;
  std::string dir = "ebwtpc_run";
  PipelineConfig cfg;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void run_simulate(const SimulateOpts& o) {
  ScenarioParams params;
  params.n = o.n;
  params.coverage1 = o.coverage1;
  params.coverage2 = o.coverage2;
  params.read_len = o.read_len;
  params.epsilon = o.epsilon;
  params.seed = o.seed;
  params.strand = o.strand == "forward" ? StrandMode::ForwardOnly : StrandMode::Both;
  params.plant.count = o.snp_count > 0
                           ? o.snp_count
                           : static_cast<std::size_t>(std::llround(o.snp_rate * static_cast<double>(o.n)));
  params.plant.non_isolated_fraction = o.non_isolated_frac;

  Scenario sc = simulate_scenario(params);

  std::vector<std::string> echo = {
      "command = simulate",
      "n = " + std::to_string(o.n),
      "coverage1 = " + fmt(o.coverage1),
      "coverage2 = " + fmt(o.coverage2),
      "read_len = " + std::to_string(o.read_len),
      "epsilon = " + fmt(o.epsilon),
      "seed = " + std::to_string(o.seed),
      "snp_count = " + std::to_string(params.plant.count),
      "non_isolated_frac = " + fmt(o.non_isolated_frac),
      "strand = " + o.strand,
  };
  write_genome_fasta(o.out + ".ref.fa", "reference", sc.truth.genome);
  write_genome_fasta(o.out + ".mut.fa", "mutated", sc.truth.mutated);
  write_fasta(o.out + ".sample1.fa", sc.sample1);
  write_fasta(o.out + ".sample2.fa", sc.sample2);
  write_truth_tsv(o.out + ".truth.tsv", sc.truth.variants, echo);
  write_origins_tsv(o.out + ".origins.tsv", sc.truth.origins, echo);

  std::cout << "simulate: genome n=" << o.n << ", " << sc.sample1.size() << " + "
            << sc.sample2.size() << " reads, " << sc.truth.variants.size()
            << " planted SNPs -> " << o.out << ".*\n";
}

void run_index(const IndexOpts& o) {
  if (o.sample1.empty()) throw std::runtime_error("index: --sample1 is required");
  FastaLoadReport rep1, rep2;
  ReadCollection s1 = load_fasta(o.sample1, Sample::Sample1, &rep1);
  ReadCollection joint;
  for (const auto& r : s1.reads) joint.push_back(r.bases, Sample::Sample1);
  std::uint64_t bases1 = s1.total_length(), bases2 = 0;
  std::uint64_t reads1 = s1.size(), reads2 = 0;
  if (!o.sample2.empty()) {
    ReadCollection s2 = load_fasta(o.sample2, Sample::Sample2, &rep2);
    for (const auto& r : s2.reads) joint.push_back(r.bases, Sample::Sample2);
    bases2 = s2.total_length();
    reads2 = s2.size();
  }
  joint.finalize();
  if (joint.empty()) throw std::runtime_error("index: no clean reads in the input");
  if (!o.no_rc) joint = augment_with_rc(joint);

  BuildOptions bopt;
  bopt.memory_budget_bytes = o.memory_budget_mb << 20;
  IndexTriplet idx = build_index(joint, bopt);
  save_index(idx, o.out);
  write_fasta(o.out + ".joint.fa", joint);

  std::map<std::string, std::string> meta;
  meta["p_prime"] = std::to_string(idx.size());
  meta["num_reads"] = std::to_string(idx.num_reads);
  meta["sample_boundary"] = std::to_string(joint.sample_boundary);
  meta["mean_read_length"] = fmt(joint.mean_read_length());
  meta["rc_augmented"] = o.no_rc ? "0" : "1";
  meta["reads_sample1"] = std::to_string(reads1);
  meta["reads_sample2"] = std::to_string(reads2);
  meta["bases_sample1"] = std::to_string(bases1);
  meta["bases_sample2"] = std::to_string(bases2);
  meta["skipped_sample1"] = std::to_string(rep1.skipped_non_acgt);
  meta["skipped_sample2"] = std::to_string(rep2.skipped_non_acgt);
  save_kv(o.out + ".meta", meta);

  std::cout << "index: sample1 " << reads1 << " reads (" << rep1.skipped_non_acgt
            << " skipped), sample2 " << reads2 << " reads (" << rep2.skipped_non_acgt
            << " skipped), joint " << joint.size() << " reads, P'=" << idx.size() << " -> "
            << o.out << ".{gsa,ebwt,lcp,joint.fa,meta}\n";
}

void run_cluster(const ClusterOpts& o) {
  std::vector<std::uint32_t> lcp = load_lcp(o.index_prefix);
  std::vector<Cluster> clusters = find_clusters(lcp, o.lcp_min, o.min_size);
  std::string out = o.out.empty() ? o.index_prefix + ".clusters" : o.out;
  write_clusters(out, clusters);
  std::cout << "cluster: " << clusters.size() << " clusters (lcp-min " << o.lcp_min
            << ", min-size " << o.min_size << ") -> " << out << "\n";
}

void run_call(const CallOpts& o) {
  const std::string clusters_path =
      o.clusters.empty() ? o.index_prefix + ".clusters" : o.clusters;
  const std::string reads_path = o.reads.empty() ? o.index_prefix + ".joint.fa" : o.reads;

  IndexTriplet idx = load_index(o.index_prefix);
  std::map<std::string, std::string> meta = load_kv(o.index_prefix + ".meta");
  idx.sample_boundary = std::stoull(meta.at("sample_boundary"));

  std::vector<Cluster> clusters = read_clusters(clusters_path);

  CallParams params;
  params.left_len = o.cfg.left_len;
  params.right_len = o.cfg.right_len;
  params.min_per_sample = o.cfg.min_per_sample;
  params.max_snps = o.cfg.max_snps;
  params.alpha = o.cfg.alpha;
  params.lcp_min = o.cfg.lcp_min;
  params.min_consensus = o.cfg.min_consensus;
  params.epsilon = o.cfg.epsilon;
  params.threads = o.cfg.threads;
  params.mean_read_length = std::stod(meta.at("mean_read_length"));
  bool rc = meta.count("rc_augmented") && meta.at("rc_augmented") == "1";
  params.reads_per_genome = rc ? static_cast<double>(idx.num_reads) / 2.0
                               : static_cast<double>(idx.num_reads);
  if (o.cfg.genome_length > 0) {
    params.genome_length = o.cfg.genome_length;
  } else if (o.cfg.coverage > 0) {
    params.genome_length = std::stod(meta.at("bases_sample1")) / o.cfg.coverage;
  } else {
    throw std::runtime_error("call: need --genome-length or --coverage to size the Poisson model");
  }

  FastaReadSource source(reads_path);
  CallResult res = call_snps(idx, clusters, source, params);
  res.counters.gsa_loads = res.counters.ebwt_loads = res.counters.lcp_loads = 1;
  res.counters.clusters_loads = 1;
  res.counters.reads_file_passes = source.passes();

  {
    std::ofstream os(o.out);
    if (!os) throw std::runtime_error("cannot write " + o.out);
    write_kissnp2(os, res.calls);
    if (!os) throw std::runtime_error("write failed: " + o.out);
  }
  {
    std::ofstream os(o.out + ".report.tsv");
    if (!os) throw std::runtime_error("cannot write " + o.out + ".report.tsv");
    os << "# command = call\n";
    os << "# index = " << o.index_prefix << "\n";
    os << "# clusters = " << clusters_path << "\n";
    os << "# reads = " << reads_path << "\n";
    os << "# L = " << params.left_len << "\n# R = " << params.right_len << "\n";
    os << "# m = " << params.min_per_sample << "\n# v = " << params.max_snps << "\n";
    os << "# alpha = " << params.alpha << "\n# lcp_min = " << params.lcp_min << "\n";
    os << "# epsilon = " << params.epsilon << "\n# min_consensus = " << params.min_consensus
       << "\n";
    os << "# genome_length = " << params.genome_length << "\n";
    os << "# threads = " << params.threads << "\n";
    os << "model_m\t" << res.model.m << "\n";
    os << "model_r\t" << res.model.r << "\n";
    os << "model_lambda\t" << lambda(res.model) << "\n";
    os << "band_lo\t" << res.band_lo << "\n";
    os << "band_hi\t" << res.band_hi << "\n";
    const CallCounters& c = res.counters;
    os << "clusters_seen\t" << c.clusters_seen << "\n";
    os << "candidates\t" << c.candidates << "\n";
    os << "calls_emitted\t" << c.calls_emitted << "\n";
    os << "rejected_too_small\t" << c.rejected_too_small << "\n";
    os << "rejected_left_tail\t" << c.rejected_left_tail << "\n";
    os << "rejected_right_tail\t" << c.rejected_right_tail << "\n";
    os << "rejected_same_allele\t" << c.rejected_same_allele << "\n";
    os << "rejected_missing_sample\t" << c.rejected_missing_sample << "\n";
    os << "rejected_no_consensus\t" << c.rejected_no_consensus << "\n";
    os << "buffered_coords\t" << c.buffered_coords << "\n";
    os << "buffer_peak_bytes\t" << c.buffer_peak_bytes << "\n";
    os << "spilled_chunks\t" << c.spilled_chunks << "\n";
    os << "ebwt_loads\t" << c.ebwt_loads << "\n";
    os << "gsa_loads\t" << c.gsa_loads << "\n";
    os << "lcp_loads\t" << c.lcp_loads << "\n";
    os << "clusters_loads\t" << c.clusters_loads << "\n";
    os << "reads_file_passes\t" << c.reads_file_passes << "\n";
  }
  std::cout << "call: " << res.calls.size() << " SNPs from " << clusters.size()
            << " clusters (band [" << res.band_lo << "," << res.band_hi << "]) -> " << o.out
            << "\n";
}

void run_validate(const ValidateOpts& o) {
  std::vector<Variant> truth = load_truth_tsv(o.truth);
  std::string genome = load_genome_fasta(o.genome);
  TruthGrid grid = build_grid(to_truth_snps(truth, o.non_isolated_k), genome, o.left_len,
                              o.right_len);
  std::vector<CallPair> calls = parse_kissnp2_file(o.calls);
  ValidationReport rep = score_calls(grid, calls);

  std::vector<std::string> echo = {
      "command = validate",
      "truth = " + o.truth,
      "genome = " + o.genome,
      "calls = " + o.calls,
      "L = " + std::to_string(o.left_len),
      "R = " + std::to_string(o.right_len),
      "non_isolated_k = " + std::to_string(o.non_isolated_k),
  };
  if (!o.out.empty()) {
    std::ofstream os(o.out);
    if (!os) throw std::runtime_error("cannot write " + o.out);
    write_validation_tsv(os, rep, echo);
  }
  write_validation_tsv(std::cout, rep, echo);
  write_validation_text(std::cout, rep);
}

void run_stats(const StatsOpts& o) {
  if (!(o.m > 0) || !(o.n > 0))
    throw std::runtime_error("stats: --reads and --genome-length are required");
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out);
    if (!file) throw std::runtime_error("cannot write " + o.out);
    os = &file;
  }
  *os << "# command = stats\n# m = " << fmt(o.m) << "\n# n = " << fmt(o.n)
      << "\n# r = " << fmt(o.r) << "\n# epsilon = " << fmt(o.epsilon) << "\n# t = " << o.t
      << "\n# alpha = " << fmt(o.alpha) << "\n";
  *os << "k\tlambda\tlambda_prime\tband_lo\tband_hi\tcond2_bound\tbest_delta\n";
  for (int k = o.k_min; k <= o.k_max; ++k) {
    PoissonModel model{o.m, o.n, o.r, o.epsilon, k, o.t};
    if (static_cast<double>(k) >= o.r) break;
    auto [lo, hi] = cluster_length_band(model, o.alpha);
    auto [bound, delta] = condition2_lower_bound_max(model);
    *os << k << "\t" << lambda(model) << "\t" << lambda_prime(model) << "\t" << lo << "\t" << hi
        << "\t" << bound << "\t" << delta << "\n";
  }
}

void run_all(const AllOpts& o) {
  namespace fs = std::filesystem;
  fs::create_directories(o.dir);
  SimulateOpts sim = o.sim;
  sim.out = o.dir + "/sim";
  run_simulate(sim);

  IndexOpts idx;
  idx.sample1 = sim.out + ".sample1.fa";
  idx.sample2 = sim.out + ".sample2.fa";
  idx.out = o.dir + "/idx";
  run_index(idx);

  ClusterOpts cl;
  cl.index_prefix = idx.out;
  cl.lcp_min = o.cfg.lcp_min;
  cl.min_size = o.cfg.min_cluster_size;
  run_cluster(cl);

  CallOpts call;
  call.index_prefix = idx.out;
  call.out = o.dir + "/calls.fa";
  call.cfg = o.cfg;
  if (call.cfg.genome_length <= 0 && call.cfg.coverage <= 0)
    call.cfg.genome_length = static_cast<double>(sim.n);
  run_call(call);

  ValidateOpts val;
  val.truth = sim.out + ".truth.tsv";
  val.genome = sim.out + ".ref.fa";
  val.calls = call.out;
  val.left_len = o.cfg.left_len;
  val.right_len = o.cfg.right_len;
  val.out = o.dir + "/report.tsv";
  run_validate(val);
}

void add_call_config(CLI::App* sub, PipelineConfig& cfg, bool with_genome_options = true) {
  sub->add_option("-L,--left", cfg.left_len, "left window including the SNP")
      ->envname("EBWTPC_L")
      ->capture_default_str();
  sub->add_option("-R,--right", cfg.right_len, "right context length")
      ->envname("EBWTPC_R")
      ->capture_default_str();
  sub->add_option("-m,--min-per-sample", cfg.min_per_sample, "minimum letters per sample")
      ->envname("EBWTPC_M")
      ->capture_default_str();
  sub->add_option("-v,--max-snps", cfg.max_snps, "max SNPs per call (main + left window)")
      ->envname("EBWTPC_V")
      ->capture_default_str();
  sub->add_option("--alpha", cfg.alpha, "two-tail significance for the length test")
      ->envname("EBWTPC_ALPHA")
      ->capture_default_str();
  sub->add_option("--lcp-min", cfg.lcp_min, "LCP floor / model context length")
      ->envname("EBWTPC_LCP_MIN")
      ->capture_default_str();
  sub->add_option("--epsilon", cfg.epsilon, "per-base substitution rate")
      ->envname("EBWTPC_EPSILON")
      ->capture_default_str();
  sub->add_option("--min-consensus", cfg.min_consensus, "assembly column plurality floor")
      ->capture_default_str();
  if (with_genome_options) {
    sub->add_option("--genome-length", cfg.genome_length, "genome length n for the Poisson model")
        ->capture_default_str();
    sub->add_option("--coverage", cfg.coverage, "estimate n as sample1 bases / coverage")
        ->capture_default_str();
  }
  sub->add_option("--threads", cfg.threads, "cluster-analysis worker threads")
      ->envname("EBWTPC_THREADS")
      ->capture_default_str();
}

}  // namespace

int dispatch(std::vector<std::string> args) {
  CLI::App app{"eBWT positional clustering: index, cluster and call SNPs on read collections"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value config file ([subcommand] sections)");

  SimulateOpts sim;
  auto* s_sim = app.add_subcommand("simulate", "generate a two-sample ground-truth scenario");
  s_sim->add_option("-n,--genome-length", sim.n, "genome length")->capture_default_str();
  s_sim->add_option("--coverage1", sim.coverage1, "sample 1 coverage")->capture_default_str();
  s_sim->add_option("--coverage2", sim.coverage2, "sample 2 coverage")->capture_default_str();
  s_sim->add_option("-r,--read-length", sim.read_len, "read length")->capture_default_str();
  s_sim->add_option("--epsilon", sim.epsilon, "per-base substitution error rate")
      ->envname("EBWTPC_EPSILON")
      ->capture_default_str();
  s_sim->add_option("--seed", sim.seed, "RNG seed")->envname("EBWTPC_SEED")->capture_default_str();
  s_sim->add_option("--snp-rate", sim.snp_rate, "planted SNP density")->capture_default_str();
  s_sim->add_option("--snp-count", sim.snp_count, "planted SNP count (overrides --snp-rate)")
      ->capture_default_str();
  s_sim->add_option("--non-isolated-frac", sim.non_isolated_frac,
                    "fraction of SNPs planted in close pairs")
      ->capture_default_str();
  s_sim->add_option("--strand", sim.strand, "both | forward")
      ->check(CLI::IsMember({"both", "forward"}))
      ->capture_default_str();
  s_sim->add_option("-o,--out", sim.out, "output prefix")->capture_default_str();

  IndexOpts idx;
  auto* s_idx = app.add_subcommand("index", "build the GSA/eBWT/LCP triplet of the joint collection");
  s_idx->add_option("--sample1", idx.sample1, "sample 1 FASTA")->required();
  s_idx->add_option("--sample2", idx.sample2, "sample 2 FASTA");
  s_idx->add_flag("--no-rc", idx.no_rc, "skip reverse-complement augmentation");
  s_idx->add_option("-o,--out", idx.out, "output prefix")->capture_default_str();
  s_idx->add_option("--memory-budget-mb", idx.memory_budget_mb, "construction memory cap")
      ->capture_default_str();

  ClusterOpts clu;
  auto* s_clu = app.add_subcommand("cluster", "detect LCP-delimited positional clusters");
  s_clu->add_option("--index", clu.index_prefix, "index prefix")->capture_default_str();
  s_clu->add_option("--lcp-min", clu.lcp_min, "LCP floor")
      ->envname("EBWTPC_LCP_MIN")
      ->capture_default_str();
  s_clu->add_option("--min-size", clu.min_size, "overall minimum cluster size")
      ->capture_default_str();
  s_clu->add_option("-o,--out", clu.out, "clusters file (default <index>.clusters)");

  CallOpts call;
  auto* s_call = app.add_subcommand("call", "call SNPs between the two samples");
  s_call->add_option("--index", call.index_prefix, "index prefix")->capture_default_str();
  s_call->add_option("--clusters", call.clusters, "clusters file (default <index>.clusters)");
  s_call->add_option("--reads", call.reads, "joint reads FASTA (default <index>.joint.fa)");
  s_call->add_option("-o,--out", call.out, "output calls FASTA")->capture_default_str();
  add_call_config(s_call, call.cfg);

  ValidateOpts val;
  auto* s_val = app.add_subcommand("validate", "score a KisSNP2-format call set against truth");
  s_val->add_option("--truth", val.truth, "truth TSV (pos ref alt)")->required();
  s_val->add_option("--genome", val.genome, "reference genome FASTA")->required();
  s_val->add_option("--calls", val.calls, "calls FASTA")->required();
  s_val->add_option("-L,--left", val.left_len, "left window length")->capture_default_str();
  s_val->add_option("-R,--right", val.right_len, "right context length")->capture_default_str();
  s_val->add_option("--non-isolated-k", val.non_isolated_k, "non-isolated distance")
      ->capture_default_str();
  s_val->add_option("-o,--out", val.out, "also write the TSV report here");

  StatsOpts st;
  auto* s_st = app.add_subcommand("stats", "print the Poisson model table over k");
  s_st->add_option("--reads", st.m, "read count m")->required();
  s_st->add_option("--genome-length", st.n, "genome length n")->required();
  s_st->add_option("--read-length", st.r, "mean read length r")->capture_default_str();
  s_st->add_option("--epsilon", st.epsilon, "error rate")
      ->envname("EBWTPC_EPSILON")
      ->capture_default_str();
  s_st->add_option("--t", st.t, "cluster multiplicity")->capture_default_str();
  s_st->add_option("--alpha", st.alpha, "two-tail significance")
      ->envname("EBWTPC_ALPHA")
      ->capture_default_str();
  s_st->add_option("--k-min", st.k_min, "first context length")->capture_default_str();
  s_st->add_option("--k-max", st.k_max, "last context length")->capture_default_str();
  s_st->add_option("-o,--out", st.out, "write TSV here instead of stdout");

  AllOpts all;
  auto* s_all = app.add_subcommand("all", "simulate -> index -> cluster -> call -> validate");
  s_all->add_option("-n,--genome-length", all.sim.n, "genome length")->capture_default_str();
  s_all->add_option("--coverage1", all.sim.coverage1, "sample 1 coverage")->capture_default_str();
  s_all->add_option("--coverage2", all.sim.coverage2, "sample 2 coverage")->capture_default_str();
  s_all->add_option("-r,--read-length", all.sim.read_len, "read length")->capture_default_str();
  s_all->add_option("--seed", all.sim.seed, "RNG seed")
      ->envname("EBWTPC_SEED")
      ->capture_default_str();
  s_all->add_option("--snp-rate", all.sim.snp_rate, "planted SNP density")->capture_default_str();
  s_all->add_option("--snp-count", all.sim.snp_count, "planted SNP count")->capture_default_str();
  s_all->add_option("--non-isolated-frac", all.sim.non_isolated_frac,
                    "fraction of SNPs planted in close pairs")
      ->capture_default_str();
  s_all->add_option("-d,--dir", all.dir, "working directory")->capture_default_str();
  add_call_config(s_all, all.cfg, /*with_genome_options=*/false);
  s_all->add_option("--min-size", all.cfg.min_cluster_size, "overall minimum cluster size")
      ->capture_default_str();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand(s_sim)) {
      run_simulate(sim);
    } else if (app.got_subcommand(s_idx)) {
      run_index(idx);
    } else if (app.got_subcommand(s_clu)) {
      run_cluster(clu);
    } else if (app.got_subcommand(s_call)) {
      run_call(call);
    } else if (app.got_subcommand(s_val)) {
      run_validate(val);
    } else if (app.got_subcommand(s_st)) {
      run_stats(st);
    } else if (app.got_subcommand(s_all)) {
      all.sim.epsilon = all.cfg.epsilon;  // one error-rate knob for both stages
      run_all(all);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(std::move(args));
}

}  // namespace ebwtpc::cli
