#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace ebwtpc {

/// Knobs shared across the pipeline subcommands; defaults are the tool
/// defaults (-L 20, -R 30, -m 4, -v 3, alpha 0.05, LCP floor 16,
/// epsilon 0.0012).
struct PipelineConfig {
  int left_len = 20;                 // -L
  int right_len = 30;                // -R
  std::uint64_t min_per_sample = 4;  // -m
  int max_snps = 3;                  // -v
  double alpha = 0.05;
  std::uint32_t lcp_min = 16;
  std::uint64_t min_cluster_size = 4;  // overall minimum at the cluster stage
  double epsilon = 0.0012;
  double min_consensus = 0.6;
  std::uint64_t seed = 42;
  int threads = 1;
  double genome_length = 0;  // n; 0 = unknown
  double coverage = 0;       // used to estimate n when genome_length is 0
};

// Plain "key = value" sidecar files (index metadata and the like).
void save_kv(const std::string& path, const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> load_kv(const std::string& path);

}  // namespace ebwtpc
