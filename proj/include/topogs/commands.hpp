#pragma once

#include "topogs/core.hpp"
#include "topogs/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace topogs::cli {

// Stable exit codes for harnesses.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct GenerateCommand {
  std::string kind;  // "swiss-roll" or "trajectory"
  Index n = 2000;
  Index dim = 10;
  double turns = 3.0;
  std::optional<double> noise;  // defaults: 0.05 swiss roll, 0.01 trajectory
  std::uint64_t seed = 7;
  std::filesystem::path out;
};

void cmd_generate(const GenerateCommand& cmd);

struct FitCommand {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  FitConfig config;
  bool standardize = true;
  int metrics_k = 15;
  std::filesystem::path graph_cache;  // loaded when present, written otherwise
  int checkpoint_every = 0;           // 0 disables checkpoints
};

struct FitArtifacts {
  std::filesystem::path ply, report, log, manifest;
  MetricsReport metrics_init, metrics_final;
  double median_anisotropy = 0.0;
  double mean_alignment = 0.0;
  double max_training_log_scale = 0.0;
};

FitArtifacts cmd_fit(const FitCommand& cmd, std::vector<std::string>* warnings = nullptr);

struct AblationVariant {
  std::string name;
  FitArtifacts artifacts;
};

// Runs {full, lambda_c = 0, lambda_o = 0} into out_dir/<name>/ with a shared
// seed and initialization, and writes out_dir/ablation.json.
std::vector<AblationVariant> cmd_ablate(const FitCommand& cmd, std::vector<std::string>* warnings = nullptr);

// Embedding may be a PLY (means are read) or a 3-column CSV.
MetricsReport cmd_metrics(const std::filesystem::path& high_csv, const std::filesystem::path& embedding, int k,
                          StressScaling scaling = StressScaling::Optimal);

// Full command-line entry: parses args (without argv[0]), runs, maps errors
// onto ExitCode and prints one "topogs: error[category]: message" line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace topogs::cli
