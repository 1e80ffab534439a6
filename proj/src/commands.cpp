#include "topogs/commands.hpp"

#include "topogs/config_io.hpp"
#include "topogs/engine.hpp"
#include "topogs/errors.hpp"
#include "topogs/export.hpp"
#include "topogs/graph.hpp"
#include "topogs/ingest.hpp"
#include "topogs/parallel.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace topogs::cli {
namespace {

namespace fs = std::filesystem;

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

NeighborGraph obtain_graph(const Dataset& d, const FitCommand& cmd) {
  if (!cmd.graph_cache.empty() && fs::exists(cmd.graph_cache)) {
    auto g = load_graph(cmd.graph_cache);
    if (g.size() != d.size() || g.k() != cmd.config.k)
      throw DataError("graph cache '" + cmd.graph_cache.string() + "' is " + std::to_string(g.size()) + " x " +
                      std::to_string(g.k()) + ", expected " + std::to_string(d.size()) + " x " +
                      std::to_string(cmd.config.k));
    return g;
  }
  auto g = compute_weights(build_knn(d, cmd.config.k), cmd.config.kernel_sigma);
  if (!cmd.graph_cache.empty()) save_graph(g, cmd.graph_cache);
  return g;
}

// Positions as they are stored in the PLY file.
MatrixXd as_float32(const MatrixX3d& m) { return m.cast<float>().cast<double>(); }

GaussianSet export_state(const GaussianSet& training, Regime regime, const Dataset& d, bool expand,
                         std::vector<std::string>* warnings) {
  GaussianSet out = expand ? visual_scale_expand(training, regime) : training;
  out.opacities = opacity_map(regime, d.energy, d.size(), warnings);
  return out;
}

nlohmann::ordered_json manifest_json(const FitCommand& cmd, const std::string& started, const std::string& finished,
                                     double wall_time, const FitArtifacts& art) {
  nlohmann::ordered_json m;
  m["subcommand"] = "fit";
  m["input"] = cmd.input.string();
  m["out_dir"] = cmd.out_dir.string();
  m["standardize"] = cmd.standardize;
  m["metrics_k"] = cmd.metrics_k;
  if (!cmd.graph_cache.empty()) m["graph_cache"] = cmd.graph_cache.string();
  m["checkpoint_every"] = cmd.checkpoint_every;
  m["config"] = config_to_json(cmd.config);
  m["outputs"] = {{"ply", art.ply.string()},
                  {"report", art.report.string()},
                  {"log", art.log.string()},
                  {"manifest", art.manifest.string()}};
  m["started_at"] = started;
  m["finished_at"] = finished;
  m["wall_time_seconds"] = wall_time;
  return m;
}

}  // namespace

void cmd_generate(const GenerateCommand& cmd) {
  if (cmd.out.empty()) throw UsageError("generate needs an output path");
  Dataset d;
  if (cmd.kind == "swiss-roll")
    d = generate_swiss_roll(cmd.n, cmd.noise.value_or(0.05), cmd.seed);
  else if (cmd.kind == "trajectory")
    d = generate_trajectory(cmd.n, cmd.dim, cmd.turns, cmd.noise.value_or(0.01), cmd.seed);
  else
    throw UsageError("unknown dataset kind '" + cmd.kind + "' (expected swiss-roll or trajectory)");
  if (cmd.out.has_parent_path()) ensure_dir(cmd.out.parent_path());
  write_csv(d, cmd.out);
}

FitArtifacts cmd_fit(const FitCommand& cmd, std::vector<std::string>* warnings) {
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  cmd.config.validate();

  const Dataset raw = load_csv(cmd.input, infer_csv_schema(cmd.input));
  raw.validate();
  const Dataset data = cmd.standardize ? standardize(raw) : raw;
  if (cmd.config.regime == Regime::Trajectory1D && !data.energy)
    throw DataError("trajectory regime needs an energy column for the opacity mapping");

  ensure_dir(cmd.out_dir);
  FitArtifacts art;
  art.ply = cmd.out_dir / "splats.ply";
  art.report = cmd.out_dir / "report.json";
  art.log = cmd.out_dir / "train_log.jsonl";
  art.manifest = cmd.out_dir / "manifest.json";

  NeighborGraph graph = obtain_graph(data, cmd);
  const MatrixX3d init = init_means(data, cmd.config);
  art.metrics_init = compute_metrics(raw.points, init, cmd.metrics_k);

  FitOptions opts;
  const MatrixX3d colors = default_colors(data.energy, data.size());
  if (cmd.checkpoint_every > 0) {
    const fs::path dir = cmd.out_dir / "checkpoints";
    ensure_dir(dir);
    opts.on_epoch = [&, dir](const EpochView& v) {
      if (v.step % cmd.checkpoint_every != 0) return;
      std::ostringstream name;
      name << "epoch_" << std::setw(5) << std::setfill('0') << v.step << ".ply";
      write_ply(export_state(v.state, cmd.config.regime, data, false, nullptr), colors, dir / name.str());
    };
  }

  const FitResult result = fit(data, std::move(graph), init, cmd.config, opts);

  const GaussianSet exported = export_state(result.gaussians, cmd.config.regime, data, true, warnings);
  write_ply(exported, colors, art.ply, warnings);
  art.metrics_final = compute_metrics(raw.points, as_float32(result.gaussians.means), cmd.metrics_k);
  write_report(result, art.metrics_init, art.metrics_final, art.report);
  write_training_log(result.history, art.log);

  art.median_anisotropy = median(anisotropy_ratios(result.gaussians.log_scales));
  art.mean_alignment = mean_neighbor_alignment(result.gaussians.quaternions, result.graph);
  art.max_training_log_scale = result.gaussians.log_scales.maxCoeff();

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream(art.manifest) << manifest_json(cmd, started, utc_now(), wall, art).dump(2) << '\n';
  return art;
}

std::vector<AblationVariant> cmd_ablate(const FitCommand& cmd, std::vector<std::string>* warnings) {
  std::vector<AblationVariant> variants;
  const std::vector<std::pair<std::string, FitConfig>> plan = [&] {
    FitConfig no_cov = cmd.config, no_orient = cmd.config;
    no_cov.lambda_c = 0.0;
    no_orient.lambda_o = 0.0;
    return std::vector<std::pair<std::string, FitConfig>>{{"full", cmd.config}, {"no_covariance", no_cov}, {"no_orientation", no_orient}};
  }();

  nlohmann::ordered_json summary;
  summary["input"] = cmd.input.string();
  for (const auto& [name, cfg] : plan) {
    FitCommand sub = cmd;
    sub.config = cfg;
    sub.out_dir = cmd.out_dir / name;
    auto art = cmd_fit(sub, warnings);
    summary["variants"][name] = {{"lambda_r", cfg.lambda_r},
                                 {"lambda_c", cfg.lambda_c},
                                 {"lambda_o", cfg.lambda_o},
                                 {"median_anisotropy_ratio", art.median_anisotropy},
                                 {"mean_neighbor_alignment", art.mean_alignment},
                                 {"trustworthiness", art.metrics_final.trustworthiness},
                                 {"continuity", art.metrics_final.continuity},
                                 {"stress1", art.metrics_final.stress1}};
    variants.push_back({name, std::move(art)});
  }
  const auto& full = variants[0].artifacts;
  summary["full_over_no_covariance_anisotropy"] = full.median_anisotropy / variants[1].artifacts.median_anisotropy;
  summary["full_minus_no_orientation_alignment"] = full.mean_alignment - variants[2].artifacts.mean_alignment;
  std::ofstream(cmd.out_dir / "ablation.json") << summary.dump(2) << '\n';
  return variants;
}

MetricsReport cmd_metrics(const fs::path& high_csv, const fs::path& embedding, int k, StressScaling scaling) {
  const Dataset high = load_csv(high_csv, infer_csv_schema(high_csv));
  MatrixXd low;
  auto ext = embedding.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".ply") {
    low = read_ply(embedding).gaussians.means;
  } else {
    const Dataset emb = load_csv(embedding, infer_csv_schema(embedding));
    if (emb.dim() != 3) throw DataError("embedding CSV must have 3 feature columns, found " + std::to_string(emb.dim()));
    low = emb.points;
  }
  if (low.rows() != high.size())
    throw DataError("row count mismatch: data has " + std::to_string(high.size()) + " rows, embedding has " +
                    std::to_string(low.rows()));
  return compute_metrics(high.points, low, k, scaling);
}

namespace {

struct FitFlags {
  std::string input, out, config, regime, init, init_file, kernel_sigma, graph_cache;
  std::optional<int> k, epochs, tau, freeze, metrics_k, threads, checkpoint_every;
  std::optional<double> lambda_r, lambda_c, lambda_o, huber_beta, s_init, embedding_scale, lr_means, lr_scales, lr_quats, clamp;
  std::optional<std::uint64_t> seed;
  bool no_standardize = false, normalize_rigidity = false, kabsch = false;
};

void add_fit_flags(CLI::App* app, FitFlags& f) {
  app->add_option("input", f.input, "Input CSV (header row optional; 'energy'/'label' columns are routed)");
  app->add_option("-o,--out", f.out, "Output directory")->required();
  app->add_option("--config", f.config, "JSON config file or run manifest (flags override it)");
  app->add_option("--regime", f.regime, "surface | trajectory");
  app->add_option("--k", f.k, "Neighbourhood size");
  app->add_option("--epochs", f.epochs, "Optimization steps M");
  app->add_option("--tau", f.tau, "Target update interval");
  app->add_option("--freeze-epoch", f.freeze, "Last step allowed to update targets (default epochs/2)");
  app->add_option("--lambda-r", f.lambda_r, "Rigidity weight");
  app->add_option("--lambda-c", f.lambda_c, "Covariance weight");
  app->add_option("--lambda-o", f.lambda_o, "Orientation weight");
  app->add_option("--huber-beta", f.huber_beta, "Huber threshold for the trajectory regime");
  app->add_option("--s-init", f.s_init, "Initial log-scale");
  app->add_option("--embedding-scale", f.embedding_scale, "Embedding units per data unit");
  app->add_option("--scale-clamp", f.clamp, "Override the regime's log-scale upper clamp");
  app->add_option("--lr-means", f.lr_means);
  app->add_option("--lr-scales", f.lr_scales);
  app->add_option("--lr-quats", f.lr_quats);
  app->add_option("--kernel-sigma", f.kernel_sigma, "adaptive | <positive value>");
  app->add_option("--seed", f.seed);
  app->add_option("--threads", f.threads, "Worker threads (default: TOPOGS_THREADS or all cores)");
  app->add_option("--init", f.init, "pca3 | file");
  app->add_option("--init-file", f.init_file, "N x 3 CSV used with --init file");
  app->add_option("--metrics-k", f.metrics_k, "Neighbourhood size for trustworthiness/continuity");
  app->add_option("--graph-cache", f.graph_cache, "TGSG sidecar: loaded if present, written otherwise");
  app->add_option("--checkpoint-every", f.checkpoint_every, "Write a checkpoint PLY every C steps");
  app->add_flag("--no-standardize", f.no_standardize, "Fit on the raw coordinates");
  app->add_flag("--normalize-rigidity", f.normalize_rigidity, "Divide the rigidity sum by N");
  app->add_flag("--kabsch", f.kabsch, "Reject reflections in the Procrustes map (n = 3 only)");
}

FitCommand resolve_fit(const FitFlags& f) {
  FitCommand cmd;
  FitConfig cfg;
  nlohmann::json file;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw UsageError("cannot open config '" + f.config + "'");
    try {
      in >> file;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config '" + f.config + "' is not valid JSON: " + e.what());
    }
    if (file.is_object() && file.contains("config")) {
      // run manifest: restore the non-config fields as well
      if (file.contains("input")) cmd.input = file["input"].get<std::string>();
      if (file.contains("standardize")) cmd.standardize = file["standardize"].get<bool>();
      if (file.contains("metrics_k")) cmd.metrics_k = file["metrics_k"].get<int>();
      if (file.contains("checkpoint_every")) cmd.checkpoint_every = file["checkpoint_every"].get<int>();
      if (file.contains("graph_cache")) cmd.graph_cache = file["graph_cache"].get<std::string>();
    }
    cfg = config_from_json(file, cfg);
  }
  if (!f.input.empty()) cmd.input = f.input;
  if (cmd.input.empty()) throw UsageError("fit needs an input CSV");
  cmd.out_dir = f.out;

  if (!f.regime.empty()) cfg.regime = parse_regime(f.regime);
  if (f.k) cfg.k = *f.k;
  if (f.epochs) {
    cfg.epochs = *f.epochs;
    // a freeze epoch inherited from a file must not exceed a shortened run
    if (cfg.freeze_epoch && *cfg.freeze_epoch > cfg.epochs && !f.freeze) cfg.freeze_epoch.reset();
  }
  if (f.tau) cfg.lazy_interval = *f.tau;
  if (f.freeze) cfg.freeze_epoch = *f.freeze;
  if (f.lambda_r) cfg.lambda_r = *f.lambda_r;
  if (f.lambda_c) cfg.lambda_c = *f.lambda_c;
  if (f.lambda_o) cfg.lambda_o = *f.lambda_o;
  if (f.huber_beta) cfg.huber_beta = *f.huber_beta;
  if (f.s_init) cfg.s_init = *f.s_init;
  if (f.embedding_scale) cfg.embedding_scale = *f.embedding_scale;
  if (f.clamp) cfg.scale_clamp_max = *f.clamp;
  if (f.lr_means) cfg.lr_means = *f.lr_means;
  if (f.lr_scales) cfg.lr_scales = *f.lr_scales;
  if (f.lr_quats) cfg.lr_quats = *f.lr_quats;
  if (f.seed) cfg.seed = *f.seed;
  if (!f.kernel_sigma.empty()) {
    if (f.kernel_sigma == "adaptive") {
      cfg.kernel_sigma = KernelSigma{};
    } else {
      try {
        cfg.kernel_sigma = KernelSigma::fixed(std::stod(f.kernel_sigma));
      } catch (const std::exception&) {
        throw UsageError("--kernel-sigma must be 'adaptive' or a number");
      }
    }
  }
  if (!f.init.empty()) {
    if (f.init == "pca3") cfg.init = InitStrategy::Pca3;
    else if (f.init == "file") cfg.init = InitStrategy::External;
    else throw UsageError("--init must be pca3 or file");
  }
  if (!f.init_file.empty()) {
    cfg.init_path = f.init_file;
    if (f.init.empty()) cfg.init = InitStrategy::External;
  }
  if (f.normalize_rigidity) cfg.normalize_rigidity = true;
  if (f.kabsch) cfg.kabsch_correction = true;
  if (f.no_standardize) cmd.standardize = false;
  if (f.metrics_k) cmd.metrics_k = *f.metrics_k;
  if (!f.graph_cache.empty()) cmd.graph_cache = f.graph_cache;
  if (f.checkpoint_every) cmd.checkpoint_every = *f.checkpoint_every;
  if (cmd.checkpoint_every < 0) throw UsageError("--checkpoint-every must be >= 0");
  if (f.threads) set_num_threads(*f.threads);

  cfg.validate();
  cmd.config = cfg;
  return cmd;
}

void print_metrics(std::ostream& out, const MetricsReport& m) {
  nlohmann::ordered_json j{{"stress1", m.stress1},
                           {"trustworthiness", m.trustworthiness},
                           {"continuity", m.continuity},
                           {"k", m.k},
                           {"n_pairs_used", m.n_pairs_used}};
  out << j.dump() << '\n';
}

int fail(std::ostream& err, ExitCode code, const char* category, const std::string& msg) {
  std::string line = msg;
  for (auto& c : line)
    if (c == '\n' || c == '\r') c = ' ';
  err << "topogs: error[" << category << "]: " << line << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Volumetric embedding of high-dimensional data with anisotropic 3D Gaussians", "topogs"};
  app.require_subcommand(1);

  GenerateCommand gen;
  double noise = -1.0;
  auto* generate = app.add_subcommand("generate", "Write a synthetic benchmark dataset as CSV");
  generate->add_option("kind", gen.kind, "swiss-roll | trajectory")->required();
  generate->add_option("--n", gen.n, "Number of samples");
  generate->add_option("--dim", gen.dim, "Ambient dimension (trajectory)");
  generate->add_option("--turns", gen.turns, "Helix turns (trajectory)");
  generate->add_option("--noise", noise, "Gaussian noise standard deviation");
  generate->add_option("--seed", gen.seed);
  generate->add_option("-o,--out", gen.out, "Output CSV")->required();

  FitFlags fit_flags, ablate_flags;
  auto* fitc = app.add_subcommand("fit", "Optimize Gaussians for a dataset and export PLY, report, log, manifest");
  add_fit_flags(fitc, fit_flags);
  auto* ablate = app.add_subcommand("ablate", "Run the full pipeline and the no-covariance / no-orientation variants");
  add_fit_flags(ablate, ablate_flags);

  std::string high, low;
  int metrics_k = 15;
  bool raw_stress = false;
  auto* metrics = app.add_subcommand("metrics", "Stress-1, trustworthiness and continuity of an embedding");
  metrics->add_option("data", high, "High-dimensional CSV")->required();
  metrics->add_option("embedding", low, "PLY or 3-column CSV")->required();
  metrics->add_option("--k", metrics_k);
  metrics->add_flag("--raw-stress", raw_stress, "Skip the optimal uniform scaling in Stress-1");

  std::vector<std::string> argv{"topogs"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::vector<const char*> cargv;
  for (const auto& a : argv) cargv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return fail(err, kUsage, "usage", e.what());
  }

  try {
    std::vector<std::string> warnings;
    if (*generate) {
      if (noise >= 0) gen.noise = noise;
      cmd_generate(gen);
    } else if (*fitc) {
      const auto art = cmd_fit(resolve_fit(fit_flags), &warnings);
      out << "wrote " << art.ply.string() << ", " << art.report.string() << ", " << art.log.string() << ", "
          << art.manifest.string() << '\n';
      print_metrics(out, art.metrics_final);
    } else if (*ablate) {
      const auto variants = cmd_ablate(resolve_fit(ablate_flags), &warnings);
      for (const auto& v : variants)
        out << v.name << ": median_anisotropy=" << v.artifacts.median_anisotropy
            << " mean_alignment=" << v.artifacts.mean_alignment << '\n';
    } else if (*metrics) {
      print_metrics(out, cmd_metrics(high, low, metrics_k, raw_stress ? StressScaling::Raw : StressScaling::Optimal));
    }
    for (const auto& w : warnings) err << "topogs: warning: " << w << '\n';
    return kOk;
  } catch (const NumericalError& e) {
    return fail(err, kNumerical, "numerical", e.what());
  } catch (const UsageError& e) {
    return fail(err, kUsage, "usage", e.what());
  } catch (const DataError& e) {
    return fail(err, kData, "data", e.what());
  } catch (const std::exception& e) {
    return fail(err, kData, "io", e.what());
  }
}

}  // namespace topogs::cli
