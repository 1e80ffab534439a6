#include "topogs/engine.hpp"

#include "topogs/errors.hpp"
#include "topogs/ingest.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <string>

namespace topogs {
namespace {

MatrixX3d with_mean_norm(MatrixX3d m, double scale) {
  const double mean_norm = m.rowwise().norm().mean();
  if (!(mean_norm > 0) || !std::isfinite(mean_norm)) throw DataError("initial embedding is degenerate (all points coincide)");
  return m * (scale / mean_norm);
}

MatrixX3d pca3(const MatrixXd& points) {
  const MatrixXd centered = points.rowwise() - points.colwise().mean();
  const MatrixXd cov = centered.transpose() * centered;
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed during PCA init");

  const Index dim = points.cols();
  const Index used = std::min<Index>(3, dim);
  MatrixXd basis = MatrixXd::Zero(dim, 3);
  for (Index c = 0; c < used; ++c) {
    // eigenvalues ascend; take from the back
    Eigen::VectorXd v = eig.eigenvectors().col(dim - 1 - c);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    basis.col(c) = v;
  }
  return centered * basis;
}

}  // namespace

MatrixX3d init_means(const Dataset& d, InitStrategy strategy, const std::filesystem::path& external, double scale) {
  if (strategy == InitStrategy::Pca3) return with_mean_norm(pca3(d.points), scale);

  const auto schema = infer_csv_schema(external);
  const Dataset emb = load_csv(external, schema);
  if (emb.size() != d.size() || emb.dim() != 3)
    throw DataError("external embedding is " + std::to_string(emb.size()) + " x " + std::to_string(emb.dim()) +
                    ", expected " + std::to_string(d.size()) + " x 3");
  return with_mean_norm(emb.points, scale);
}

MatrixX3d init_means(const Dataset& d, const FitConfig& cfg) {
  const MatrixXd centered = d.points.rowwise() - d.points.colwise().mean();
  return init_means(d, cfg.init, cfg.init_path, cfg.embedding_scale * centered.rowwise().norm().mean());
}

GaussianSet init_state(const MatrixX3d& means, const FitConfig& cfg) {
  GaussianSet s;
  const Index n = means.rows();
  s.means = means;
  s.log_scales = MatrixX3d::Constant(n, 3, cfg.s_init);
  s.quaternions = MatrixX4d::Zero(n, 4);
  s.quaternions.col(0).setOnes();
  return s;
}

GaussianSet clamp_scales(GaussianSet state, double clamp_max) {
  state.log_scales = state.log_scales.cwiseMax(kLogScaleFloor).cwiseMin(clamp_max);
  return state;
}

GaussianSet clamp_scales(GaussianSet state, Regime regime) {
  return clamp_scales(std::move(state), regime_scale_clamp(regime));
}

FitResult fit(const Dataset& d, const FitConfig& cfg, const FitOptions& opts) {
  cfg.validate();
  d.validate();
  auto graph = compute_weights(build_knn(d, cfg.k), cfg.kernel_sigma);
  return fit(d, std::move(graph), cfg, opts);
}

FitResult fit(const Dataset& d, NeighborGraph graph, const FitConfig& cfg, const FitOptions& opts) {
  cfg.validate();
  d.validate();
  const MatrixX3d means = init_means(d, cfg);
  return fit(d, std::move(graph), means, cfg, opts);
}

FitResult fit(const Dataset& d, NeighborGraph graph, const MatrixX3d& means, const FitConfig& cfg,
              const FitOptions& opts) {
  cfg.validate();
  d.validate();
  if (graph.size() != d.size() || !graph.has_weights())
    throw PreconditionError("graph does not match the dataset or lacks weights");
  if (means.rows() != d.size()) throw PreconditionError("initial means do not match the dataset");

  const auto start = std::chrono::steady_clock::now();
  FitResult result;
  result.config = cfg;
  result.init_means = means;
  result.gaussians = clamp_scales(init_state(means, cfg), cfg.resolved_scale_clamp());

  GaussianSet& state = result.gaussians;
  TargetCache& cache = result.targets;
  const Index n = d.size();
  AdamState adam_means(n, 3), adam_scales(n, 3), adam_quats(n, 4);
  const int freeze = cfg.resolved_freeze_epoch();
  Dataset scaled;
  scaled.points = d.points * cfg.embedding_scale;
  const double clamp_max = cfg.resolved_scale_clamp();

  for (int step = 1; step <= cfg.epochs; ++step) {
    const bool initial = step == 1;
    if (initial || should_update_targets(step, cfg)) {
      update_rigidity_targets(cache, scaled, graph, state.means, cfg, step);
      if (cfg.regime == Regime::Trajectory1D) update_covariance_targets(cache, cfg.regime, graph, state.means);
    }
    // the initial build happens even when freezing at step 0
    if (step > freeze) cache.frozen = true;
    if (cfg.regime == Regime::Surface2D) update_covariance_targets(cache, cfg.regime, graph, state.means);

    auto [report, grad] = total_loss(cfg, state, cache, graph);
    if (!std::isfinite(report.l_total) || !std::isfinite(grad.norm()))
      throw NumericalError("non-finite loss at step " + std::to_string(step) + " (l_r=" + std::to_string(report.l_r) +
                           ", l_c=" + std::to_string(report.l_c) + ", l_o=" + std::to_string(report.l_o) + ")");

    adam_means.step(state.means, grad.means, cfg.lr_means, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    adam_scales.step(state.log_scales, grad.log_scales, cfg.lr_scales, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    adam_quats.step(state.quaternions, grad.quaternions, cfg.lr_quats, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

    state.log_scales = state.log_scales.cwiseMax(kLogScaleFloor).cwiseMin(clamp_max);
    for (Index i = 0; i < n; ++i) {
      const double norm = state.quaternions.row(i).norm();
      if (norm > 0 && std::isfinite(norm))
        state.quaternions.row(i) /= norm;
      else
        state.quaternions.row(i) << 1, 0, 0, 0;
    }

    result.history.push_back(report);
    if (opts.on_epoch) opts.on_epoch(EpochView{step, state, cache, result.history.back()});
  }

  result.graph = std::move(graph);
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_training_log(const std::vector<LossReport>& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (std::size_t s = 0; s < history.size(); ++s) {
    const auto& h = history[s];
    nlohmann::ordered_json row{{"step", s + 1},          {"l_r", h.l_r},
                               {"l_c", h.l_c},           {"l_o", h.l_o},
                               {"l_total", h.l_total},   {"grad_norm_r", h.grad_norm_r},
                               {"grad_norm_c", h.grad_norm_c}, {"grad_norm_o", h.grad_norm_o}};
    out << row.dump() << '\n';
  }
  if (!out) throw DataError("failed while writing '" + path.string() + "'");
}

}  // namespace topogs
