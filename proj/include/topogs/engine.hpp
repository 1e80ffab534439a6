#pragma once

#include "topogs/core.hpp"
#include "topogs/geometry.hpp"
#include "topogs/graph.hpp"
#include "topogs/losses.hpp"

#include <filesystem>
#include <functional>
#include <vector>

namespace topogs {

// Top-3 principal projection (each direction signed so its largest-magnitude
// loading is positive), or a verbatim N x 3 CSV for external init; either way
// rescaled to mean row norm `scale`.
MatrixX3d init_means(const Dataset& d, InitStrategy strategy, const std::filesystem::path& external = {},
                     double scale = 1.0);

// init_means for a fit: scaled so the embedding and the rigidity targets
// share units, i.e. cfg.embedding_scale times the centered data's mean row norm.
MatrixX3d init_means(const Dataset& d, const FitConfig& cfg);

// Identity quaternions, constant log-scales s_init, opacities left empty.
GaussianSet init_state(const MatrixX3d& means, const FitConfig& cfg);

// log-scales clamped into [kLogScaleFloor, clamp_max].
GaussianSet clamp_scales(GaussianSet state, double clamp_max);
GaussianSet clamp_scales(GaussianSet state, Regime regime);

// Bias-corrected adaptive-moment update for one parameter block.
class AdamState {
 public:
  AdamState() = default;
  AdamState(Index rows, Index cols) : m_(MatrixXd::Zero(rows, cols)), v_(MatrixXd::Zero(rows, cols)) {}

  template <typename Derived, typename GradDerived>
  void step(Eigen::MatrixBase<Derived>& param, const Eigen::MatrixBase<GradDerived>& grad, double lr, double beta1,
            double beta2, double eps) {
    ++t_;
    m_ = beta1 * m_ + (1.0 - beta1) * grad;
    v_ = beta2 * v_ + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, t_);
    const double c2 = 1.0 - std::pow(beta2, t_);
    param -= (lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps)).matrix();
  }

  int steps() const { return t_; }

 private:
  MatrixXd m_, v_;
  int t_ = 0;
};

struct FitResult {
  GaussianSet gaussians;
  std::vector<LossReport> history;  // one entry per step, loss evaluated before the update
  MatrixX3d init_means;
  FitConfig config;
  double wall_time = 0.0;  // seconds
  NeighborGraph graph;
  TargetCache targets;     // final state of the target cache
};

struct EpochView {
  int step;
  const GaussianSet& state;  // after the optimizer update and clamps
  const TargetCache& targets;
  const LossReport& report;
};

struct FitOptions {
  std::function<void(const EpochView&)> on_epoch;
};

// Runs the optimization loop with a graph built from `d` and cfg.k.
FitResult fit(const Dataset& d, const FitConfig& cfg, const FitOptions& opts = {});

// Same, with a precomputed weighted graph over `d`.
FitResult fit(const Dataset& d, NeighborGraph graph, const FitConfig& cfg, const FitOptions& opts = {});

// Same, with precomputed initial means (skips cfg.init).
FitResult fit(const Dataset& d, NeighborGraph graph, const MatrixX3d& means, const FitConfig& cfg,
              const FitOptions& opts = {});

// One JSON object per line: step, l_r, l_c, l_o, l_total, gradient norms.
void write_training_log(const std::vector<LossReport>& history, const std::filesystem::path& path);

}  // namespace topogs
