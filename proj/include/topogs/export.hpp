#pragma once

#include "topogs/core.hpp"
#include "topogs/engine.hpp"
#include "topogs/metrics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace topogs {

inline constexpr double kOpacityMin = 0.15;
inline constexpr double kOpacityMax = 0.95;
inline constexpr double kOpacityExponent = 1.5;
inline constexpr double kSurfaceOpacity = 0.85;
inline constexpr double kSurfaceScaleExpansion = 0.5;
inline constexpr double kShC0 = 0.2820947917738781;

// Trajectory: 0.15 + 0.80 * E^1.5 with E the min-max normalized energy
// (constant energy maps to E = 0.5 with a warning). Surface: 0.85 everywhere.
VectorXd opacity_map(Regime regime, const std::optional<VectorXd>& energy, Index n,
                     std::vector<std::string>* warnings = nullptr);

// Returns a copy; surface log-scales grow by `delta`, trajectory is untouched.
GaussianSet visual_scale_expand(const GaussianSet& state, Regime regime, double delta = kSurfaceScaleExpansion);

// Viridis-like ramp for t in [0, 1].
Vector3d colormap(double t);

// Colours by min-max normalized energy, or by row index when there is none.
MatrixX3d default_colors(const std::optional<VectorXd>& energy, Index n);

// Binary little-endian PLY with 17 float properties per vertex:
// x y z nx ny nz f_dc_0..2 opacity scale_0..2 rot_0..3.
void write_ply(const GaussianSet& state, const MatrixX3d& colors, const std::filesystem::path& path,
               std::vector<std::string>* warnings = nullptr);

struct PlyData {
  GaussianSet gaussians;  // opacities recovered through the sigmoid
  MatrixX3d colors;       // decoded from f_dc
  std::size_t header_bytes = 0;
};

// Reads any binary little-endian PLY whose vertex properties are all float;
// fields other than position are optional and default to zero/identity.
PlyData read_ply(const std::filesystem::path& path);

// Structured run report (JSON): config echo, init/final metrics, relative
// stress change and a loss-history summary. Deterministic for a fixed run.
void write_report(const FitResult& result, const MetricsReport& metrics_init, const MetricsReport& metrics_final,
                  const std::filesystem::path& path);

}  // namespace topogs
