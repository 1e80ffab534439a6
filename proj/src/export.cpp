#include "topogs/export.hpp"

#include "topogs/config_io.hpp"
#include "topogs/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

namespace topogs {
namespace {

constexpr std::array<const char*, 17> kPlyProperties{
    "x",       "y",       "z",       "nx",      "ny",      "nz",      "f_dc_0",  "f_dc_1", "f_dc_2",
    "opacity", "scale_0", "scale_1", "scale_2", "rot_0",   "rot_1",   "rot_2",   "rot_3"};

void put_f32(std::string& buf, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

float get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return std::bit_cast<float>(bits);
}

VectorXd min_max(const VectorXd& v, bool& constant) {
  const double lo = v.minCoeff(), hi = v.maxCoeff();
  constant = !(hi > lo);
  if (constant) return VectorXd::Constant(v.size(), 0.5);
  return (v.array() - lo) / (hi - lo);
}

}  // namespace

VectorXd opacity_map(Regime regime, const std::optional<VectorXd>& energy, Index n, std::vector<std::string>* warnings) {
  if (regime == Regime::Surface2D) return VectorXd::Constant(n, kSurfaceOpacity);
  if (!energy) throw PreconditionError("trajectory opacity mapping requires an energy feature");
  if (energy->size() != n) throw PreconditionError("energy length does not match the number of Gaussians");
  bool constant = false;
  const VectorXd e = min_max(*energy, constant);
  if (constant && warnings) warnings->push_back("energy is constant; opacity uses normalized energy 0.5 everywhere");
  return (kOpacityMin + (kOpacityMax - kOpacityMin) * e.array().pow(kOpacityExponent)).matrix();
}

GaussianSet visual_scale_expand(const GaussianSet& state, Regime regime, double delta) {
  GaussianSet out = state;
  if (regime == Regime::Surface2D) out.log_scales.array() += delta;
  return out;
}

Vector3d colormap(double t) {
  t = std::clamp(t, 0.0, 1.0);
  static const std::array<Vector3d, 7> c{
      Vector3d(0.2777273272234177, 0.005407344544966578, 0.3340998053353061),
      Vector3d(0.1050930431085774, 1.404613529898575, 1.384590162594685),
      Vector3d(-0.3308618287255563, 0.214847559468213, 0.09509516302823659),
      Vector3d(-4.634230498983486, -5.799100973351585, -19.33244095627987),
      Vector3d(6.228269936347081, 14.17993336680509, 56.69055260068105),
      Vector3d(4.776384997670288, -13.74514537774601, -65.35303263337234),
      Vector3d(-5.435455855934631, 4.645852612178535, 26.3124352495832)};
  Vector3d rgb = c[6];
  for (int i = 5; i >= 0; --i) rgb = c[static_cast<std::size_t>(i)] + t * rgb;
  return rgb.cwiseMax(0.0).cwiseMin(1.0);
}

MatrixX3d default_colors(const std::optional<VectorXd>& energy, Index n) {
  VectorXd t;
  if (energy && energy->size() == n) {
    bool constant = false;
    t = min_max(*energy, constant);
  } else {
    t = VectorXd::LinSpaced(n, 0.0, 1.0);
  }
  MatrixX3d colors(n, 3);
  for (Index i = 0; i < n; ++i) colors.row(i) = colormap(t[i]).transpose();
  return colors;
}

void write_ply(const GaussianSet& state, const MatrixX3d& colors, const std::filesystem::path& path,
               std::vector<std::string>* warnings) {
  const Index n = state.size();
  if (state.opacities.size() != n) throw PreconditionError("opacities must be populated before export");
  if (colors.rows() != n) throw PreconditionError("colour matrix does not match the number of Gaussians");

  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\nelement vertex " << n << '\n';
  for (const char* p : kPlyProperties) header << "property float " << p << '\n';
  header << "end_header\n";

  std::string buf = header.str();
  buf.reserve(buf.size() + static_cast<std::size_t>(n) * kPlyProperties.size() * 4);
  std::size_t clamped = 0;
  for (Index i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) put_f32(buf, state.means(i, c));
    for (int c = 0; c < 3; ++c) put_f32(buf, 0.0);
    for (int c = 0; c < 3; ++c) put_f32(buf, (colors(i, c) - 0.5) / kShC0);
    double alpha = state.opacities[i];
    if (!(alpha > 0.0 && alpha < 1.0)) {
      alpha = std::clamp(std::isfinite(alpha) ? alpha : 0.5, 1e-4, 1.0 - 1e-4);
      ++clamped;
    }
    put_f32(buf, std::log(alpha / (1.0 - alpha)));
    for (int c = 0; c < 3; ++c) put_f32(buf, state.log_scales(i, c));
    for (int c = 0; c < 4; ++c) put_f32(buf, state.quaternions(i, c));
  }
  if (clamped && warnings)
    warnings->push_back(std::to_string(clamped) + " opacities outside (0, 1) were clamped before the logit");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("failed while writing '" + path.string() + "'");
}

PlyData read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const std::string end_marker = "end_header\n";
  const auto end = bytes.find(end_marker);
  if (bytes.rfind("ply\n", 0) != 0 || end == std::string::npos) throw DataError("'" + path.string() + "' is not a PLY file");
  const std::size_t header_bytes = end + end_marker.size();

  std::istringstream header(bytes.substr(0, end));
  std::string line;
  Index n = -1;
  bool in_vertex = false, little_endian = false;
  std::map<std::string, std::size_t> columns;
  std::size_t n_props = 0;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      little_endian = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      long long count = 0;
      ls >> name >> count;
      if (in_vertex || n >= 0) {
        if (name == "vertex") throw DataError("PLY has more than one vertex element");
        in_vertex = false;  // only a leading vertex element is supported
        continue;
      }
      in_vertex = name == "vertex";
      if (!in_vertex) throw DataError("PLY must start with the vertex element");
      n = static_cast<Index>(count);
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      if (type != "float" && type != "float32") throw DataError("PLY vertex property '" + name + "' is not float");
      columns[name] = n_props++;
    }
  }
  if (!little_endian) throw DataError("only binary_little_endian PLY files are supported");
  if (n < 0) throw DataError("PLY has no vertex element");
  for (const char* req : {"x", "y", "z"})
    if (!columns.count(req)) throw DataError(std::string("PLY lacks the '") + req + "' property");
  const std::size_t stride = n_props * 4;
  if (bytes.size() < header_bytes + static_cast<std::size_t>(n) * stride) throw DataError("PLY vertex data is truncated");

  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data()) + header_bytes;
  auto field = [&](Index i, const char* name, double fallback) -> double {
    const auto it = columns.find(name);
    if (it == columns.end()) return fallback;
    return get_f32(base + static_cast<std::size_t>(i) * stride + it->second * 4);
  };

  PlyData out;
  out.header_bytes = header_bytes;
  auto& g = out.gaussians;
  g.means.resize(n, 3);
  g.log_scales.resize(n, 3);
  g.quaternions.resize(n, 4);
  g.opacities.resize(n);
  out.colors.resize(n, 3);
  for (Index i = 0; i < n; ++i) {
    g.means.row(i) << field(i, "x", 0), field(i, "y", 0), field(i, "z", 0);
    g.log_scales.row(i) << field(i, "scale_0", 0), field(i, "scale_1", 0), field(i, "scale_2", 0);
    g.quaternions.row(i) << field(i, "rot_0", 1), field(i, "rot_1", 0), field(i, "rot_2", 0), field(i, "rot_3", 0);
    g.opacities[i] = 1.0 / (1.0 + std::exp(-field(i, "opacity", 0)));
    for (int c = 0; c < 3; ++c) {
      const std::string name = "f_dc_" + std::to_string(c);
      out.colors(i, c) = field(i, name.c_str(), 0) * kShC0 + 0.5;
    }
  }
  return out;
}

void write_report(const FitResult& result, const MetricsReport& metrics_init, const MetricsReport& metrics_final,
                  const std::filesystem::path& path) {
  if (metrics_init.k != metrics_final.k) throw PreconditionError("init and final metrics were computed with different k");

  auto metrics_json = [](const MetricsReport& m) {
    return nlohmann::ordered_json{{"stress1", m.stress1},
                                  {"trustworthiness", m.trustworthiness},
                                  {"continuity", m.continuity},
                                  {"k", m.k},
                                  {"n_pairs_used", m.n_pairs_used}};
  };

  nlohmann::ordered_json report;
  report["n_points"] = result.gaussians.size();
  report["config"] = config_to_json(result.config);
  report["metrics_init"] = metrics_json(metrics_init);
  report["metrics_final"] = metrics_json(metrics_final);
  if (metrics_init.stress1 > 0)
    report["stress1_relative_change"] = (metrics_final.stress1 - metrics_init.stress1) / metrics_init.stress1;
  else
    report["stress1_relative_change"] = nullptr;
  report["stress1_absolute_change"] = metrics_final.stress1 - metrics_init.stress1;

  nlohmann::ordered_json hist;
  hist["epochs"] = result.history.size();
  if (!result.history.empty()) {
    const auto& first = result.history.front();
    const auto& last = result.history.back();
    auto row = [](const LossReport& r) {
      return nlohmann::ordered_json{{"l_r", r.l_r}, {"l_c", r.l_c}, {"l_o", r.l_o}, {"l_total", r.l_total}};
    };
    hist["first"] = row(first);
    hist["final"] = row(last);
    double best = first.l_total;
    for (const auto& r : result.history) best = std::min(best, r.l_total);
    hist["min_l_total"] = best;
  }
  report["loss_history"] = hist;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << report.dump(2) << '\n';
  if (!out) throw DataError("failed while writing '" + path.string() + "'");
}

}  // namespace topogs
