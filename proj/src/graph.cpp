#include "topogs/graph.hpp"

#include "topogs/errors.hpp"
#include "topogs/parallel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>

namespace topogs {

NeighborGraph build_knn(const MatrixXd& points, int k) {
  const Index n = points.rows();
  if (k < 1) throw UsageError("k must be >= 1");
  if (k >= n)
    throw UsageError("k = " + std::to_string(k) + " requires more than " + std::to_string(n) + " samples");

  NeighborGraph g;
  g.neighbors.resize(n, k);
  g.distances.resize(n, k);

  parallel_for(n, [&](std::ptrdiff_t i) {
    std::vector<std::pair<double, int>> cand;
    cand.reserve(static_cast<std::size_t>(n - 1));
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back((points.row(j) - points.row(i)).squaredNorm(), static_cast<int>(j));
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int r = 0; r < k; ++r) {
      g.neighbors(i, r) = cand[static_cast<std::size_t>(r)].second;
      g.distances(i, r) = std::sqrt(cand[static_cast<std::size_t>(r)].first);
    }
  });
  return g;
}

NeighborGraph build_knn(const Dataset& d, int k) { return build_knn(d.points, k); }

NeighborGraph compute_weights(NeighborGraph g, const KernelSigma& mode, std::vector<std::string>* warnings) {
  if (!mode.adaptive && !(mode.value > 0)) throw UsageError("fixed kernel sigma must be > 0");
  const Index n = g.size(), k = g.k();
  if (g.distances.rows() != n || g.distances.cols() != k) throw PreconditionError("graph distances are not populated");
  g.weights.resize(n, k);
  std::vector<char> fallback(static_cast<std::size_t>(n), 0);

  parallel_for(n, [&](std::ptrdiff_t i) {
    const auto dist = g.distances.row(i);
    const double sigma = mode.adaptive ? dist.mean() : mode.value;
    if (!(sigma > 0)) {
      g.weights.row(i).setConstant(1.0 / static_cast<double>(k));
      fallback[static_cast<std::size_t>(i)] = 1;
      return;
    }
    // shift by the nearest distance so the largest exponent is 0
    const double d0 = dist(0);
    double total = 0.0;
    for (Index r = 0; r < k; ++r) {
      const double w = std::exp(-(dist(r) * dist(r) - d0 * d0) / (2.0 * sigma * sigma));
      g.weights(i, r) = w;
      total += w;
    }
    g.weights.row(i) /= total;
  });

  if (warnings)
    for (Index i = 0; i < n; ++i)
      if (fallback[static_cast<std::size_t>(i)])
        warnings->push_back("point " + std::to_string(i) + " has only duplicate neighbours; using uniform weights");
  return g;
}

MatrixXd high_dim_edges(const Dataset& d, const NeighborGraph& g, Index i) {
  if (i < 0 || i >= g.size() || g.size() != d.size()) throw PreconditionError("point index out of range");
  MatrixXd e(g.k(), d.dim());
  for (Index r = 0; r < g.k(); ++r) e.row(r) = d.points.row(g.neighbors(i, r)) - d.points.row(i);
  return e;
}

namespace {

constexpr std::array<char, 4> kMagic{'T', 'G', 'S', 'G'};

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t b = 0; b < sizeof(U); ++b) bytes[b] = static_cast<char>((value >> (8 * b)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw DataError("graph sidecar is truncated");
  U value = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) value |= static_cast<U>(bytes[b]) << (8 * b);
  return value;
}

}  // namespace

void save_graph(const NeighborGraph& g, const std::filesystem::path& path) {
  if (!g.has_weights()) throw PreconditionError("graph weights must be computed before saving");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.k()));
  for (Index i = 0; i < g.neighbors.size(); ++i) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.neighbors.data()[i]));
  for (Index i = 0; i < g.distances.size(); ++i) put_le(out, std::bit_cast<std::uint64_t>(g.distances.data()[i]));
  for (Index i = 0; i < g.weights.size(); ++i) put_le(out, std::bit_cast<std::uint64_t>(g.weights.data()[i]));
  if (!out) throw DataError("failed while writing '" + path.string() + "'");
}

NeighborGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("'" + path.string() + "' is not a TGSG graph file");
  const auto n = static_cast<Index>(get_le<std::uint32_t>(in));
  const auto k = static_cast<Index>(get_le<std::uint32_t>(in));
  NeighborGraph g;
  g.neighbors.resize(n, k);
  g.distances.resize(n, k);
  g.weights.resize(n, k);
  for (Index i = 0; i < n * k; ++i) {
    const auto idx = get_le<std::uint32_t>(in);
    if (idx >= static_cast<std::uint32_t>(n)) throw DataError("graph sidecar has an out-of-range neighbour index");
    g.neighbors.data()[i] = static_cast<int>(idx);
  }
  for (Index i = 0; i < n * k; ++i) g.distances.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(in));
  for (Index i = 0; i < n * k; ++i) g.weights.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(in));
  return g;
}

}  // namespace topogs
