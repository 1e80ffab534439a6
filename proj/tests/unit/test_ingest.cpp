#include "topogs/errors.hpp"
#include "topogs/ingest.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace topogs;
namespace tt = topogs::testing;

namespace {

CsvSchema headerless(std::size_t cols) {
  CsvSchema s;
  s.has_header = false;
  for (std::size_t c = 0; c < cols; ++c) s.feature_columns.emplace_back(c);
  return s;
}

ParseError::Kind parse_kind(const std::filesystem::path& p, const CsvSchema& s) {
  try {
    load_csv(p, s);
  } catch (const ParseError& e) {
    return e.kind();
  }
  FAIL("expected a ParseError");
  return ParseError::Kind::BadHeader;
}

// k nearest by brute-force sort, excluding i
std::vector<Index> brute_knn(const MatrixXd& x, Index i, int k) {
  std::vector<std::pair<double, Index>> c;
  for (Index j = 0; j < x.rows(); ++j)
    if (j != i) c.emplace_back((x.row(j) - x.row(i)).squaredNorm(), j);
  std::sort(c.begin(), c.end());
  std::vector<Index> out;
  for (int r = 0; r < k; ++r) out.push_back(c[static_cast<std::size_t>(r)].second);
  return out;
}

}  // namespace

TEST_CASE("load_csv reads a headerless file") {
  const auto dir = tt::temp_dir("csv_plain");
  tt::write_text(dir / "a.csv", "1,2\n3,4\n5,6\n");
  const Dataset d = load_csv(dir / "a.csv", headerless(2));
  CHECK(d.size() == 3);
  CHECK(d.dim() == 2);
  CHECK(d.points(2, 1) == 6.0);
  CHECK_FALSE(d.energy);
}

TEST_CASE("load_csv routes energy and label columns") {
  const auto dir = tt::temp_dir("csv_header");
  tt::write_text(dir / "a.csv", "x0,energy,x1,label\n1,0.5,2,3\n3,0.25,4,1\n");
  const Dataset d = load_csv(dir / "a.csv", infer_csv_schema(dir / "a.csv"));
  CHECK(d.size() == 2);
  CHECK(d.dim() == 2);
  REQUIRE(d.energy);
  CHECK(d.energy->size() == 2);
  CHECK((*d.energy)[1] == 0.25);
  REQUIRE(d.labels);
  CHECK((*d.labels)[0] == 3);
  CHECK(d.points(1, 1) == 4.0);

  CsvSchema by_name;
  by_name.feature_columns = {std::string("x1")};
  by_name.energy_column = std::string("energy");
  const Dataset e = load_csv(dir / "a.csv", by_name);
  CHECK(e.dim() == 1);
  CHECK(e.points(0, 0) == 2.0);
}

TEST_CASE("load_csv errors carry location and kind") {
  const auto dir = tt::temp_dir("csv_errors");
  tt::write_text(dir / "bad.csv", "1,x\n");
  try {
    load_csv(dir / "bad.csv", headerless(2));
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseError::Kind::NonNumeric);
    CHECK(e.row() == 1);
    CHECK(e.column() == 2);
  }

  tt::write_text(dir / "ragged.csv", "1,2\n3\n");
  tt::write_text(dir / "empty.csv", "\n\n");
  CHECK(parse_kind(dir / "ragged.csv", headerless(2)) == ParseError::Kind::RaggedRow);
  CHECK(parse_kind(dir / "empty.csv", headerless(2)) == ParseError::Kind::EmptyFile);
  CHECK(parse_kind(dir / "missing.csv", headerless(2)) == ParseError::Kind::MissingFile);
  tt::write_text(dir / "inf.csv", "1,inf\n");
  CHECK(parse_kind(dir / "inf.csv", headerless(2)) == ParseError::Kind::NonNumeric);
}

TEST_CASE("load_csv honours a custom delimiter") {
  const auto dir = tt::temp_dir("csv_delim");
  tt::write_text(dir / "a.tsv", "1\t2\r\n3\t4\r\n");
  auto schema = headerless(2);
  schema.delimiter = '\t';
  const Dataset d = load_csv(dir / "a.tsv", schema);
  CHECK(d.points(1, 0) == 3.0);
}

TEST_CASE("write_csv output loads back") {
  const auto dir = tt::temp_dir("csv_roundtrip");
  const Dataset d = generate_trajectory(50, 5, 2.0, 0.01, 9);
  write_csv(d, dir / "t.csv");
  const Dataset e = load_csv(dir / "t.csv", infer_csv_schema(dir / "t.csv"));
  CHECK(e.dim() == 5);
  CHECK((e.points - d.points).norm() == 0.0);
  CHECK((*e.energy - *d.energy).norm() == 0.0);
}

TEST_CASE("swiss roll generator") {
  const Dataset a = generate_swiss_roll(100, 0.0, 7);
  const Dataset b = generate_swiss_roll(100, 0.0, 7);
  CHECK(a.points == b.points);
  CHECK(*a.energy == *b.energy);
  CHECK(generate_swiss_roll(100, 0.0, 8).points != a.points);

  constexpr double pi = std::numbers::pi;
  for (Index i = 0; i < a.size(); ++i) {
    const double t = 1.5 * pi + 3.0 * pi * (*a.energy)[i];
    const double r2 = a.points(i, 0) * a.points(i, 0) + a.points(i, 2) * a.points(i, 2);
    CHECK(std::abs(r2 - t * t) < 1e-9 * t * t);
    CHECK(a.points(i, 1) >= 0.0);
    CHECK(a.points(i, 1) <= 21.0);
  }
  CHECK_THROWS_AS(generate_swiss_roll(5, 0.0, 1), UsageError);
}

TEST_CASE("noisy swiss roll is locally two-dimensional") {
  const Dataset d = generate_swiss_roll(2000, 0.05, 7);
  int flat = 0;
  for (Index i = 0; i < d.size(); ++i) {
    const auto nb = brute_knn(d.points, i, 15);
    MatrixXd patch(15, 3);
    for (int r = 0; r < 15; ++r) patch.row(r) = d.points.row(nb[static_cast<std::size_t>(r)]);
    patch.rowwise() -= patch.colwise().mean();
    const Eigen::JacobiSVD<MatrixXd> svd(patch);
    if (svd.singularValues()[2] < 0.15 * svd.singularValues()[0]) ++flat;
  }
  CHECK(flat == d.size());
}

TEST_CASE("trajectory generator") {
  const Dataset a = generate_trajectory(200, 10, 3.0, 0.0, 4);
  CHECK(a.dim() == 10);
  CHECK(a.points == generate_trajectory(200, 10, 3.0, 0.0, 4).points);

  const double dtheta = 2.0 * std::numbers::pi * 3.0 / 199.0;
  const double chord = std::sqrt(std::pow(2.0 * kHelixRadius * std::sin(dtheta / 2.0), 2) + std::pow(kHelixRise * dtheta, 2));
  for (Index i = 0; i + 1 < a.size(); ++i) CHECK(std::abs((a.points.row(i + 1) - a.points.row(i)).norm() - chord) < 1e-10);

  CHECK_THROWS_AS(generate_trajectory(200, 2, 3.0, 0.0, 4), UsageError);
  CHECK_THROWS_AS(generate_trajectory(5, 4, 3.0, 0.0, 4), UsageError);
}

TEST_CASE("trajectory 2-NN graph follows the index chain") {
  const Dataset d = generate_trajectory(1000, 10, 3.0, 0.0, 21);
  int ok = 0, interior = 0;
  for (Index i = 1; i + 1 < d.size(); ++i) {
    ++interior;
    auto nb = brute_knn(d.points, i, 2);
    std::sort(nb.begin(), nb.end());
    if (nb[0] == i - 1 && nb[1] == i + 1) ++ok;
  }
  CHECK(ok >= 0.99 * interior);
}

TEST_CASE("standardize examples") {
  Dataset d;
  d.points.resize(2, 2);
  d.points << 0, 0, 2, 0;
  const Dataset s = standardize(d);
  MatrixXd expected(2, 2);
  expected << -1, 0, 1, 0;
  CHECK((s.points - expected).norm() < 1e-15);
  REQUIRE(s.standardization);
  CHECK(s.standardization->scale == doctest::Approx(1.0));

  Dataset flat;
  flat.points = MatrixXd::Ones(4, 3);
  CHECK_THROWS_AS(standardize(flat), DataError);
}

TEST_CASE("standardize properties") {
  std::mt19937_64 rng(17);
  Dataset d;
  d.points = tt::random_matrix(100, 5, rng, 3.0);
  d.points.rowwise() += Eigen::RowVectorXd::LinSpaced(5, 1.0, 9.0);
  const Dataset s = standardize(d);
  CHECK(std::abs(s.points.rowwise().norm().mean() - 1.0) < 1e-10);
  CHECK(s.points.colwise().mean().norm() < 1e-12);

  const Dataset twice = standardize(s);
  CHECK((twice.points - s.points).norm() < 1e-10);

  // the stored map reproduces the output
  const MatrixXd mapped = (d.points.rowwise() - twice.standardization->offset) * twice.standardization->scale;
  CHECK((mapped - twice.points).norm() < 1e-10);

  // similarity: distance ratios survive
  for (int t = 0; t < 50; ++t) {
    const Index a = t, b = t + 1, c = t + 2, e = t + 3;
    const double before = (d.points.row(a) - d.points.row(b)).norm() / (d.points.row(c) - d.points.row(e)).norm();
    const double after = (s.points.row(a) - s.points.row(b)).norm() / (s.points.row(c) - s.points.row(e)).norm();
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
  }
}
