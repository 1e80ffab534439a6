#include "topogs/ingest.hpp"

#include "topogs/errors.hpp"
#include "topogs/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace topogs {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view cell, double& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

bool parse_int(std::string_view cell, int& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::string> lines;  // data lines only, blank lines dropped
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseError::Kind::MissingFile, 0, 0, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);
  return text;
}

RawCsv read_raw(const std::filesystem::path& path, char delim, bool has_header) {
  const std::string text = read_file(path);
  RawCsv raw;
  std::istringstream in(text);
  std::string line;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (header_pending) {
      for (auto cell : split(line, delim)) raw.header.emplace_back(unquote(cell));
      header_pending = false;
      continue;
    }
    raw.lines.push_back(std::move(line));
  }
  if (raw.lines.empty())
    throw ParseError(ParseError::Kind::EmptyFile, 0, 0, "'" + path.string() + "' contains no data rows");
  return raw;
}

std::size_t resolve(const ColumnRef& ref, const std::vector<std::string>& header, std::size_t arity) {
  if (const auto* idx = std::get_if<std::size_t>(&ref)) {
    if (*idx >= arity)
      throw ParseError(ParseError::Kind::BadHeader, 0, *idx + 1,
                       "column " + std::to_string(*idx + 1) + " does not exist (file has " +
                           std::to_string(arity) + " columns)");
    return *idx;
  }
  const auto& name = std::get<std::string>(ref);
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw ParseError(ParseError::Kind::BadHeader, 0, 0, "column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

CsvSchema infer_csv_schema(const std::filesystem::path& path, char delimiter) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line) && trim(line).empty()) {
  }
  if (trim(line).empty())
    throw ParseError(ParseError::Kind::EmptyFile, 0, 0, "'" + path.string() + "' is empty");

  const auto cells = split(line, delimiter);
  CsvSchema schema;
  schema.delimiter = delimiter;
  double probe = 0.0;
  schema.has_header = !std::all_of(cells.begin(), cells.end(), [&](auto c) { return parse_double(c, probe); });
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::string name(unquote(cells[c]));
    if (schema.has_header && name == "energy")
      schema.energy_column = name;
    else if (schema.has_header && name == "label")
      schema.label_column = name;
    else
      schema.feature_columns.emplace_back(c);
  }
  return schema;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  if (schema.feature_columns.empty()) throw UsageError("csv schema declares no feature columns");
  const RawCsv raw = read_raw(path, schema.delimiter, schema.has_header);

  const std::size_t arity = schema.has_header ? raw.header.size() : split(raw.lines.front(), schema.delimiter).size();
  std::vector<std::size_t> features;
  for (const auto& ref : schema.feature_columns) features.push_back(resolve(ref, raw.header, arity));
  std::optional<std::size_t> energy_col, label_col;
  if (schema.energy_column) energy_col = resolve(*schema.energy_column, raw.header, arity);
  if (schema.label_column) label_col = resolve(*schema.label_column, raw.header, arity);
  for (auto c : {energy_col, label_col})
    if (c && std::find(features.begin(), features.end(), *c) != features.end())
      throw UsageError("energy/label column overlaps a feature column");

  const auto rows = static_cast<Index>(raw.lines.size());
  Dataset d;
  d.name = path.stem().string();
  d.points.resize(rows, static_cast<Index>(features.size()));
  if (energy_col) d.energy = VectorXd(rows);
  if (label_col) d.labels = Eigen::VectorXi(rows);

  for (Index r = 0; r < rows; ++r) {
    const auto cells = split(raw.lines[static_cast<std::size_t>(r)], schema.delimiter);
    const std::size_t row_no = static_cast<std::size_t>(r) + 1;
    if (cells.size() != arity)
      throw ParseError(ParseError::Kind::RaggedRow, row_no, 0,
                       "row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                           " fields, expected " + std::to_string(arity));
    auto numeric = [&](std::size_t c) {
      double v = 0.0;
      if (!parse_double(cells[c], v) || !std::isfinite(v))
        throw ParseError(ParseError::Kind::NonNumeric, row_no, c + 1,
                         "row " + std::to_string(row_no) + ", column " + std::to_string(c + 1) +
                             ": '" + std::string(cells[c]) + "' is not a finite number");
      return v;
    };
    for (std::size_t f = 0; f < features.size(); ++f) d.points(r, static_cast<Index>(f)) = numeric(features[f]);
    if (energy_col) (*d.energy)[r] = numeric(*energy_col);
    if (label_col) {
      int v = 0;
      if (!parse_int(cells[*label_col], v))
        throw ParseError(ParseError::Kind::NonNumeric, row_no, *label_col + 1,
                         "row " + std::to_string(row_no) + ", column " + std::to_string(*label_col + 1) +
                             ": '" + std::string(cells[*label_col]) + "' is not an integer label");
      (*d.labels)[r] = v;
    }
  }
  return d;
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (Index c = 0; c < d.dim(); ++c) out << (c ? "," : "") << 'x' << c;
  if (d.energy) out << ",energy";
  if (d.labels) out << ",label";
  out << '\n';
  out << std::setprecision(17);
  for (Index r = 0; r < d.size(); ++r) {
    for (Index c = 0; c < d.dim(); ++c) out << (c ? "," : "") << d.points(r, c);
    if (d.energy) out << ',' << (*d.energy)[r];
    if (d.labels) out << ',' << (*d.labels)[r];
    out << '\n';
  }
  if (!out) throw DataError("failed while writing '" + path.string() + "'");
}

Dataset generate_swiss_roll(Index n_samples, double noise, std::uint64_t seed) {
  if (n_samples < 10) throw UsageError("swiss roll needs at least 10 samples");
  if (!(noise >= 0)) throw UsageError("noise must be >= 0");
  constexpr double pi = std::numbers::pi;
  Rng rng(seed);
  Dataset d;
  d.name = "swiss_roll";
  d.points.resize(n_samples, 3);
  d.energy = VectorXd(n_samples);
  for (Index i = 0; i < n_samples; ++i) {
    const double t = 1.5 * pi * (1.0 + 2.0 * rng.uniform());
    const double h = 21.0 * rng.uniform();
    d.points.row(i) << t * std::cos(t), h, t * std::sin(t);
    (*d.energy)[i] = (t - 1.5 * pi) / (3.0 * pi);
  }
  if (noise > 0)
    for (Index i = 0; i < n_samples; ++i)
      for (Index c = 0; c < 3; ++c) d.points(i, c) += noise * rng.normal();
  return d;
}

Dataset generate_trajectory(Index n_samples, Index dim, double turns, double noise, std::uint64_t seed) {
  if (n_samples < 10) throw UsageError("trajectory needs at least 10 samples");
  if (dim < 3) throw UsageError("trajectory ambient dimension must be >= 3");
  if (!(turns > 0)) throw UsageError("turns must be > 0");
  if (!(noise >= 0)) throw UsageError("noise must be >= 0");
  Rng rng(seed);

  MatrixXd gauss(dim, 3);
  for (Index c = 0; c < 3; ++c)
    for (Index r = 0; r < dim; ++r) gauss(r, c) = rng.normal();
  const Eigen::HouseholderQR<MatrixXd> qr(gauss);
  const MatrixXd lift = qr.householderQ() * MatrixXd::Identity(dim, 3);

  const double theta_max = 2.0 * std::numbers::pi * turns;
  MatrixXd helix(n_samples, 3);
  Dataset d;
  d.name = "trajectory";
  d.energy = VectorXd(n_samples);
  for (Index i = 0; i < n_samples; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n_samples - 1);
    const double theta = u * theta_max;
    helix.row(i) << kHelixRadius * std::cos(theta), kHelixRadius * std::sin(theta), kHelixRise * theta;
    const double s = std::sin(std::numbers::pi * u);
    (*d.energy)[i] = s * s;
  }
  d.points = helix * lift.transpose();
  if (noise > 0)
    for (Index i = 0; i < n_samples; ++i)
      for (Index c = 0; c < dim; ++c) d.points(i, c) += noise * rng.normal();
  return d;
}

Dataset standardize(const Dataset& d) {
  if (d.size() < 2) throw DataError("standardize needs at least 2 samples");
  Dataset out = d;
  const Eigen::RowVectorXd mean = d.points.colwise().mean();
  out.points.rowwise() -= mean;
  const double mean_norm = out.points.rowwise().norm().mean();
  if (!(mean_norm > 0) || !std::isfinite(mean_norm)) throw DataError("cannot standardize: all samples are identical");
  const double scale = 1.0 / mean_norm;
  out.points *= scale;

  AffineMap map{mean, scale};
  if (d.standardization) {
    // compose with the earlier map: y = ((x - o1) s1 - m) s  =  (x - (o1 + m / s1)) s1 s
    map.offset = d.standardization->offset + mean / d.standardization->scale;
    map.scale = d.standardization->scale * scale;
  }
  out.standardization = map;
  return out;
}

}  // namespace topogs
