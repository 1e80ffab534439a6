#include "topogs/commands.hpp"
#include "topogs/config_io.hpp"
#include "topogs/engine.hpp"
#include "topogs/errors.hpp"
#include "topogs/export.hpp"
#include "topogs/ingest.hpp"
#include "topogs/metrics.hpp"
#include "topogs/parallel.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace topogs;

namespace {

Dataset make_dataset(const MatrixXd& points, const std::optional<VectorXd>& energy) {
  Dataset d;
  d.points = points;
  d.energy = energy;
  d.validate();
  return d;
}

py::dict dataset_dict(const Dataset& d) {
  py::dict out;
  out["points"] = d.points;
  out["energy"] = d.energy;
  return out;
}

py::dict gaussians_dict(const GaussianSet& g) {
  py::dict out;
  out["means"] = g.means;
  out["log_scales"] = g.log_scales;
  out["quaternions"] = g.quaternions;
  if (g.opacities.size() > 0) out["opacities"] = g.opacities;
  return out;
}

py::dict metrics_dict(const MetricsReport& m) {
  py::dict out;
  out["stress1"] = m.stress1;
  out["trustworthiness"] = m.trustworthiness;
  out["continuity"] = m.continuity;
  out["k"] = m.k;
  return out;
}

py::dict fit_impl(const MatrixXd& points, const std::optional<VectorXd>& energy, const std::string& config_json,
                  bool standardize_input) {
  Dataset d = make_dataset(points, energy);
  if (standardize_input) d = standardize(d);
  const FitConfig cfg = config_from_json(nlohmann::json::parse(config_json));
  FitResult r;
  {
    py::gil_scoped_release release;
    r = fit(d, cfg);
  }
  py::dict out = gaussians_dict(r.gaussians);
  out["init_means"] = r.init_means;
  py::list history;
  for (const auto& h : r.history) {
    py::dict row;
    row["l_r"] = h.l_r;
    row["l_c"] = h.l_c;
    row["l_o"] = h.l_o;
    row["l_total"] = h.l_total;
    history.append(row);
  }
  out["history"] = history;
  out["config"] = config_to_json(r.config).dump();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Topology-preserving Gaussian splat embeddings";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<UsageError> usage(m, "UsageError", base.ptr());
  static py::exception<DataError> data(m, "DataError", base.ptr());
  static py::exception<NumericalError> numerical(m, "NumericalError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const UsageError& e) {
      PyErr_SetString(usage.ptr(), e.what());
    } catch (const DataError& e) {
      PyErr_SetString(data.ptr(), e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(numerical.ptr(), e.what());
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(usage.ptr(), e.what());
    }
  });

  m.def("set_num_threads", &set_num_threads, py::arg("n"));
  m.def("num_threads", &num_threads);

  m.def("generate_swiss_roll",
        [](Index n, double noise, std::uint64_t seed) { return dataset_dict(generate_swiss_roll(n, noise, seed)); },
        py::arg("n"), py::arg("noise"), py::arg("seed"));
  m.def("generate_trajectory",
        [](Index n, Index dim, double turns, double noise, std::uint64_t seed) {
          return dataset_dict(generate_trajectory(n, dim, turns, noise, seed));
        },
        py::arg("n"), py::arg("dim"), py::arg("turns"), py::arg("noise"), py::arg("seed"));
  m.def("standardize", [](const MatrixXd& points) { return standardize(make_dataset(points, std::nullopt)).points; },
        py::arg("points"));

  m.def("default_config", [] { return config_to_json(FitConfig{}).dump(); });
  m.def("fit", &fit_impl, py::arg("points"), py::arg("energy"), py::arg("config_json"),
        py::arg("standardize_input"));

  m.def("stress1", [](const MatrixXd& high, const MatrixXd& low) { return stress1(high, low).value; },
        py::arg("high"), py::arg("low"));
  m.def("trustworthiness", &trustworthiness, py::arg("high"), py::arg("low"), py::arg("k"));
  m.def("continuity", &continuity, py::arg("high"), py::arg("low"), py::arg("k"));
  m.def("compute_metrics",
        [](const MatrixXd& high, const MatrixXd& low, int k) { return metrics_dict(compute_metrics(high, low, k)); },
        py::arg("high"), py::arg("low"), py::arg("k"));

  m.def("read_ply", [](const std::filesystem::path& path) {
    const PlyData p = read_ply(path);
    py::dict out = gaussians_dict(p.gaussians);
    out["colors"] = p.colors;
    return out;
  });

  m.def("run", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
