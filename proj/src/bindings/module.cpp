#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "surveyfuse/config.hpp"
#include "surveyfuse/index_report.hpp"
#include "surveyfuse/inference.hpp"
#include "surveyfuse/simulate.hpp"

namespace py = pybind11;
using namespace surveyfuse;

namespace {

py::dict hyper_summary_dict(const std::vector<HyperSummary>& hyper) {
  py::dict d;
  for (const auto& h : hyper) {
    py::dict row;
    row["mean"] = h.mean;
    row["sd"] = h.sd;
    row["lo95"] = h.lo95;
    row["hi95"] = h.hi95;
    d[h.name.c_str()] = row;
  }
  return d;
}

py::dict submodel_dict(const SubmodelFit& sm) {
  py::dict d;
  d["hyper"] = hyper_summary_dict(sm.hyper);
  d["waic"] = sm.waic.waic;
  d["p_eff"] = sm.waic.p_eff;
  d["n_grid_points"] = sm.n_grid_points;
  const LatentLayout& lay = sm.layout;
  auto block = [&](int off, int n) {
    py::list rows;
    for (int i = 0; i < n; ++i) {
      rows.append(py::make_tuple(sm.latent[off + i].mean, sm.latent[off + i].sd));
    }
    return rows;
  };
  d["beta"] = block(lay.beta_offset(), lay.n_species);
  d["gear_effects"] = block(lay.gear_offset(), lay.n_gears);
  d["field_dim"] = lay.field_dim;
  return d;
}

std::vector<HaulRecord> records_from_tuples(
    const std::vector<std::tuple<double, double, int, std::string, std::string,
                                 double>>& rows) {
  std::vector<HaulRecord> records;
  records.reserve(rows.size());
  for (const auto& [lon, lat, year, gear, species, value] : rows)
    records.push_back({lon, lat, year, gear, species, value});
  return records;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "surveyfuse: Bayesian spatio-temporal hurdle models for fused fish surveys";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

  m.def("matern_correlation",
        [](double delta, double range, double sigma) {
          return matern_correlation(delta, MaternParams::from_range_sigma(range, sigma));
        },
        py::arg("delta"), py::arg("range"), py::arg("sigma") = 1.0);

  m.def("project_coordinates", &project_coordinates, py::arg("lon"),
        py::arg("lat"), py::arg("reference_lat"));

  m.def("back_transform", &back_transform, py::arg("eta1"), py::arg("eta2"));
  m.def("rms", &rms, py::arg("b"));
  m.def("scale_index", &scale_index, py::arg("b"));
  m.def("compute_waic", [](const Eigen::MatrixXd& lpd) {
    const WaicResult w = compute_waic(lpd);
    return py::make_tuple(w.waic, w.p_eff);
  });

  py::class_<Mesh>(m, "Mesh")
      .def_property_readonly("n_vertices", &Mesh::n_vertices)
      .def_property_readonly("n_triangles", &Mesh::n_triangles)
      .def_property_readonly("vertices",
                             [](const Mesh& mesh) { return mesh.vertices; })
      .def_property_readonly("triangles",
                             [](const Mesh& mesh) { return mesh.triangles; });

  m.def("build_mesh", &build_mesh, py::arg("locations"),
        py::arg("inner_max_edge"), py::arg("outer_extension") = 0.0,
        py::arg("outer_max_edge") = 0.0);

  m.def("projection_matrix",
        [](const Mesh& mesh, const std::vector<std::array<double, 2>>& locs) {
          return Eigen::MatrixXd(projection_matrix(mesh, locs));
        });

  m.def("ar1_precision", [](double rho, int t) {
    return Eigen::MatrixXd(ar1_precision({rho, t}).matrix());
  });

  m.def("spde_precision",
        [](const Mesh& mesh, double range, double sigma) {
          const FemMatrices fem = fem_matrices(mesh);
          return Eigen::MatrixXd(
              spde_precision(fem, MaternParams::from_range_sigma(range, sigma))
                  .matrix());
        },
        py::arg("mesh"), py::arg("range"), py::arg("sigma") = 1.0);

  m.def("sample_gmrf", [](const Eigen::MatrixXd& q, std::uint64_t seed) {
    return sample_gmrf(SparsePrecision(q.sparseView()), seed);
  });

  m.def("split_hurdle", [](const std::vector<double>& values) {
    std::vector<HaulRecord> records(values.size());
    for (size_t i = 0; i < values.size(); ++i) records[i].value = values[i];
    const HurdleTables t = split_hurdle(records);
    return py::make_tuple(t.detection.z, t.abundance.record_index,
                          t.abundance.log_value);
  });

  m.def(
      "simulate_survey",
      [](const std::string& config_json) {
        const RunConfig cfg = parse_config(config_json);
        if (!cfg.has_scenario)
          throw ValidationError("config has no 'simulate' section");
        const SimResult sim = simulate_survey(cfg.scenario);
        py::list rows;
        for (const auto& r : sim.records)
          rows.append(py::make_tuple(r.lon, r.lat, r.year, r.gear, r.species,
                                     r.value));
        return rows;
      },
      py::arg("config_json"));

  m.def(
      "fit",
      [](const std::string& config_json,
         const std::vector<std::tuple<double, double, int, std::string,
                                      std::string, double>>& rows) {
        const RunConfig cfg = parse_config(config_json);
        const FitResult r = fit(cfg.fit_settings(), records_from_tuples(rows));
        py::dict d;
        d["variant"] = variant_name(r.spec.variant);
        d["n_records"] = r.n_records;
        d["n_positive"] = r.n_positive;
        d["waic_total"] = r.waic_total;
        d["detection"] = submodel_dict(r.detection);
        d["abundance"] = submodel_dict(r.abundance);
        d["warnings"] = r.warnings;
        return d;
      },
      py::arg("config_json"), py::arg("records"));
}
