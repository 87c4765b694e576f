#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "thermo/cli.hpp"
#include "thermo/dataset.hpp"
#include "thermo/error_chain.hpp"
#include "thermo/errors.hpp"
#include "thermo/models.hpp"
#include "thermo/node_select.hpp"
#include "thermo/report.hpp"
#include "thermo/thermal_sim.hpp"

namespace py = pybind11;
using namespace thermo;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const auto* p = a.data();
  return Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                std::vector<double>(p, p + a.size()));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array to_array(const ad::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

ad::Tensor to_tensor(const Array& a) {
  ad::Shape shape(a.shape(), a.shape() + a.ndim());
  return ad::Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict series_dict(const dataset::NodeTimeSeries& s) {
  py::dict d;
  d["run_id"] = s.run_id();
  d["quantity"] = std::string(dataset::to_string(s.quantity()));
  d["timestamps"] = py::array_t<double>(static_cast<py::ssize_t>(s.timestamps().size()), s.timestamps().data());
  d["values"] = to_array(s.values());
  d["node_ids"] = s.node_ids();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Thermal surrogate toolkit for machine tools.";

  // ThermoError.args[0] is the message; the kind name prefixes it ("ConfigError: ...").
  py::register_exception<Error>(m, "ThermoError", PyExc_RuntimeError);
  m.def("error_kind_names", [] {
    std::vector<std::string> names;
    for (int k = 0; k <= static_cast<int>(ErrorKind::UsageError); ++k) {
      names.emplace_back(to_string(static_cast<ErrorKind>(k)));
    }
    return names;
  });

  // dataset / simulation
  m.def("load_csv", [](const std::filesystem::path& p, const std::string& quantity) {
    return series_dict(dataset::load_csv(p, dataset::parse_quantity(quantity)));
  }, py::arg("path"), py::arg("quantity") = "temperature");
  m.def("simulate", [](const std::filesystem::path& config, std::size_t runs, std::uint64_t seed) {
    const auto suite = sim::make_run_suite(runs, sim::load_layout(config), seed);
    py::list out;
    for (const auto& r : suite) {
      py::dict d;
      d["temperature"] = series_dict(r.temperature);
      d["heatflux"] = series_dict(r.heat_flux);
      out.append(d);
    }
    return out;
  }, py::arg("config"), py::arg("runs") = 12, py::arg("seed") = cli::kDefaultSeed);

  // node selection
  m.def("pearson_matrix", [](const Array& values) {
    const auto c = select::pearson_matrix(to_matrix(values));
    Matrix out(c.size, c.size, c.rho);
    return to_array(out);
  }, py::arg("values"));
  m.def("build_plan", [](const Array& values, double tau) {
    return select::to_json(select::build_plan(select::pearson_matrix(to_matrix(values)), tau));
  }, py::arg("values"), py::arg("tau") = select::kDefaultTau,
     "Selection plan as a JSON document.");
  m.def("reconstruct", [](const std::string& plan_json, const Array& retained) {
    return to_array(select::reconstruct(select::plan_from_json(plan_json), to_matrix(retained)));
  }, py::arg("plan_json"), py::arg("retained_values"));

  // models
  py::class_<models::ModelSpec>(m, "ModelSpec")
      .def(py::init([](const std::string& kind, std::size_t d_in, std::size_t d_out, std::size_t hidden,
                       std::size_t layers, double dropout, std::size_t heads, std::size_t kernel_size,
                       std::uint64_t seed) {
             models::ModelSpec s{models::parse_architecture(kind), d_in, d_out, hidden, layers, dropout, heads,
                                 kernel_size, seed};
             s.validate();
             return s;
           }),
           py::arg("kind"), py::arg("d_in"), py::arg("d_out"), py::arg("hidden") = 32, py::arg("layers") = 1,
           py::arg("dropout") = 0.0, py::arg("heads") = 2, py::arg("kernel_size") = 3, py::arg("seed") = 0)
      .def_property_readonly("kind", [](const models::ModelSpec& s) { return std::string(models::to_string(s.kind)); })
      .def_readonly("d_in", &models::ModelSpec::d_in)
      .def_readonly("d_out", &models::ModelSpec::d_out)
      .def_readonly("hidden", &models::ModelSpec::hidden)
      .def_readonly("layers", &models::ModelSpec::layers)
      .def_readonly("seed", &models::ModelSpec::seed)
      .def("__repr__", [](const models::ModelSpec& s) {
        return "ModelSpec(" + std::string(models::to_string(s.kind)) + ", d_in=" + std::to_string(s.d_in) +
               ", hidden=" + std::to_string(s.hidden) + ", layers=" + std::to_string(s.layers) + ")";
      });
  m.def("init_parameters", [](const models::ModelSpec& s) {
    std::map<std::string, Array> out;
    for (const auto& [name, t] : models::init_parameters(s)) out.emplace(name, to_array(t));
    return out;
  });
  m.def("parameter_count", [](const models::ModelSpec& s) { return models::parameter_count(s); });
  m.def("predict", [](const models::ModelSpec& s, const std::map<std::string, Array>& params, const Array& batch) {
    models::Parameters p;
    for (const auto& [name, a] : params) p.emplace(name, to_tensor(a));
    return to_array(models::predict(s, p, to_tensor(batch)));
  }, py::arg("spec"), py::arg("params"), py::arg("batch"));

  // error chain
  m.def("thermal_strain", &chain::thermal_strain, py::arg("alpha"), py::arg("delta_t"));
  m.def("thermal_stress", &chain::thermal_stress, py::arg("youngs_modulus"), py::arg("alpha"), py::arg("delta_t"));
  m.def("tcp_drift", [](const std::filesystem::path& chain_file, const std::vector<std::string>& node_ids,
                        const std::vector<double>& temperatures) {
    const auto c = chain::load_chain(chain_file);
    const auto d = chain::tcp_drift(c, node_ids, temperatures);
    py::dict out;
    out["drift"] = d.drift;
    out["offset"] = chain::compensation_offset(d);
    out["orientation"] = d.orientation;
    return out;
  }, py::arg("chain"), py::arg("node_ids"), py::arg("temperatures"));

  // report / cli
  m.def("format_cell", &report::format_cell, py::arg("mse_mean"), py::arg("mse_std"));
  m.def("run_cli", [](const std::vector<std::string>& args) {
    py::gil_scoped_release release;
    return cli::run(args);
  }, py::arg("args"), "Runs one CLI subcommand in-process and returns its exit code.");
}
