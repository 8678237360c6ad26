#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "magheat/decay.hpp"
#include "magheat/error.hpp"
#include "magheat/exact.hpp"
#include "magheat/harness.hpp"
#include "magheat/spectral.hpp"

namespace py = pybind11;
using namespace magheat;
using nlohmann::json;

namespace {

FieldSpec parse_spec(const std::string& text) {
  try {
    return json::parse(text).get<FieldSpec>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field spec: ") + e.what());
  }
}

std::string run_json(const std::string& config, const std::string& out_dir, int workers) {
  ExperimentConfig cfg;
  try {
    cfg = json::parse(config).get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunRecord r = run(cfg, RunOptions{out_dir, workers});
  return json(r).dump();
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of magheat";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ResolutionError>(m, "ResolutionError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

  m.def("total_flux", [](const std::string& spec) { return total_flux(make_field(parse_spec(spec))); });
  m.def("beta", [](double flux) { return beta_of_flux(flux); });
  m.def("alpha_infinity", [](const std::string& spec, double theta) {
    return alpha_infinity(make_field(parse_spec(spec)), theta);
  });
  m.def("ab_spectrum", [](double flux, int count) {
    std::vector<std::tuple<double, int, int, int>> out;
    for (const auto& l : ab_spectrum(flux, count).levels)
      out.emplace_back(l.value, l.n, l.m, l.multiplicity);
    return out;
  });
  m.def("radial_levels", [](int m_, double flux, int k, double R_max, int M) {
    auto v = RadialOperator(m_, flux, R_max, M).lowest(k).values;
    return std::vector<double>(v.data(), v.data() + v.size());
  }, py::arg("m"), py::arg("flux"), py::arg("k"), py::arg("R_max") = 20.0, py::arg("M") = 4000);
  m.def("lambda_curve", [](const std::string& spec, std::vector<double> s, double R_dom, int N) {
    py::gil_scoped_release release;
    std::vector<double> out;
    for (const auto& sm : lambda_curve(make_field(parse_spec(spec)), s, build_grid(R_dom, N), {}))
      out.push_back(sm.lambda);
    return out;
  });
  m.def("free_gaussian_norm", &free_gaussian_norm);
  m.def("run", [](const std::string& config, const std::string& out_dir, int workers) {
    py::gil_scoped_release release;
    return run_json(config, out_dir, workers);
  }, py::arg("config"), py::arg("out_dir") = "", py::arg("workers") = 1);
  m.def("preset_suite", [](const std::string& name) {
    return json(preset_suite(name)).dump();
  });
  m.def("compare", [](const std::string& a, const std::string& b) {
    const auto d = compare(load_record(a), load_record(b));
    std::vector<std::tuple<std::string, std::string, std::string, double>> out;
    for (const auto& e : d.entries) out.emplace_back(e.path, e.a, e.b, e.abs_diff);
    return out;
  });
}
