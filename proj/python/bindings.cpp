#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rvol/cli.hpp"
#include "rvol/errors.hpp"
#include "rvol/model.hpp"
#include "rvol/series.hpp"
#include "rvol/variation.hpp"

namespace py = pybind11;

namespace {

rvol::RunConfig make_config(const std::string& command, const std::map<std::string, std::string>& kv) {
  rvol::RunConfig c;
  c.set("command", command);
  for (const auto& [k, v] : kv) c.set(k, v);
  return c;
}

}  // namespace

PYBIND11_MODULE(_rvol, m) {
  m.doc() = "Renormalized volume coefficients and conformal variations";
  static py::exception<rvol::Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const rvol::Error& e) {
      py::object kind = py::str(std::string(rvol::to_string(e.kind())));
      PyErr_SetObject(error.ptr(), py::make_tuple(kind, e.what()).ptr());
    }
  });

  m.def("version", &rvol::tool_version);
  m.def("commands", &rvol::command_names);
  m.def(
      "run_json",
      [](const std::string& command, const std::map<std::string, std::string>& kv) {
        py::gil_scoped_release release;
        return rvol::run_command(make_config(command, kv)).to_json().dump();
      },
      py::arg("command"), py::arg("options") = std::map<std::string, std::string>{});
  m.def(
      "canonical_config", [](const std::string& text) { return rvol::RunConfig::parse(text).canonical(); },
      "Canonical serialization of a key = value config.");
  m.def("config_hash", [](const std::string& text) { return rvol::RunConfig::parse(text).hash(); });
  m.def("report", [](const std::vector<std::string>& records) {
    std::vector<rvol::ResultRecord> r;
    for (const auto& s : records) r.push_back(rvol::ResultRecord::from_json(nlohmann::ordered_json::parse(s)));
    return rvol::emit_report(r);
  });
  m.def(
      "einstein_vk",
      [](int n, double a) {
        const auto model = rvol::ModelMetric::einstein_with_constant(n, a);
        std::mt19937_64 rng(0x5eed);
        return rvol::vk_from_series(rvol::einstein_series(model, model.sample_point(rng)), n).v;
      },
      py::arg("n"), py::arg("a"), "v_0..v_n for an Einstein metric with Ric = 2a(n-1)g.");
  m.def(
      "sign_Fk",
      [](int n, int k, int sign_R, bool round) {
        const auto c = rvol::classify_sign_Fk(n, k, sign_R, round);
        return py::make_tuple(std::string(rvol::to_string(c.kind)), c.nullity);
      },
      py::arg("n"), py::arg("k"), py::arg("sign_R"), py::arg("round_sphere") = false);
  m.def(
      "sign_V",
      [](int n, int sign_R, bool round) {
        const auto c = rvol::classify_sign_V(n, sign_R, round);
        return py::make_tuple(std::string(rvol::to_string(c.kind)), c.nullity);
      },
      py::arg("n"), py::arg("sign_R"), py::arg("round_sphere") = false);
}
