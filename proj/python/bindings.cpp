// Thin bindings: configs travel as JSON text, results come back as dicts and
// numpy arrays.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "nadac/config.hpp"
#include "nadac/control.hpp"
#include "nadac/errors.hpp"
#include "nadac/io.hpp"
#include "nadac/maps.hpp"
#include "nadac/simulate.hpp"

namespace py = pybind11;
using namespace nadac;

namespace {

RunConfig parse(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("", e.what());
  }
  return parse_config(j);
}

py::dict summary_dict(const RunRecord& rec) {
  py::dict out;
  const auto j = summary_to_json(rec.summary);
  for (const auto& [key, value] : j.items()) {
    if (value.is_null()) {
      out[key.c_str()] = py::none();
    } else if (value.is_boolean()) {
      out[key.c_str()] = value.get<bool>();
    } else if (value.is_number_integer()) {
      out[key.c_str()] = value.get<long long>();
    } else if (value.is_number()) {
      out[key.c_str()] = value.get<double>();
    } else {
      out[key.c_str()] = value.dump();
    }
  }
  return out;
}

Matrix stack(const RunRecord& rec, Vector StepRow::*member) {
  if (rec.rows.empty()) return Matrix();
  Matrix out(static_cast<Eigen::Index>(rec.rows.size()), (rec.rows.front().*member).size());
  for (std::size_t i = 0; i < rec.rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rec.rows[i].*member;
  return out;
}

Vector column(const RunRecord& rec, double StepRow::*member) {
  Vector out(static_cast<Eigen::Index>(rec.rows.size()));
  for (std::size_t i = 0; i < rec.rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = rec.rows[i].*member;
  return out;
}

py::dict record_dict(const RunRecord& rec) {
  py::dict out;
  Vector t(static_cast<Eigen::Index>(rec.rows.size()));
  for (std::size_t i = 0; i < rec.rows.size(); ++i) t(static_cast<Eigen::Index>(i)) = static_cast<double>(rec.rows[i].t);
  out["t"] = t;
  out["x"] = stack(rec, &StepRow::x);
  out["u"] = stack(rec, &StepRow::u);
  out["v"] = stack(rec, &StepRow::v);
  out["w"] = stack(rec, &StepRow::w);
  out["xstar"] = stack(rec, &StepRow::xstar);
  out["ustar"] = stack(rec, &StepRow::ustar);
  out["param_err"] = column(rec, &StepRow::param_err);
  out["J"] = column(rec, &StepRow::tracking);
  out["lambda"] = column(rec, &StepRow::lambda);
  out["V"] = column(rec, &StepRow::lyapunov);
  out["d"] = column(rec, &StepRow::d);
  out["mu"] = column(rec, &StepRow::mu);
  out["a"] = column(rec, &StepRow::a);
  out["sign_regret"] = column(rec, &StepRow::sign_regret);
  out["pred_regret"] = column(rec, &StepRow::pred_regret);
  out["summary"] = summary_dict(rec);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "nadac simulator core";

  // translators run last-registered first: base class before subclasses
  py::register_exception<Error>(m, "NadacError", PyExc_RuntimeError);
  py::register_exception<RunAbort>(m, "RunAbort", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def("version", &build_version);
  m.def(
      "validate_json", [](const std::string& text) { parse(text); }, py::arg("config_json"),
      "Raise ValidationError if the config is invalid.");
  m.def(
      "run_json",
      [](const std::string& text) {
        const RunConfig cfg = parse(text);
        RunRecord rec;
        {
          py::gil_scoped_release release;
          rec = run(cfg.sim);
        }
        return record_dict(rec);
      },
      py::arg("config_json"), "Run one configuration and return its logged series.");
  m.def(
      "solve_dare",
      [](const Matrix& a, const Matrix& q, const Matrix& r, double tol, std::size_t max_iter) {
        DareOptions opt;
        opt.tolerance = tol;
        opt.max_iterations = max_iter;
        const auto res = solve_dare(a, q, r, opt);
        return py::make_tuple(res.p, res.residual, res.iterations);
      },
      py::arg("A"), py::arg("Q"), py::arg("R"), py::arg("tol") = 1e-12, py::arg("max_iter") = 100000);
  m.def("smoothed_clamp_value", &smoothed_clamp_value, py::arg("cap"), py::arg("sigma"), py::arg("z"));
  m.def("smoothed_clamp_slope", &smoothed_clamp_slope, py::arg("cap"), py::arg("sigma"), py::arg("z"));
}
