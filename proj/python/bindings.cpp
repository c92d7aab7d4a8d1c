#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bandframe/besov.hpp"
#include "bandframe/errors.hpp"
#include "bandframe/frame_system.hpp"
#include "bandframe/pipeline.hpp"

namespace py = pybind11;
using namespace bandframe;

namespace {

// Settings arrive as Python scalars or sequences; the config layer wants strings.
std::vector<std::string> setting_values(const py::handle& value) {
  auto one = [](const py::handle& v) -> std::string {
    if (py::isinstance<py::bool_>(v)) return v.cast<bool>() ? "true" : "false";
    if (v.is_none()) throw ConfigError("setting values may not be None");
    return py::str(v).cast<std::string>();
  };
  if (py::isinstance<py::str>(value)) return {value.cast<std::string>()};
  std::vector<std::string> out;
  if (py::isinstance<py::sequence>(value)) {
    for (const auto& item : value.cast<py::sequence>()) out.push_back(one(item));
  } else {
    out.push_back(one(value));
  }
  return out;
}

RunConfig make_config(const std::optional<std::filesystem::path>& config, const py::dict& settings) {
  RunConfig c = config ? load_config(*config) : RunConfig{};
  for (const auto& [key, value] : settings) {
    apply_setting(c, key.cast<std::string>(), setting_values(value));
  }
  return c;
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

DomainSpec make_spec(const std::string& kind, std::vector<double> params, double h) {
  return {parse_domain_kind(kind), std::move(params), h};
}

// Keeps the domain, operator, basis, bank and frame alive together for Python callers.
struct Problem {
  GridDomain dom;
  OperatorMatrix op;
  std::shared_ptr<const EigenBasis> basis;
  std::shared_ptr<const FilterBank> bank;
  std::optional<FrameSystem> frame;

  const FrameSystem& require_frame() const {
    if (!frame) throw ContractViolation("no frame built yet; call build_frame first");
    return *frame;
  }
};

std::shared_ptr<Problem> make_problem(const std::string& kind, std::vector<double> params, double h,
                                      const std::string& coefficient, double value) {
  RunConfig c;
  c.domain = make_spec(kind, std::move(params), h);
  c.coefficient = coefficient;
  c.coefficient_value = value;
  c.amplitude = value;
  validate(c);
  GridDomain dom = build_domain(c.domain);
  OperatorMatrix op = assemble(dom, make_coefficient(c));
  const int J = max_resolved_level(reliability_cutoff(dom, c.eta));
  auto basis = std::make_shared<const EigenBasis>(solve_below(op, dom, std::ldexp(1.0, 2 * J + 2)));
  auto bank = std::make_shared<const FilterBank>(basis);
  return std::make_shared<Problem>(Problem{std::move(dom), std::move(op), basis, bank, std::nullopt});
}

py::list coefficients_to_list(const FrameCoefficients& c) {
  py::list out;
  for (const auto& level : c.levels) out.append(level);
  return out;
}

FrameCoefficients coefficients_from_list(const std::vector<Eigen::VectorXd>& levels) {
  FrameCoefficients c;
  c.levels = levels;
  return c;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bandlimited frames on grid domains";
  m.attr("__version__") = std::string(kVersion);
  m.attr("REPORT_SCHEMA") = std::string(kReportSchema);

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ContractViolation>(m, "ContractViolation", error.ptr());
  py::register_exception<EmptyDomainError>(m, "EmptyDomainError", error.ptr());
  py::register_exception<AssemblyError>(m, "AssemblyError", error.ptr());
  py::register_exception<UnresolvedBandError>(m, "UnresolvedBandError", error.ptr());
  py::register_exception<SolverError>(m, "SolverError", error.ptr());
  py::register_exception<CalibrationError>(m, "CalibrationError", error.ptr());
  py::register_exception<CacheError>(m, "CacheError", error.ptr());
  py::register_exception<StageError>(m, "StageError", error.ptr());

  m.def("setting_keys", &setting_keys);

  m.def(
      "resolve_config",
      [](std::optional<std::filesystem::path> config, const py::dict& settings) {
        const RunConfig c = make_config(config, settings);
        validate(c);
        return to_python(config_to_json(c));
      },
      py::arg("config") = py::none(), py::arg("settings") = py::dict(),
      "Merge a config file with overrides, validate, and return the effective settings.");

  m.def(
      "run",
      [](const std::string& stage, std::optional<std::filesystem::path> config,
         const py::dict& settings) {
        const RunConfig c = with_environment(make_config(config, settings));
        const Stage s = parse_stage(stage);
        RunReport report;
        {
          py::gil_scoped_release release;
          report = run_pipeline(c, s);
        }
        return to_python(report.body);
      },
      py::arg("stage") = "all", py::arg("config") = py::none(), py::arg("settings") = py::dict(),
      "Run the pipeline through `stage` and return the report as a dict.");

  m.def(
      "summarize", [](const py::object& report) { return summarize_report(from_python(report)); },
      py::arg("report"));

  m.def("cutoff", &cutoff_h, py::arg("s"));
  m.def("filter_value", &filter_F, py::arg("j"), py::arg("s"));

  py::class_<Problem, std::shared_ptr<Problem>>(m, "Problem")
      .def(py::init(&make_problem), py::arg("kind"), py::arg("params"), py::arg("h"),
           py::arg("coefficient") = "identity", py::arg("value") = 0.5)
      .def_property_readonly("size", [](const Problem& p) { return p.dom.size(); })
      .def_property_readonly("dimension", [](const Problem& p) { return p.dom.dimension(); })
      .def_property_readonly("h", [](const Problem& p) { return p.dom.h(); })
      .def_property_readonly("weight", [](const Problem& p) { return p.dom.weight(); })
      .def_property_readonly("nodes",
                             [](const Problem& p) {
                               const auto d = static_cast<Eigen::Index>(p.dom.dimension());
                               Eigen::MatrixXd x(static_cast<Eigen::Index>(p.dom.size()), d);
                               for (std::size_t i = 0; i < p.dom.size(); ++i) {
                                 for (Eigen::Index k = 0; k < d; ++k) {
                                   x(static_cast<Eigen::Index>(i), k) =
                                       p.dom.node(i).x[static_cast<std::size_t>(k)];
                                 }
                               }
                               return x;
                             })
      .def_property_readonly("eigenvalues", [](const Problem& p) { return p.basis->values; })
      .def_property_readonly("eigenvectors", [](const Problem& p) { return p.basis->vectors; })
      .def_property_readonly("max_level", [](const Problem& p) { return p.bank->max_level(); })
      .def_property_readonly("resolved_modes", [](const Problem& p) { return p.bank->resolved_modes(); })
      .def_property_readonly("fingerprint", [](const Problem& p) { return p.op.fingerprint; })
      .def("apply_operator", [](const Problem& p, const GridFunction& f) { return apply(p.op, f); })
      .def("norm", [](const Problem& p, const GridFunction& f) { return norm(f, p.dom); })
      .def("dim_E", [](const Problem& p, double omega) { return dim_E(*p.basis, omega); },
           py::arg("omega"))
      .def("sample", [](const Problem& p, double omega, std::uint64_t seed) {
             return sample_bandlimited(*p.basis, omega, seed);
           },
           py::arg("omega"), py::arg("seed"))
      .def("apply_band", [](const Problem& p, int j, const GridFunction& f) {
             return p.bank->apply_band(j, f);
           })
      .def("calibrate",
           [](const Problem& p, double delta) { return calibrate_a0(p.dom, *p.bank, delta).a0; },
           py::arg("delta") = 0.5)
      .def("build_frame",
           [](Problem& p, double delta, std::optional<double> a0) {
             const double a = a0 ? *a0 : calibrate_a0(p.dom, *p.bank, delta).a0;
             p.frame = build_frame(p.bank, p.dom, delta, a);
             return a;
           },
           py::arg("delta") = 0.5, py::arg("a0") = py::none(),
           "Build the frame, calibrating a0 unless given. Returns the a0 used.")
      .def("atom_counts",
           [](const Problem& p) {
             std::vector<std::size_t> out;
             for (const auto& lvl : p.require_frame().levels) out.push_back(lvl.size());
             return out;
           })
      .def("frame_bounds",
           [](const Problem& p, std::optional<int> band) {
             const auto b = frame_bounds(p.require_frame(), band);
             return std::make_pair(b.lower, b.upper);
           },
           py::arg("band") = py::none())
      .def("analyze",
           [](const Problem& p, const GridFunction& f) {
             return coefficients_to_list(analyze(p.require_frame(), f));
           })
      .def("synthesize",
           [](const Problem& p, const std::vector<Eigen::VectorXd>& c) {
             return synthesize(p.require_frame(), coefficients_from_list(c));
           })
      .def("reconstruct",
           [](const Problem& p, const std::vector<Eigen::VectorXd>& c, std::size_t iterations,
              std::optional<GridFunction> reference) {
             const auto& fs = p.require_frame();
             const auto r = reconstruct(fs, coefficients_from_list(c), iterations, 1.0 - fs.delta,
                                        1.0, reference ? &*reference : nullptr);
             return py::make_tuple(r.value, r.errors);
           },
           py::arg("coefficients"), py::arg("iterations") = 17, py::arg("reference") = py::none())
      .def("besov_norms",
           [](const Problem& p, const GridFunction& f, double alpha, double q) {
             const auto r = besov_report(p.require_frame(), f, {alpha, q});
             py::dict out;
             out["approx"] = r.approx;
             out["lp"] = r.lp;
             out["frame"] = r.frame;
             return out;
           },
           py::arg("f"), py::arg("alpha") = 1.0, py::arg("q") = 2.0);
}
