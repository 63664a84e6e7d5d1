#include "steamnet/errors.hpp"
#include "steamnet/qp.hpp"
#include "steamnet/scenario.hpp"
#include "steamnet/steam_properties.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>

namespace py = pybind11;
using namespace steamnet;

namespace {

ScenarioConfig config_from(const std::optional<std::string>& json_text)
{
    return json_text ? parse_config(*json_text) : default_scenario();
}

py::dict identified_to_dict(const IdentifiedBoiler& b)
{
    py::dict d;
    d["f"] = b.arx.f;
    d["b"] = b.arx.b;
    d["gamma"] = b.gamma;
    d["g"] = b.g;
    d["fit_percent"] = b.fit_percent;
    d["bias_bound"] = b.bias_bound;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Hierarchical control of a steam generator ensemble";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
    py::register_exception<ContractError>(m, "ContractError", base.ptr());

    m.def("default_config_json", [] { return config_to_json(default_scenario()); },
          "Built-in five-boiler scenario as JSON text.");
    m.def(
        "validate_config",
        [](const std::string& json_text) { (void)parse_config(json_text); },
        py::arg("json_text"), "Raises ConfigError when the configuration is invalid.");

    m.def(
        "identify",
        [](const std::optional<std::string>& json_text) {
            const IdentificationResult id = run_identification(config_from(json_text));
            py::list out;
            for (const auto& b : id.boilers)
                out.append(identified_to_dict(b));
            return out;
        },
        py::arg("config_json") = py::none(), "Identify every boiler; returns one dict per boiler.");

    py::class_<RunReport>(m, "RunReport")
        .def_readonly("n_boilers", &RunReport::n_boilers)
        .def_readonly("violations", &RunReport::violations)
        .def_readonly("violation_log", &RunReport::violation_log)
        .def_readonly("max_w_inf", &RunReport::max_w_inf)
        .def_readonly("w_bound", &RunReport::w_bound)
        .def_readonly("total_gas_kg", &RunReport::total_gas_kg)
        .def_readonly("total_steam_kg", &RunReport::total_steam_kg)
        .def_readonly("hl_solve_count", &RunReport::hl_solve_count)
        .def_readonly("wall_ms", &RunReport::wall_ms)
        .def_property_readonly("steps", [](const RunReport& r) { return r.steps.size(); })
        .def("timeseries_csv", [](const RunReport& r) { return timeseries_csv(r); })
        .def("summary_json", [](const RunReport& r) { return summary_json(r); });

    m.def(
        "run",
        [](const std::optional<std::string>& json_text) {
            const ScenarioConfig cfg = config_from(json_text);
            py::gil_scoped_release release;
            return run_scenario(cfg);
        },
        py::arg("config_json") = py::none(), "Identify and run the closed-loop scenario.");
    m.def(
        "emit_outputs",
        [](const RunReport& r, const std::filesystem::path& out_dir, const std::optional<std::string>& json_text) {
            emit_outputs(r, config_from(json_text), out_dir);
        },
        py::arg("report"), py::arg("out_dir"), py::arg("config_json") = py::none());

    m.def(
        "saturation",
        [](double p_bar) {
            const SaturationPoint s = saturation_properties(p_bar);
            py::dict d;
            d["rho_w"] = s.rho_w;
            d["rho_s"] = s.rho_s;
            d["h_w"] = s.h_w;
            d["h_s"] = s.h_s;
            d["T_s"] = s.T_s;
            return d;
        },
        py::arg("p_bar"), "Saturated water and steam properties at a pressure in bar.");

    m.def(
        "solve_qp",
        [](const Eigen::MatrixXd& H, const Eigen::VectorXd& f, std::optional<Eigen::MatrixXd> G,
           std::optional<Eigen::VectorXd> h, std::optional<Eigen::MatrixXd> E, std::optional<Eigen::VectorXd> e) {
            QpProblem p;
            p.H = H;
            p.f = f;
            p.G = G ? *G : Eigen::MatrixXd(0, f.size());
            p.h = h ? *h : Eigen::VectorXd(0);
            p.E = E ? *E : Eigen::MatrixXd(0, f.size());
            p.e = e ? *e : Eigen::VectorXd(0);
            const QpResult r = solve_qp(p);
            py::dict d;
            d["x"] = r.x_star;
            d["status"] = to_string(r.status);
            d["objective"] = r.objective;
            d["kkt_residual"] = r.kkt_residual;
            return d;
        },
        py::arg("H"), py::arg("f"), py::arg("G") = py::none(), py::arg("h") = py::none(), py::arg("E") = py::none(),
        py::arg("e") = py::none(), "min 1/2 x'Hx + f'x subject to G x <= h and E x = e.");
}
