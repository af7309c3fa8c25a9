#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "stucoco/app.hpp"
#include "stucoco/config.hpp"
#include "stucoco/errors.hpp"
#include "stucoco/filter.hpp"
#include "stucoco/hitting.hpp"
#include "stucoco/measures.hpp"
#include "stucoco/model.hpp"
#include "stucoco/oracle.hpp"
#include "stucoco/pricing.hpp"

namespace py = pybind11;
using namespace stucoco;

namespace {

std::vector<ObservationRecord> to_records(const std::vector<std::pair<double, double>>& obs) {
    std::vector<ObservationRecord> out;
    out.reserve(obs.size());
    for (const auto& [t, s] : obs) out.push_back({t, s});
    return out;
}

std::vector<std::pair<double, double>> from_records(const std::vector<ObservationRecord>& obs) {
    std::vector<std::pair<double, double>> out;
    out.reserve(obs.size());
    for (const auto& o : obs) out.emplace_back(o.time, o.stock_price);
    return out;
}

OracleOptions oracle_options(std::size_t n_paths, double dt_fine, std::uint64_t seed, double continuation_step) {
    OracleOptions o;
    o.n_paths = n_paths;
    o.dt_fine = dt_fine;
    o.seed = seed;
    o.continuation_step = continuation_step;
    return o;
}

py::tuple estimate_tuple(const Estimate& e) { return py::make_tuple(e.value, e.std_error); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Contingent convertible pricing under partial information";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<PosteriorCollapse>(m, "PosteriorCollapse", PyExc_ArithmeticError);
    py::register_exception<ConversionTriggered>(m, "ConversionTriggered", PyExc_RuntimeError);

    py::enum_<MeasureTag>(m, "Measure")
        .value("P_STAR", MeasureTag::P_STAR)
        .value("P_T", MeasureTag::P_T)
        .value("P_S", MeasureTag::P_S);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init<>())
        .def_readwrite("r", &ModelParams::r)
        .def_readwrite("sigma", &ModelParams::sigma)
        .def_readwrite("rho", &ModelParams::rho)
        .def_readwrite("a", &ModelParams::a)
        .def_readwrite("kappa", &ModelParams::kappa)
        .def_readwrite("L", &ModelParams::L)
        .def_readwrite("N", &ModelParams::N)
        .def_readwrite("Cr", &ModelParams::Cr)
        .def_readwrite("c_bar", &ModelParams::c_bar)
        .def_readwrite("c_under", &ModelParams::c_under)
        .def_readwrite("T", &ModelParams::T)
        .def_readwrite("S0", &ModelParams::S0)
        .def_readwrite("U0", &ModelParams::U0)
        .def("validate", [](const ModelParams& p) { validate(p); });

    m.def("base_case_parameters", &base_case_parameters);
    m.def("barrier_level", &barrier_level, py::arg("t"), py::arg("params"));
    m.def("drifts", [](MeasureTag tag, const ModelParams& p) {
        const auto d = drifts_under(tag, p);
        return py::make_tuple(d.mu_S, d.mu_U);
    }, py::arg("measure"), py::arg("params"), "(mu_S, mu_U) under the given measure.");

    m.def("survival_closed_form", &survival_closed_form, py::arg("u"), py::arg("c"), py::arg("mu"),
          py::arg("sigma"), py::arg("dt"));
    m.def("first_passage_cdf", &first_passage_cdf, py::arg("u"), py::arg("c"), py::arg("mu"), py::arg("sigma"),
          py::arg("t"));
    m.def("bridge_no_hit", &bridge_no_hit, py::arg("x_prev"), py::arg("x_next"), py::arg("c"), py::arg("sigma"),
          py::arg("dt"));

    py::class_<PosteriorDensity>(m, "Posterior")
        .def_readonly("grid", &PosteriorDensity::grid)
        .def_readonly("weights", &PosteriorDensity::weights)
        .def_readonly("anchor_time", &PosteriorDensity::anchor_time)
        .def_readonly("survival_mass", &PosteriorDensity::survival_mass)
        .def("integral", &PosteriorDensity::integral)
        .def("mean", &PosteriorDensity::mean)
        .def("variance", &PosteriorDensity::variance)
        .def("density_at", &PosteriorDensity::density_at, py::arg("u"));

    py::class_<FilterSession>(m, "Filter")
        .def(py::init([](const ModelParams& p, MeasureTag tag, std::size_t points) {
                 GridOptions g;
                 g.points = points;
                 return FilterSession(p, tag, g);
             }),
             py::arg("params"), py::arg("measure") = MeasureTag::P_STAR, py::arg("grid_points") = 2048)
        .def("reset", [](FilterSession& f, double u, double t, double s, double period_end) {
            f.reset(u, {t, s}, period_end);
        }, py::arg("u"), py::arg("t"), py::arg("stock"), py::arg("period_end"))
        .def("observe", [](FilterSession& f, double t, double s) { f.observe({t, s}); }, py::arg("t"),
             py::arg("stock"))
        .def_property_readonly("posterior", &FilterSession::posterior);

    m.def("conditional_survival", &conditional_survival, py::arg("posterior"), py::arg("measure"),
          py::arg("params"), py::arg("horizon"));
    m.def("price", [](const PosteriorDensity& fwd, const PosteriorDensity& share, const ModelParams& p, double t) {
        const auto q = price(fwd, share, p, t);
        return py::dict(py::arg("t") = q.t, py::arg("pi") = q.pi, py::arg("bond_leg") = q.bond_leg,
                        py::arg("equity_leg") = q.equity_leg);
    }, py::arg("posterior_T"), py::arg("posterior_S"), py::arg("params"), py::arg("t"));

    m.def("simulate_stock_scenarios", [](const ModelParams& p, const std::vector<double>& times, std::size_t count,
                                         std::uint64_t seed) {
        std::vector<std::vector<std::pair<double, double>>> out;
        for (const auto& s : simulate_stock_scenarios(p, times, count, seed)) out.push_back(from_records(s));
        return out;
    }, py::arg("params"), py::arg("times"), py::arg("count"), py::arg("seed"),
          "Stock paths under P* as lists of (t, S).");

    m.def("first_passage_oracle", [](double u, double c, double mu, double sigma, double horizon, std::size_t n_paths,
                                     double dt_fine, std::uint64_t seed) {
        return estimate_tuple(first_passage_oracle(u, c, mu, sigma, horizon, oracle_options(n_paths, dt_fine, seed, 0.0)));
    }, py::arg("u"), py::arg("c"), py::arg("mu"), py::arg("sigma"), py::arg("horizon"), py::arg("n_paths") = 100000,
          py::arg("dt_fine") = 5e-4, py::arg("seed") = 20160215, "(hit probability, standard error).");

    m.def("survival_oracle", [](const ModelParams& p, MeasureTag tag, const std::vector<std::pair<double, double>>& obs,
                                double t, double horizon, std::size_t n_paths, double dt_fine, std::uint64_t seed,
                                double continuation_step) {
        const auto rec = to_records(obs);
        const auto e = survival_oracle(p, drifts_under(tag, p), rec, t, horizon,
                                       oracle_options(n_paths, dt_fine, seed, continuation_step));
        return estimate_tuple(e);
    }, py::arg("params"), py::arg("measure"), py::arg("observations"), py::arg("t"), py::arg("horizon"),
          py::arg("n_paths") = 20000, py::arg("dt_fine") = 5e-4, py::arg("seed") = 20160215,
          py::arg("continuation_step") = 0.005);

    m.def("price_oracle", [](const ModelParams& p, const std::vector<std::pair<double, double>>& obs, double t,
                             std::size_t n_paths, double dt_fine, std::uint64_t seed, double continuation_step) {
        const auto rec = to_records(obs);
        return estimate_tuple(price_oracle(p, rec, t, oracle_options(n_paths, dt_fine, seed, continuation_step)));
    }, py::arg("params"), py::arg("observations"), py::arg("t"), py::arg("n_paths") = 20000,
          py::arg("dt_fine") = 5e-4, py::arg("seed") = 20160215, py::arg("continuation_step") = 0.005);

    m.def("run_command", [](const std::string& command, const std::string& config_json,
                            const std::filesystem::path& out) {
        RunConfig cfg = parse_config(config_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(config_json));
        check(cfg);
        const auto r = app::run(command, cfg, out);
        std::vector<std::string> files;
        for (const auto& f : r.files) files.push_back(f.string());
        return py::make_tuple(r.exit_code, files, r.messages);
    }, py::arg("command"), py::arg("config_json"), py::arg("out"),
          "Run a command as the CLI would; returns (exit_code, files, messages).");
}
