#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "kdr/acceptance.hpp"
#include "kdr/costmodel.hpp"
#include "kdr/experiments.hpp"

namespace py = pybind11;

namespace {

kdr::EstimatorResult py_ergodic(const kdr::Problem& p, int window, std::int64_t orbit_length,
                                std::int64_t spin_up, double gamma, std::uint64_t seed,
                                int threads, int segments, std::int64_t batch_length) {
    kdr::ErgodicConfig cfg;
    cfg.window = window;
    cfg.orbit_length = orbit_length;
    cfg.spin_up = spin_up;
    cfg.gamma = gamma;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.segments = segments;
    cfg.batch_length = batch_length;
    return kdr::ergodic_estimator(p.sys, p.noise, p.observable, cfg);
}

kdr::EstimatorResult py_finite_time(const kdr::Problem& p, int horizon, std::int64_t paths,
                                    double gamma, std::uint64_t seed, int threads) {
    kdr::FiniteTimeConfig cfg;
    cfg.horizon = horizon;
    cfg.paths = paths;
    cfg.gamma = gamma;
    cfg.seed = seed;
    cfg.threads = threads;
    return kdr::finite_time_estimator(p.sys, p.noise, p.observable, p.init, cfg);
}

kdr::MonteCarloEstimate py_fd(const kdr::Problem& p, int horizon, double delta_gamma,
                              std::int64_t paths, std::uint64_t seed, double gamma) {
    kdr::FdOracleConfig cfg;
    cfg.delta_gamma = delta_gamma;
    cfg.paths = paths;
    cfg.seed = seed;
    return kdr::fd_ensemble_response(p.sys, p.noise, p.observable, p.init, horizon, cfg, gamma);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Linear response of noisy dynamical systems via likelihood-ratio "
              "(kernel-differentiation) estimators";

    py::class_<kdr::CorrectionTerms>(m, "CorrectionTerms")
        .def_readonly("delta_phi_term", &kdr::CorrectionTerms::delta_phi_term)
        .def_readonly("initial_score_term", &kdr::CorrectionTerms::initial_score_term);

    py::class_<kdr::EstimatorDiagnostics>(m, "EstimatorDiagnostics")
        .def_readonly("dphi_main", &kdr::EstimatorDiagnostics::dphi_main)
        .def_readonly("dphi_uncentralized", &kdr::EstimatorDiagnostics::dphi_uncentralized)
        .def_readonly("score_mean", &kdr::EstimatorDiagnostics::score_mean)
        .def_readonly("score_std", &kdr::EstimatorDiagnostics::score_std)
        .def_readonly("score_count", &kdr::EstimatorDiagnostics::score_count)
        .def_readonly("notes", &kdr::EstimatorDiagnostics::notes);

    py::class_<kdr::EstimatorResult>(m, "EstimatorResult")
        .def_readonly("phi_avg", &kdr::EstimatorResult::phi_avg)
        .def_readonly("dphi_avg", &kdr::EstimatorResult::dphi_avg)
        .def_readonly("se_phi", &kdr::EstimatorResult::se_phi)
        .def_readonly("se_dphi", &kdr::EstimatorResult::se_dphi)
        .def_readonly("samples_used", &kdr::EstimatorResult::samples_used)
        .def_readonly("correction_terms", &kdr::EstimatorResult::correction_terms)
        .def_readonly("diagnostics", &kdr::EstimatorResult::diagnostics)
        .def("__repr__", [](const kdr::EstimatorResult& r) {
            std::ostringstream out;
            out << "EstimatorResult(phi_avg=" << r.phi_avg << ", dphi_avg=" << r.dphi_avg
                << ", se_phi=" << r.se_phi << ", se_dphi=" << r.se_dphi << ")";
            return out.str();
        });

    py::class_<kdr::MonteCarloEstimate>(m, "MonteCarloEstimate")
        .def_readonly("value", &kdr::MonteCarloEstimate::value)
        .def_readonly("standard_error", &kdr::MonteCarloEstimate::standard_error);

    py::class_<kdr::Problem>(m, "Problem")
        .def_property_readonly("dimension", [](const kdr::Problem& p) { return p.sys.dimension; })
        .def_property_readonly("warnings", [](const kdr::Problem& p) { return p.warnings; });

    py::enum_<kdr::NetworkNoiseMode>(m, "NetworkNoiseMode")
        .value("Foliated1D", kdr::NetworkNoiseMode::Foliated1D)
        .value("FullDim", kdr::NetworkNoiseMode::FullDim)
        .value("NoNoise", kdr::NetworkNoiseMode::None);

    py::enum_<kdr::NetworkForm>(m, "NetworkForm")
        .value("Original", kdr::NetworkForm::Original)
        .value("Chart", kdr::NetworkForm::Chart);

    m.def(
        "build_tent",
        [](double gamma, double sigma) { return kdr::build_tent(gamma, sigma); },
        py::arg("gamma") = 3.0, py::arg("sigma") = 0.1,
        "Tent map with elevating center on the unit circle, Phi(x) = x");

    m.def(
        "build_ar1",
        [](double a, double gamma, double sigma) { return kdr::build_ar1(a, gamma, sigma); },
        py::arg("a") = 0.5, py::arg("gamma") = 0.0, py::arg("sigma") = 0.3,
        "Linear Gaussian AR(1) control system with closed-form response");

    m.def(
        "build_network",
        [](double gamma, double sigma, kdr::NetworkNoiseMode noise_mode, kdr::NetworkForm form) {
            kdr::NetworkParams params;
            params.gamma = gamma;
            params.sigma = sigma;
            params.noise_mode = noise_mode;
            params.form = form;
            return kdr::build_network(params);
        },
        py::arg("gamma") = 0.0, py::arg("sigma") = 1.5,
        py::arg("noise_mode") = kdr::NetworkNoiseMode::Foliated1D,
        py::arg("form") = kdr::NetworkForm::Chart,
        "50-layer tanh network, optionally with noise along the perturbation direction");

    m.def("ergodic_estimator", &py_ergodic, py::arg("problem"), py::arg("window"),
          py::arg("orbit_length"), py::arg("spin_up") = 1000, py::arg("gamma") = 0.0,
          py::arg("seed") = 0, py::arg("threads") = 1, py::arg("segments") = 1,
          py::arg("batch_length") = 0,
          "Single-orbit estimator of the stationary average and its parameter derivative");

    m.def("finite_time_estimator", &py_finite_time, py::arg("problem"), py::arg("horizon"),
          py::arg("paths"), py::arg("gamma") = 0.0, py::arg("seed") = 0, py::arg("threads") = 1,
          "Ensemble estimator of the finite-horizon average and its parameter derivative");

    m.def("fd_ensemble_response", &py_fd, py::arg("problem"), py::arg("horizon"),
          py::arg("delta_gamma"), py::arg("paths"), py::arg("seed") = 0, py::arg("gamma") = 0.0,
          "Common-random-numbers central finite difference (validation oracle)");

    m.def(
        "stationary_density",
        [](const std::function<double(double)>& map, double sigma, std::size_t bins, double tol) {
            return kdr::stationary_density(map, sigma, bins, tol).weights;
        },
        py::arg("map"), py::arg("sigma"), py::arg("bins") = 4096, py::arg("tol") = 1e-10,
        "Stationary density of a one-dimensional circle map with wrapped Gaussian noise");

    m.def(
        "grid_linear_response",
        [](const std::function<double(double, double)>& map, double sigma, std::size_t bins,
           double delta_gamma, double gamma) {
            return kdr::grid_linear_response(
                [map](double g) {
                    return [map, g](double x) { return map(g, x); };
                },
                sigma, bins, delta_gamma, [](double x) { return x; }, gamma);
        },
        py::arg("map"), py::arg("sigma"), py::arg("bins") = 4096, py::arg("delta_gamma") = 1e-3,
        py::arg("gamma") = 0.0,
        "Finite difference of the grid stationary average of x in gamma; map is f(gamma, x)");

    m.def(
        "recommend_intrinsic",
        [](double eps, double theta, double sigma) {
            const kdr::CostModelOutput out = kdr::recommend_intrinsic(eps, theta, sigma);
            py::dict d;
            d["W"] = out.window;
            d["L"] = out.samples;
            d["sigma"] = out.sigma;
            d["bias"] = out.predicted_error.bias;
            d["sampling"] = out.predicted_error.sampling;
            return d;
        },
        py::arg("eps"), py::arg("theta"), py::arg("sigma"),
        "Window and sample-count guidance when the noise scale is fixed");

    m.def(
        "recommend_approximation",
        [](double eps, double theta, double delta_gamma) {
            const kdr::CostModelOutput out = kdr::recommend_approximation(eps, theta, delta_gamma);
            py::dict d;
            d["W"] = out.window;
            d["L"] = out.samples;
            d["sigma"] = out.sigma;
            d["bias"] = out.predicted_error.bias;
            d["sampling"] = out.predicted_error.sampling;
            d["noise"] = out.predicted_error.noise;
            return d;
        },
        py::arg("eps"), py::arg("theta"), py::arg("delta_gamma"),
        "Window, noise-scale and sample-count guidance when noise mollifies a deterministic system");

    m.def("fit_theta", &kdr::fit_theta, py::arg("series"), py::arg("max_lag") = 50,
          "Correlation-decay rate fitted from the autocorrelation of a pilot observable series");

    m.def(
        "run_sweep_json",
        [](const std::string& config_json) {
            const kdr::ExperimentConfig cfg =
                kdr::apply_json_overrides(kdr::ExperimentConfig{}, config_json);
            const kdr::SweepOutput out = kdr::run_sweep(cfg);
            py::list rows;
            for (const auto& row : out.rows) {
                py::dict d;
                d["gamma"] = row.gamma;
                d["repetition"] = row.repetition;
                d["phi_avg"] = row.result.phi_avg;
                d["dphi_avg"] = row.result.dphi_avg;
                d["se_phi"] = row.result.se_phi;
                d["se_dphi"] = row.result.se_dphi;
                rows.append(d);
            }
            return rows;
        },
        py::arg("config_json"), "Gamma sweep driven by a JSON experiment config");

    m.def("config_defaults_json", []() { return kdr::to_json(kdr::ExperimentConfig{}); },
          "Fully resolved default experiment config as JSON");

    m.def(
        "run_acceptance",
        [](int threads) {
            std::ostringstream log;
            const kdr::AcceptanceReport rep = kdr::run_acceptance(log, threads);
            py::list rows;
            for (const auto& c : rep.criteria) {
                py::dict d;
                d["number"] = c.number;
                d["name"] = c.name;
                d["passed"] = c.passed;
                d["detail"] = c.detail;
                rows.append(d);
            }
            py::dict d;
            d["all_passed"] = rep.all_passed();
            d["criteria"] = rows;
            d["log"] = log.str();
            return d;
        },
        py::arg("threads") = 1, "Run the acceptance suite and return the per-criterion results");
}
