// Batch experiment runner: parameter sweeps, convergence studies, density
// histograms, cost-model guidance, and the built-in acceptance suite.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kdr/acceptance.hpp"
#include "kdr/costmodel.hpp"
#include "kdr/experiments.hpp"

namespace {

using nlohmann::json;

struct CommonFlags {
    std::string config_path;
    std::string model, estimator, noise_mode, form;
    double sigma = 0.0, a = 0.0;
    int horizon = 0, window = 0, gamma_count = 0, repetitions = 0, threads = 0, segments = 0;
    std::int64_t spin_up = 0, samples = 0, batch_length = 0;
    double gamma_start = 0.0, gamma_stop = 0.0;
    std::uint64_t seed = 0;
    std::string output;
};

void add_common_options(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file; flags override its fields");
    cmd->add_option("--model", f.model, "tent | network | ar1");
    cmd->add_option("--estimator", f.estimator, "ergodic | finite");
    cmd->add_option("--sigma", f.sigma, "noise scale (0 = deterministic baseline)");
    cmd->add_option("--a", f.a, "ar1 contraction factor");
    cmd->add_option("--noise-mode", f.noise_mode, "network noise: foliated | fulldim | none");
    cmd->add_option("--form", f.form, "network coordinates: chart | original");
    cmd->add_option("--T", f.horizon, "finite-time horizon");
    cmd->add_option("--W", f.window, "ergodic decorrelation window");
    cmd->add_option("--M-pre", f.spin_up, "ergodic spin-up steps");
    cmd->add_option("--L", f.samples, "sample paths (finite) or orbit length (ergodic)");
    cmd->add_option("--batch-length", f.batch_length, "batch length for standard errors (0 = 10 W)");
    cmd->add_option("--segments", f.segments, "independent orbit segments (ergodic)");
    cmd->add_option("--gamma-start", f.gamma_start, "sweep start");
    cmd->add_option("--gamma-stop", f.gamma_stop, "sweep stop");
    cmd->add_option("--gamma-count", f.gamma_count, "sweep point count");
    cmd->add_option("--seed", f.seed, "master seed (KR_SEED overrides)");
    cmd->add_option("--repetitions", f.repetitions, "independent repetitions per point");
    cmd->add_option("--threads", f.threads, "worker cap (results do not depend on it)");
    cmd->add_option("-o,--output", f.output, "output CSV path");
}

kdr::ExperimentConfig resolve_config(const CLI::App* cmd, const CommonFlags& f,
                                     const std::string& default_output) {
    kdr::ExperimentConfig cfg;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in.good()) throw std::runtime_error("cannot read config file " + f.config_path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        cfg = kdr::apply_json_overrides(cfg, buffer.str());
    }
    json overrides;
    const auto set = [&](const char* flag, const char* key, const auto& value) {
        if (cmd->count(flag) > 0) overrides[key] = value;
    };
    set("--model", "model", f.model);
    set("--estimator", "estimator", f.estimator);
    set("--sigma", "sigma", f.sigma);
    set("--a", "a", f.a);
    set("--noise-mode", "noise_mode", f.noise_mode);
    set("--form", "form", f.form);
    set("--T", "T", f.horizon);
    set("--W", "W", f.window);
    set("--M-pre", "M_pre", f.spin_up);
    set("--L", "L", f.samples);
    set("--batch-length", "batch_length", f.batch_length);
    set("--segments", "segments", f.segments);
    set("--seed", "seed", f.seed);
    set("--repetitions", "repetitions", f.repetitions);
    set("--threads", "threads", f.threads);
    set("--output", "output", f.output);
    if (cmd->count("--gamma-start") || cmd->count("--gamma-stop") || cmd->count("--gamma-count")) {
        json g;
        if (cmd->count("--gamma-start")) g["start"] = f.gamma_start;
        if (cmd->count("--gamma-stop")) g["stop"] = f.gamma_stop;
        if (cmd->count("--gamma-count")) g["count"] = f.gamma_count;
        overrides["gamma"] = g;
    }
    if (!overrides.empty()) {
        cfg = kdr::apply_json_overrides(cfg, overrides.dump());
    }
    if (const char* env_seed = std::getenv("KR_SEED")) {
        cfg.seed = std::strtoull(env_seed, nullptr, 10);
    }
    if (cfg.output.empty()) cfg.output = default_output;
    return cfg;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw std::runtime_error("cannot open output file " + path);
    return out;
}

std::vector<double> parse_value_list(const std::string& csv) {
    std::vector<double> values;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) values.push_back(std::stod(item));
    }
    return values;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kdr: linear response of noisy dynamical systems via likelihood-ratio "
                 "(kernel-differentiation) estimators"};
    app.require_subcommand(1);

    // --- sweep ---------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "phi_avg and dphi_avg over a gamma grid");
    CommonFlags sf;
    add_common_options(sweep, sf);

    // --- converge ------------------------------------------------------
    auto* converge =
        app.add_subcommand("converge", "spread of repeated runs along L or W, with fitted slope");
    CommonFlags cf;
    add_common_options(converge, cf);
    std::string axis = "L";
    std::string values_csv;
    converge->add_option("--axis", axis, "L | W");
    converge->add_option("--values", values_csv, "comma-separated axis values");

    // --- density -------------------------------------------------------
    auto* density = app.add_subcommand("density", "orbit histograms across noise scales");
    CommonFlags df;
    add_common_options(density, df);
    std::string density_sigmas;
    std::int64_t density_samples = 0;
    int density_bins = 0;
    density->add_option("--density-sigmas", density_sigmas, "comma-separated sigma list");
    density->add_option("--density-samples", density_samples, "orbit samples per histogram");
    density->add_option("--density-bins", density_bins, "histogram bins");

    // --- recommend -----------------------------------------------------
    auto* recommend = app.add_subcommand("recommend", "cost-model guidance for (W, sigma, L)");
    double eps = 0.1, theta = 0.0, rec_sigma = 0.0, delta_gamma = 0.0;
    std::string pilot_model;
    std::int64_t pilot_steps = 100000;
    recommend->add_option("--eps", eps, "target total error")->required();
    recommend->add_option("--theta", theta, "correlation-decay rate in (0,1)");
    recommend->add_option("--sigma", rec_sigma, "fixed noise scale (intrinsic-noise case)");
    recommend->add_option("--delta-gamma", delta_gamma,
                          "parameter step of interest (noise-as-approximation case)");
    recommend->add_option("--pilot-model", pilot_model,
                          "fit theta from a pilot orbit of this model (tent | ar1) when --theta is absent");
    recommend->add_option("--pilot-steps", pilot_steps, "pilot orbit length");

    // --- selftest ------------------------------------------------------
    auto* selftest = app.add_subcommand("selftest", "run the acceptance suite");
    int selftest_threads = 1;
    selftest->add_option("--threads", selftest_threads, "worker cap");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) {
            const kdr::ExperimentConfig cfg = resolve_config(sweep, sf, "sweep.csv");
            std::ofstream out = open_output(cfg.output);
            kdr::run_sweep(cfg, &out);
            std::cerr << "wrote " << cfg.output << '\n';
        } else if (converge->parsed()) {
            kdr::ExperimentConfig cfg = resolve_config(converge, cf, "converge.csv");
            if (cfg.repetitions < 10) {
                std::cerr << "note: convergence studies need >= 10 repetitions per point; using 10\n";
                cfg.repetitions = 10;
            }
            kdr::SweepAxis sweep_axis;
            std::vector<double> values;
            if (axis == "L") {
                sweep_axis = kdr::SweepAxis::SampleCount;
                values = {1e3, 1e4, 1e5, 1e6};
            } else if (axis == "W") {
                sweep_axis = kdr::SweepAxis::Window;
                values = {1, 2, 4, 8, 16, 32, 64};
            } else {
                throw std::runtime_error("--axis must be L or W");
            }
            if (!values_csv.empty()) values = parse_value_list(values_csv);
            std::ofstream out = open_output(cfg.output);
            const kdr::ConvergenceOutput result =
                kdr::run_convergence_study(cfg, sweep_axis, values, &out);
            std::cerr << "wrote " << cfg.output << "; fitted slope " << result.slope
                      << " (uncentralized " << result.slope_uncentralized << ")\n";
        } else if (density->parsed()) {
            kdr::ExperimentConfig cfg = resolve_config(density, df, "density.csv");
            if (density->count("--density-sigmas")) cfg.density_sigmas = parse_value_list(density_sigmas);
            if (density->count("--density-samples")) cfg.density_samples = density_samples;
            if (density->count("--density-bins")) cfg.density_bins = density_bins;
            std::ofstream out = open_output(cfg.output);
            kdr::run_density(cfg, &out);
            std::cerr << "wrote " << cfg.output << '\n';
        } else if (recommend->parsed()) {
            double theta_used = theta;
            if (recommend->count("--theta") == 0) {
                if (pilot_model.empty()) {
                    throw std::runtime_error("provide --theta or --pilot-model");
                }
                kdr::ExperimentConfig pilot;
                pilot.model = pilot_model == "tent" ? kdr::ModelKind::Tent : kdr::ModelKind::Ar1;
                pilot.sigma = recommend->count("--sigma") && rec_sigma > 0.0 ? rec_sigma : 0.1;
                pilot.gamma_start = pilot.model == kdr::ModelKind::Tent ? 3.0 : 0.0;
                const kdr::Problem p = kdr::build_problem(pilot, pilot.gamma_start);
                kdr::RngStream rng(20250808, 0);
                kdr::State x(static_cast<std::size_t>(p.sys.dimension));
                kdr::State z(static_cast<std::size_t>(p.sys.dimension));
                kdr::NoiseSample y;
                std::vector<double> series;
                series.reserve(static_cast<std::size_t>(pilot_steps));
                for (std::int64_t t = 0; t < 1000 + pilot_steps; ++t) {
                    p.sys.maps[0](pilot.gamma_start, x, z);
                    p.noise[0]->sample(pilot.gamma_start, z, rng, y);
                    for (std::size_t i = 0; i < z.coords.size(); ++i) z.coords[i] += y.embedded[i];
                    if (p.sys.domain == kdr::Domain::TorusMod1) kdr::wrap_torus(z);
                    std::swap(x.coords, z.coords);
                    if (t >= 1000) series.push_back(p.observable.eval(pilot.gamma_start, x));
                }
                theta_used = kdr::fit_theta(series);
                std::cout << "theta fitted from " << pilot_model << " pilot orbit: " << theta_used
                          << " (autocorrelation fit, a rough stand-in)\n";
            }
            if (recommend->count("--sigma")) {
                const kdr::CostModelOutput out = kdr::recommend_intrinsic(eps, theta_used, rec_sigma);
                std::cout << "intrinsic-noise case (order-of-magnitude guidance, constants set to 1):\n"
                          << "  W = " << out.window << "\n  L = " << out.samples << '\n'
                          << "  predicted bias ~ " << out.predicted_error.bias
                          << ", sampling error ~ " << out.predicted_error.sampling << '\n';
            } else if (recommend->count("--delta-gamma")) {
                const kdr::CostModelOutput out =
                    kdr::recommend_approximation(eps, theta_used, delta_gamma);
                std::cout << "noise-as-approximation case (order-of-magnitude guidance, constants set to 1):\n"
                          << "  sigma = " << out.sigma << "\n  W = " << out.window
                          << "\n  L = " << out.samples << '\n'
                          << "  predicted bias ~ " << out.predicted_error.bias
                          << ", sampling ~ " << out.predicted_error.sampling << ", noise ~ "
                          << out.predicted_error.noise << '\n';
            } else {
                throw std::runtime_error("provide --sigma (intrinsic) or --delta-gamma (approximation)");
            }
        } else if (selftest->parsed()) {
            const kdr::AcceptanceReport report = kdr::run_acceptance(std::cout, selftest_threads);
            return report.all_passed() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
