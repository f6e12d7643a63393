#include "kdr/experiments.hpp"

#include <chrono>
#include <thread>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace kdr {

namespace {

using nlohmann::json;

const char* model_name(ModelKind m) {
    switch (m) {
    case ModelKind::Tent: return "tent";
    case ModelKind::Network: return "network";
    case ModelKind::Ar1: return "ar1";
    }
    return "?";
}

const char* estimator_name(EstimatorKind e) {
    return e == EstimatorKind::Ergodic ? "ergodic" : "finite";
}

const char* noise_mode_name(NetworkNoiseMode m) {
    switch (m) {
    case NetworkNoiseMode::Foliated1D: return "foliated";
    case NetworkNoiseMode::FullDim: return "fulldim";
    case NetworkNoiseMode::None: return "none";
    }
    return "?";
}

const char* form_name(NetworkForm f) {
    return f == NetworkForm::Chart ? "chart" : "original";
}

ModelKind model_from(const std::string& s) {
    if (s == "tent") return ModelKind::Tent;
    if (s == "network") return ModelKind::Network;
    if (s == "ar1") return ModelKind::Ar1;
    throw std::invalid_argument("unknown model '" + s + "' (expected tent|network|ar1)");
}

EstimatorKind estimator_from(const std::string& s) {
    if (s == "ergodic") return EstimatorKind::Ergodic;
    if (s == "finite") return EstimatorKind::FiniteTime;
    throw std::invalid_argument("unknown estimator '" + s + "' (expected ergodic|finite)");
}

NetworkNoiseMode noise_mode_from(const std::string& s) {
    if (s == "foliated") return NetworkNoiseMode::Foliated1D;
    if (s == "fulldim") return NetworkNoiseMode::FullDim;
    if (s == "none") return NetworkNoiseMode::None;
    throw std::invalid_argument("unknown noise_mode '" + s + "' (expected foliated|fulldim|none)");
}

NetworkForm form_from(const std::string& s) {
    if (s == "chart") return NetworkForm::Chart;
    if (s == "original") return NetworkForm::Original;
    throw std::invalid_argument("unknown form '" + s + "' (expected chart|original)");
}

json config_to_json_object(const ExperimentConfig& cfg) {
    json j;
    j["model"] = model_name(cfg.model);
    j["estimator"] = estimator_name(cfg.estimator);
    j["sigma"] = cfg.sigma;
    j["a"] = cfg.ar1_a;
    j["noise_mode"] = noise_mode_name(cfg.network_noise);
    j["form"] = form_name(cfg.network_form);
    j["T"] = cfg.horizon;
    j["W"] = cfg.window;
    j["M_pre"] = cfg.spin_up;
    j["L"] = cfg.samples;
    j["batch_length"] = cfg.batch_length;
    j["segments"] = cfg.segments;
    j["gamma"] = {{"start", cfg.gamma_start}, {"stop", cfg.gamma_stop}, {"count", cfg.gamma_count}};
    j["seed"] = cfg.seed;
    j["repetitions"] = cfg.repetitions;
    j["threads"] = cfg.threads;
    j["density_sigmas"] = cfg.density_sigmas;
    j["density_samples"] = cfg.density_samples;
    j["density_bins"] = cfg.density_bins;
    j["grid_bins"] = cfg.grid_bins;
    j["output"] = cfg.output;
    return j;
}

void apply_json_object(ExperimentConfig& cfg, const json& j) {
    if (j.contains("model")) cfg.model = model_from(j.at("model").get<std::string>());
    if (j.contains("estimator")) cfg.estimator = estimator_from(j.at("estimator").get<std::string>());
    if (j.contains("sigma")) cfg.sigma = j.at("sigma").get<double>();
    if (j.contains("a")) cfg.ar1_a = j.at("a").get<double>();
    if (j.contains("noise_mode")) cfg.network_noise = noise_mode_from(j.at("noise_mode").get<std::string>());
    if (j.contains("form")) cfg.network_form = form_from(j.at("form").get<std::string>());
    if (j.contains("T")) cfg.horizon = j.at("T").get<int>();
    if (j.contains("W")) cfg.window = j.at("W").get<int>();
    if (j.contains("M_pre")) cfg.spin_up = j.at("M_pre").get<std::int64_t>();
    if (j.contains("L")) cfg.samples = j.at("L").get<std::int64_t>();
    if (j.contains("batch_length")) cfg.batch_length = j.at("batch_length").get<std::int64_t>();
    if (j.contains("segments")) cfg.segments = j.at("segments").get<int>();
    if (j.contains("gamma")) {
        const json& g = j.at("gamma");
        if (g.contains("start")) cfg.gamma_start = g.at("start").get<double>();
        if (g.contains("stop")) cfg.gamma_stop = g.at("stop").get<double>();
        if (g.contains("count")) cfg.gamma_count = g.at("count").get<int>();
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("repetitions")) cfg.repetitions = j.at("repetitions").get<int>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("density_sigmas")) cfg.density_sigmas = j.at("density_sigmas").get<std::vector<double>>();
    if (j.contains("density_samples")) cfg.density_samples = j.at("density_samples").get<std::int64_t>();
    if (j.contains("density_bins")) cfg.density_bins = j.at("density_bins").get<int>();
    if (j.contains("grid_bins")) cfg.grid_bins = j.at("grid_bins").get<std::size_t>();
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
}

// threads <= 0 means "all available cores"; results never depend on the
// worker count, only the echoed config does.
ExperimentConfig resolve_threads(const ExperimentConfig& cfg) {
    ExperimentConfig out = cfg;
    if (out.threads <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        out.threads = hw > 0 ? static_cast<int>(hw) : 1;
    }
    return out;
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.gamma_count < 1) throw std::invalid_argument("config: gamma count must be >= 1");
    if (cfg.repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
    if (cfg.samples < 2) throw std::invalid_argument("config: L must be >= 2");
    if (cfg.sigma < 0.0) throw std::invalid_argument("config: sigma must be >= 0");
    if (cfg.model == ModelKind::Network) {
        if (cfg.estimator == EstimatorKind::Ergodic) {
            throw std::invalid_argument("config: the layered network is a finite-time problem");
        }
        if (cfg.horizon != network_layers) {
            throw std::invalid_argument("config: the network horizon is fixed at 50 layers");
        }
    }
    if (cfg.estimator == EstimatorKind::Ergodic && cfg.sigma > 0.0 && cfg.window >= cfg.samples) {
        throw std::invalid_argument("config: ergodic runs need W < L");
    }
    if (cfg.model == ModelKind::Ar1 && std::abs(cfg.ar1_a) >= 1.0) {
        throw std::invalid_argument("config: ar1 requires |a| < 1");
    }
}

// %.17g-style shortest-round-trip-ish formatting for CSV payloads.
std::string fmt(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

class CsvGuard {
public:
    explicit CsvGuard(std::ostream* out) : out_(out) {}
    ~CsvGuard() {
        if (out_ && !completed_) {
            (*out_) << "# ERROR: run aborted before completion\n" << std::flush;
        }
    }
    void fail(const std::string& message) {
        if (out_) {
            (*out_) << "# ERROR: " << message << '\n' << std::flush;
            completed_ = true;
        }
    }
    void complete() { completed_ = true; }

private:
    std::ostream* out_;
    bool completed_ = false;
};

void write_header(std::ostream* csv, const ExperimentConfig& cfg, const char* kind) {
    if (!csv) return;
    (*csv) << "# kdr " << kind << '\n';
    (*csv) << "# config " << to_json(cfg) << '\n';
}

} // namespace

std::string to_json(const ExperimentConfig& cfg) {
    return config_to_json_object(cfg).dump();
}

ExperimentConfig config_from_json(const std::string& text) {
    ExperimentConfig cfg;
    apply_json_object(cfg, json::parse(text));
    return cfg;
}

ExperimentConfig apply_json_overrides(const ExperimentConfig& base, const std::string& json_text) {
    ExperimentConfig cfg = base;
    apply_json_object(cfg, json::parse(json_text));
    return cfg;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t x = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<double> gamma_grid(const ExperimentConfig& cfg) {
    std::vector<double> grid;
    if (cfg.gamma_count == 1) {
        grid.push_back(cfg.gamma_start);
        return grid;
    }
    const double step = (cfg.gamma_stop - cfg.gamma_start) / static_cast<double>(cfg.gamma_count - 1);
    for (int i = 0; i < cfg.gamma_count; ++i) {
        grid.push_back(cfg.gamma_start + step * static_cast<double>(i));
    }
    return grid;
}

Problem build_problem(const ExperimentConfig& cfg, double gamma) {
    switch (cfg.model) {
    case ModelKind::Tent: {
        Problem p = build_tent(gamma, cfg.sigma > 0.0 ? cfg.sigma : 1.0);
        if (cfg.sigma == 0.0) p.noise.clear();
        return p;
    }
    case ModelKind::Ar1: {
        Problem p = build_ar1(cfg.ar1_a, gamma, cfg.sigma > 0.0 ? cfg.sigma : 1.0);
        if (cfg.sigma == 0.0) p.noise.clear();
        return p;
    }
    case ModelKind::Network: {
        NetworkParams params;
        params.gamma = gamma;
        params.sigma = cfg.sigma > 0.0 ? cfg.sigma : 1.0;
        params.noise_mode = cfg.sigma == 0.0 ? NetworkNoiseMode::None : cfg.network_noise;
        params.form = cfg.network_form;
        return build_network(params);
    }
    }
    throw std::logic_error("build_problem: unreachable");
}

namespace {

// Plain ensemble / orbit average of the observable for noiseless
// baselines; no derivative is defined there.
EstimatorResult baseline_average(const Problem& p, const ExperimentConfig& cfg, double gamma,
                                 std::uint64_t seed) {
    EstimatorResult r;
    if (cfg.estimator == EstimatorKind::FiniteTime) {
        StreamingMoments phis;
        State x(static_cast<std::size_t>(p.sys.dimension));
        State z(static_cast<std::size_t>(p.sys.dimension));
        for (std::int64_t l = 0; l < cfg.samples; ++l) {
            RngStream rng(seed, static_cast<std::uint64_t>(l));
            p.init.sampler(gamma, rng, x);
            for (int m = 0; m < cfg.horizon; ++m) {
                step_into(p.sys, gamma, m, x, {}, z);
                std::swap(x.coords, z.coords);
            }
            phis.add(p.observable.eval(gamma, x));
        }
        r.phi_avg = phis.mean();
        r.se_phi = phis.standard_error();
        r.samples_used = phis.count();
    } else {
        RngStream rng(seed, 0);
        State x(static_cast<std::size_t>(p.sys.dimension));
        if (p.init.sampler) p.init.sampler(gamma, rng, x);
        State z(static_cast<std::size_t>(p.sys.dimension));
        StreamingMoments phis;
        // Same dither as orbit_histogram: noiseless circle-map orbits
        // degenerate in floating point.
        const bool dither = p.sys.domain == Domain::TorusMod1;
        std::vector<double> kick;
        for (std::int64_t t = 0; t < cfg.spin_up + cfg.samples; ++t) {
            if (dither) {
                kick.assign(static_cast<std::size_t>(p.sys.dimension), 0.0);
                for (double& v : kick) v = 1e-12 * rng.normal();
            }
            step_into(p.sys, gamma, 0, x, kick, z);
            std::swap(x.coords, z.coords);
            if (t >= cfg.spin_up) phis.add(p.observable.eval(gamma, x));
        }
        r.phi_avg = phis.mean();
        r.se_phi = phis.standard_error();
        r.samples_used = phis.count();
    }
    r.dphi_avg = std::numeric_limits<double>::quiet_NaN();
    r.se_dphi = std::numeric_limits<double>::quiet_NaN();
    return r;
}

EstimatorResult run_point(const ExperimentConfig& cfg, const Problem& p, double gamma,
                          std::uint64_t seed) {
    if (p.noise.empty()) {
        return baseline_average(p, cfg, gamma, seed);
    }
    if (cfg.estimator == EstimatorKind::FiniteTime) {
        FiniteTimeConfig fcfg;
        fcfg.horizon = cfg.horizon;
        fcfg.paths = cfg.samples;
        fcfg.gamma = gamma;
        fcfg.seed = seed;
        fcfg.threads = cfg.threads;
        return finite_time_estimator(p.sys, p.noise, p.observable, p.init, fcfg);
    }
    ErgodicConfig ecfg;
    ecfg.window = cfg.window;
    ecfg.orbit_length = cfg.samples;
    ecfg.spin_up = cfg.spin_up;
    ecfg.gamma = gamma;
    ecfg.seed = seed;
    ecfg.threads = cfg.threads;
    ecfg.batch_length = cfg.batch_length;
    ecfg.segments = cfg.segments;
    return ergodic_estimator(p.sys, p.noise, p.observable, ecfg);
}

} // namespace

SweepOutput run_sweep(const ExperimentConfig& config, std::ostream* csv) {
    const ExperimentConfig cfg = resolve_threads(config);
    validate(cfg);
    write_header(csv, cfg, "sweep");
    CsvGuard guard(csv);

    SweepOutput out;
    const std::vector<double> gammas = gamma_grid(cfg);
    // The correction columns are a property of the model, fixed up front.
    out.has_corrections = cfg.model == ModelKind::Network &&
                          cfg.network_form == NetworkForm::Chart && cfg.sigma > 0.0 &&
                          cfg.network_noise != NetworkNoiseMode::None;
    if (csv) {
        (*csv) << "gamma,repetition,phi_avg,dphi_avg,se_phi,se_dphi";
        if (out.has_corrections) (*csv) << ",delta_phi_term,initial_score_term";
        (*csv) << ",wall_time_seconds\n";
    }

    std::uint64_t run_index = 0;
    for (double gamma : gammas) {
        for (int rep = 0; rep < cfg.repetitions; ++rep, ++run_index) {
            const auto t0 = std::chrono::steady_clock::now();
            SweepRow row;
            row.gamma = gamma;
            row.repetition = rep;
            try {
                const Problem p = build_problem(cfg, gamma);
                row.baseline = p.noise.empty();
                row.result = run_point(cfg, p, gamma, derive_seed(cfg.seed, run_index));
            } catch (const std::exception& e) {
                const std::string message =
                    "gamma=" + fmt(gamma) + " repetition=" + std::to_string(rep) + ": " + e.what();
                guard.fail(message);
                throw std::runtime_error("run_sweep: " + message);
            }
            row.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (csv) {
                (*csv) << fmt(row.gamma) << ',' << rep << ',' << fmt(row.result.phi_avg) << ','
                       << fmt(row.result.dphi_avg) << ',' << fmt(row.result.se_phi) << ','
                       << fmt(row.result.se_dphi);
                if (out.has_corrections) {
                    const auto& c = row.result.correction_terms;
                    (*csv) << ',' << fmt(c && c->delta_phi_term ? *c->delta_phi_term : 0.0) << ','
                           << fmt(c && c->initial_score_term ? *c->initial_score_term : 0.0);
                }
                (*csv) << ',' << fmt(row.wall_seconds) << '\n';
            }
            out.rows.push_back(std::move(row));
        }
    }
    guard.complete();
    return out;
}

SweepOutput run_sweep(const ExperimentConfig& cfg) { return run_sweep(cfg, nullptr); }

ConvergenceOutput run_convergence_study(const ExperimentConfig& config, SweepAxis axis,
                                        const std::vector<double>& axis_values, std::ostream* csv) {
    const ExperimentConfig cfg = resolve_threads(config);
    validate(cfg);
    if (cfg.repetitions < 10) {
        throw std::invalid_argument("run_convergence_study: need repetitions >= 10 per point");
    }
    if (axis_values.size() < 2) {
        throw std::invalid_argument("run_convergence_study: need at least two axis values");
    }
    if (cfg.sigma == 0.0) {
        throw std::invalid_argument("run_convergence_study: baseline runs carry no derivative");
    }
    write_header(csv, cfg, "converge");
    CsvGuard guard(csv);
    if (csv) {
        (*csv) << "axis,value,mean_dphi,std_dphi,mean_dphi_uncentralized,std_dphi_uncentralized,"
                  "mean_se_dphi,repetitions\n";
    }
    const char* axis_name = axis == SweepAxis::SampleCount ? "L" : "W";

    ConvergenceOutput out;
    std::uint64_t run_index = 0;
    for (double value : axis_values) {
        ExperimentConfig point = cfg;
        if (axis == SweepAxis::SampleCount) {
            point.samples = static_cast<std::int64_t>(value);
        } else {
            point.window = static_cast<int>(value);
        }
        StreamingMoments dphi, dphi_unc, se;
        for (int rep = 0; rep < cfg.repetitions; ++rep, ++run_index) {
            try {
                const Problem p = build_problem(point, point.gamma_start);
                const EstimatorResult r =
                    run_point(point, p, point.gamma_start, derive_seed(cfg.seed, run_index));
                dphi.add(r.dphi_avg);
                if (std::isfinite(r.diagnostics.dphi_uncentralized)) {
                    dphi_unc.add(r.diagnostics.dphi_uncentralized);
                }
                if (std::isfinite(r.se_dphi)) se.add(r.se_dphi);
            } catch (const std::exception& e) {
                const std::string message = std::string(axis_name) + "=" + fmt(value) +
                                            " repetition=" + std::to_string(rep) + ": " + e.what();
                guard.fail(message);
                throw std::runtime_error("run_convergence_study: " + message);
            }
        }
        ConvergenceRow row;
        row.axis_value = value;
        row.mean_dphi = dphi.mean();
        row.std_dphi = dphi.stddev();
        row.mean_dphi_uncentralized = dphi_unc.mean();
        row.std_dphi_uncentralized = dphi_unc.stddev();
        row.mean_se_dphi = se.mean();
        row.repetitions = cfg.repetitions;
        if (csv) {
            (*csv) << axis_name << ',' << fmt(row.axis_value) << ',' << fmt(row.mean_dphi) << ','
                   << fmt(row.std_dphi) << ',' << fmt(row.mean_dphi_uncentralized) << ','
                   << fmt(row.std_dphi_uncentralized) << ',' << fmt(row.mean_se_dphi) << ','
                   << row.repetitions << '\n';
        }
        out.rows.push_back(row);
    }

    std::vector<double> lx, ly, ly_unc;
    for (const auto& row : out.rows) {
        if (row.std_dphi > 0.0) {
            lx.push_back(std::log(row.axis_value));
            ly.push_back(std::log(row.std_dphi));
            ly_unc.push_back(row.std_dphi_uncentralized > 0.0
                                 ? std::log(row.std_dphi_uncentralized)
                                 : std::log(row.std_dphi));
        }
    }
    out.slope = linear_slope(lx, ly);
    out.slope_uncentralized = linear_slope(lx, ly_unc);
    if (csv) {
        (*csv) << "slope," << fmt(out.slope) << ",,," << fmt(out.slope_uncentralized) << ",,,\n";
    }
    guard.complete();
    return out;
}

ConvergenceOutput run_convergence_study(const ExperimentConfig& cfg, SweepAxis axis,
                                        const std::vector<double>& axis_values) {
    return run_convergence_study(cfg, axis, axis_values, nullptr);
}

DensityOutput run_density(const ExperimentConfig& config, std::ostream* csv) {
    const ExperimentConfig cfg = resolve_threads(config);
    validate(cfg);
    write_header(csv, cfg, "density");
    CsvGuard guard(csv);

    DensityOutput out;
    out.sigmas.push_back(0.0);
    for (double s : cfg.density_sigmas) {
        if (s <= 0.0) throw std::invalid_argument("run_density: sigma list must be positive");
        out.sigmas.push_back(s);
    }

    try {
        const double gamma = cfg.gamma_start;
        for (double s : out.sigmas) {
            ExperimentConfig point = cfg;
            point.sigma = s;
            const Problem p = build_problem(point, gamma);
            if (p.sys.dimension != 1) {
                throw std::invalid_argument("run_density: one-dimensional models only");
            }
            out.histograms.push_back(orbit_histogram(p.sys, p.noise, gamma, cfg.spin_up,
                                                     cfg.density_samples,
                                                     static_cast<std::size_t>(cfg.density_bins),
                                                     derive_seed(cfg.seed, out.histograms.size())));
            if (s > 0.0) {
                auto map1d = [&p, gamma](double x) {
                    State in(std::vector<double>{x});
                    State mapped(1);
                    p.sys.maps[0](gamma, in, mapped);
                    return mapped[0];
                };
                GridDensity grid = stationary_density(map1d, s, cfg.grid_bins, 1e-10);
                // Aggregate the fine grid down to the histogram resolution.
                GridDensity coarse(static_cast<std::size_t>(cfg.density_bins));
                const std::size_t factor = grid.size() / coarse.size();
                if (factor * coarse.size() != grid.size()) {
                    throw std::invalid_argument("run_density: grid_bins must be a multiple of density_bins");
                }
                for (std::size_t i = 0; i < coarse.size(); ++i) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < factor; ++k) acc += grid.weights[i * factor + k];
                    coarse.weights[i] = acc / static_cast<double>(factor);
                }
                out.grid_densities.push_back(std::move(coarse));
            } else {
                out.grid_densities.emplace_back(0);
            }
        }
        for (std::size_t s = 0; s < out.sigmas.size(); ++s) {
            out.l1_to_noiseless.push_back(l1_distance(out.histograms[s], out.histograms[0]));
            out.l1_to_grid.push_back(out.grid_densities[s].size() > 0
                                         ? l1_distance(out.histograms[s], out.grid_densities[s])
                                         : std::numeric_limits<double>::quiet_NaN());
        }
    } catch (const std::exception& e) {
        guard.fail(e.what());
        throw;
    }

    if (csv) {
        (*csv) << "sigma,bin_center,orbit_density,grid_density\n";
        for (std::size_t s = 0; s < out.sigmas.size(); ++s) {
            const GridDensity& h = out.histograms[s];
            for (std::size_t i = 0; i < h.size(); ++i) {
                (*csv) << fmt(out.sigmas[s]) << ',' << fmt(h.bin_center(i)) << ','
                       << fmt(h.weights[i]) << ',';
                if (out.grid_densities[s].size() > 0) (*csv) << fmt(out.grid_densities[s].weights[i]);
                (*csv) << '\n';
            }
        }
    }
    guard.complete();
    return out;
}

DensityOutput run_density(const ExperimentConfig& cfg) { return run_density(cfg, nullptr); }

} // namespace kdr
