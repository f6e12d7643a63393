#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kdr/estimators.hpp"
#include "kdr/models.hpp"
#include "kdr/oracle.hpp"

namespace kdr {

enum class ModelKind { Tent, Network, Ar1 };
enum class EstimatorKind { Ergodic, FiniteTime };
enum class SweepAxis { SampleCount, Window };

// Batch experiment description. Defaults reproduce the tent-map study;
// the fully resolved form is echoed into every CSV header.
struct ExperimentConfig {
    ModelKind model = ModelKind::Tent;
    EstimatorKind estimator = EstimatorKind::Ergodic;

    // Model parameters. sigma == 0 selects the noiseless baseline, for
    // which only plain averages (no derivative) are computed.
    double sigma = 0.1;
    double ar1_a = 0.5;
    NetworkNoiseMode network_noise = NetworkNoiseMode::Foliated1D;
    NetworkForm network_form = NetworkForm::Chart;

    // Estimator knobs: horizon for finite-time, window/spin_up for ergodic,
    // samples = paths (finite-time) or orbit length (ergodic).
    int horizon = network_layers;
    int window = tent_default_window;
    std::int64_t spin_up = 1000;
    std::int64_t samples = 1000000;
    std::int64_t batch_length = 0;
    int segments = 1;

    // Gamma sweep (count == 1 evaluates only `gamma_start`).
    double gamma_start = 3.0;
    double gamma_stop = 3.0;
    int gamma_count = 1;

    std::uint64_t seed = 12345;
    int repetitions = 1;
    // <= 0 selects all available cores; results are worker-count invariant.
    int threads = 0;

    // Density study.
    std::vector<double> density_sigmas{0.05, 0.1, 0.2};
    std::int64_t density_samples = 10000000;
    int density_bins = 256;
    std::size_t grid_bins = 4096;

    std::string output;
};

std::string to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
// Field-by-field overlay used by the CLI: returns `base` with every key
// present in `json_text` replaced.
ExperimentConfig apply_json_overrides(const ExperimentConfig& base, const std::string& json_text);

// Deterministic per-run seed derivation.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

std::vector<double> gamma_grid(const ExperimentConfig& cfg);

// Builds the configured model at the given gamma. sigma == 0 yields an
// empty noise list (deterministic baseline).
Problem build_problem(const ExperimentConfig& cfg, double gamma);

struct SweepRow {
    double gamma = 0.0;
    int repetition = 0;
    EstimatorResult result;
    bool baseline = false; // no noise: only phi_avg is meaningful
    double wall_seconds = 0.0;
};

struct SweepOutput {
    std::vector<SweepRow> rows;
    bool has_corrections = false;
};

// One row per (gamma, repetition). Estimator errors are annotated with the
// offending gamma; a partial CSV always ends with an error marker line.
SweepOutput run_sweep(const ExperimentConfig& cfg, std::ostream* csv);
SweepOutput run_sweep(const ExperimentConfig& cfg);

struct ConvergenceRow {
    double axis_value = 0.0;
    double mean_dphi = 0.0;
    double std_dphi = 0.0;
    double mean_dphi_uncentralized = 0.0;
    double std_dphi_uncentralized = 0.0;
    double mean_se_dphi = 0.0;
    int repetitions = 0;
};

struct ConvergenceOutput {
    std::vector<ConvergenceRow> rows;
    double slope = 0.0;               // log std(dphi) vs log axis
    double slope_uncentralized = 0.0;
};

// Repeated independent runs along one axis (sample count or window),
// reporting the spread of the estimate and the fitted log-log slope.
// Requires repetitions >= 10.
ConvergenceOutput run_convergence_study(const ExperimentConfig& cfg, SweepAxis axis,
                                        const std::vector<double>& axis_values, std::ostream* csv);
ConvergenceOutput run_convergence_study(const ExperimentConfig& cfg, SweepAxis axis,
                                        const std::vector<double>& axis_values);

struct DensityOutput {
    std::vector<double> sigmas;           // 0 first, then the configured list
    std::vector<GridDensity> histograms;  // orbit histograms, one per sigma
    std::vector<GridDensity> grid_densities; // grid-oracle references (empty for sigma 0)
    std::vector<double> l1_to_noiseless;  // distance to the sigma = 0 histogram
    std::vector<double> l1_to_grid;       // distance to the grid reference (NaN for sigma 0)
};

// Orbit histograms of a one-dimensional model across noise scales, with
// the grid-oracle stationary density as cross-check.
DensityOutput run_density(const ExperimentConfig& cfg, std::ostream* csv);
DensityOutput run_density(const ExperimentConfig& cfg);

} // namespace kdr
