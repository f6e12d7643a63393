#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kdr/core.hpp"
#include "kdr/noise.hpp"
#include "kdr/stats.hpp"

namespace kdr {

using NoiseModels = std::vector<std::shared_ptr<const NoiseModel>>;

// The per-step scalar accumulated by every estimator: df . (dp/p)(y) for
// translation kernels, minus the fused generalized score otherwise.
// Always finite; generation checks enforce it.
using ScoreTerm = double;

// Per-step noise lookup: a single entry serves every step of a
// time-homogeneous problem.
const NoiseModel& noise_at(const NoiseModels& models, int step);

struct FiniteTimeConfig {
    int horizon = 1;            // T
    std::int64_t paths = 2;     // L, independent sample paths
    double gamma = 0.0;
    std::uint64_t seed = 0;
    int threads = 1;
    // Collect per-step moments of the score terms (for the free
    // centralization diagnostics); costs one accumulator per step.
    bool per_step_score_moments = false;
};

struct ErgodicConfig {
    std::int64_t spin_up = 1000;    // M_pre
    int window = 1;                 // W, decorrelation lags kept
    std::int64_t orbit_length = 2;  // L, score terms accumulated
    double gamma = 0.0;
    std::uint64_t seed = 0;
    int threads = 1;
    // 0 picks the default 10 * window.
    std::int64_t batch_length = 0;
    // Independent orbit segments (each with its own spin-up); results are
    // a function of the segment count, never of the thread count.
    int segments = 1;
};

struct CorrectionTerms {
    std::optional<double> delta_phi_term;
    std::optional<double> initial_score_term;
};

struct EstimatorDiagnostics {
    // Centralized main term, before chart corrections.
    double dphi_main = std::numeric_limits<double>::quiet_NaN();
    // Ergodic estimate without centralization (grows like O(W)).
    double dphi_uncentralized = std::numeric_limits<double>::quiet_NaN();
    // Pooled moments of the score terms (free centralization check).
    double score_mean = 0.0;
    double score_std = 0.0;
    std::int64_t score_count = 0;
    // Per-step score moments (finite-time, opt-in).
    std::vector<StreamingMoments> per_step_score;
    std::vector<std::string> notes;
};

struct EstimatorResult {
    double phi_avg = 0.0;
    double dphi_avg = 0.0;
    double se_phi = 0.0;
    double se_dphi = 0.0;
    std::int64_t samples_used = 0;
    std::optional<CorrectionTerms> correction_terms;
    EstimatorDiagnostics diagnostics;
};

struct MonteCarloEstimate {
    double value = 0.0;
    double standard_error = 0.0;
};

// Finite-horizon ensemble estimator. Runs L independent paths of T steps,
// accumulating per path the score sum S_l = -sum_m I_{l,m} and the final
// observable, then forms
//
//   phi_avg  = mean_l Phi(x_{l,T})
//   dphi_avg = mean_l S_l (Phi(x_{l,T}) - phi_avg)  (+ chart corrections)
//
// in a second pass over the stored (S_l, Phi_l) scalars. Trajectories are
// never stored. Chart corrections are included whenever the observable
// and/or the initial distribution provide the corresponding hooks.
EstimatorResult finite_time_estimator(const SystemSpec& sys, const NoiseModels& noises,
                                      const Observable& observable,
                                      const InitialDistribution& init,
                                      const FiniteTimeConfig& cfg);

// Single-orbit estimator for physical measures of time-homogeneous
// systems. After spin_up steps the orbit runs window + orbit_length more,
// and the lagged double sum
//
//   dphi_avg = -(1/L) sum_{n=1..W} sum_{l=1..L} (Phi_{n+l} - phi_avg) I_{l+1}
//
// is accumulated in one pass through a W-deep lag buffer; centralization is
// applied after the pass. Standard errors come from non-overlapping batch
// means. `init` (optional) draws the pre-spin-up state; default is the
// origin.
EstimatorResult ergodic_estimator(const SystemSpec& sys, const NoiseModels& noises,
                                  const Observable& observable, const ErgodicConfig& cfg,
                                  const InitialDistribution* init = nullptr);

// Chart-correction terms over explicitly supplied path endpoints:
//   delta_phi_term     = mean_l dPhi/dgamma (gamma, x_{l,T})
//   initial_score_term = mean_l Phi(gamma, x_{l,T}) * score_gamma(gamma, x_{l,0})
// Throws std::invalid_argument when a required hook is missing.
CorrectionTerms chart_corrections(const Observable& observable, const InitialDistribution& init,
                                  double gamma, const std::vector<State>& initial_states,
                                  const std::vector<State>& final_states);

// Monte-Carlo estimate of the one-step response
//   -(1/L) sum_l Phi(x_1) df(z) . (dp/p)(y),  x_1 = z + y,  z ~ q.
// Exposed for validation against grid convolution references.
MonteCarloEstimate one_step_response(
    const std::function<void(RngStream&, State&)>& pre_noise_sampler, const NoiseModel& noise,
    const std::function<void(const State&, TangentVector&)>& df_field,
    const std::function<double(const State&)>& observable, std::int64_t samples,
    std::uint64_t seed, double gamma = 0.0);

} // namespace kdr
