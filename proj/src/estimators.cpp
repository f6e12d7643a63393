#include "kdr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace kdr {

namespace {

int chunk_count(std::int64_t n, int threads) {
    threads = std::max(1, threads);
    return static_cast<int>(std::min<std::int64_t>(threads, std::max<std::int64_t>(n, 1)));
}

// Splits [0, n) into contiguous chunks and runs body(chunk, begin, end) on
// up to `threads` workers. Chunk indices are deterministic, so per-chunk
// accumulators can be merged in a fixed order afterwards.
void parallel_chunks(std::int64_t n, int threads,
                     const std::function<void(int, std::int64_t, std::int64_t)>& body) {
    const int workers = chunk_count(n, threads);
    const std::int64_t chunk = (n + workers - 1) / workers;
    if (workers <= 1) {
        body(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t begin = w * chunk;
        const std::int64_t end = std::min<std::int64_t>(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, w, begin, end] {
            try {
                body(w, begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace

const NoiseModel& noise_at(const NoiseModels& models, int step) {
    if (models.empty()) {
        throw std::invalid_argument("noise_at: no noise models supplied");
    }
    return models.size() == 1 ? *models.front() : *models.at(static_cast<std::size_t>(step));
}

EstimatorResult finite_time_estimator(const SystemSpec& sys, const NoiseModels& noises,
                                      const Observable& observable,
                                      const InitialDistribution& init,
                                      const FiniteTimeConfig& cfg) {
    const int T = cfg.horizon;
    const std::int64_t L = cfg.paths;
    if (T < 1) throw std::invalid_argument("finite_time_estimator: horizon must be >= 1");
    if (L < 2) throw std::invalid_argument("finite_time_estimator: need at least 2 paths");
    if (!observable.eval) throw std::invalid_argument("finite_time_estimator: observable.eval missing");
    if (!init.sampler) throw std::invalid_argument("finite_time_estimator: initial sampler missing");
    if (sys.horizon && *sys.horizon != T) {
        throw std::invalid_argument("finite_time_estimator: config horizon " + std::to_string(T) +
                                    " differs from the system's declared horizon " +
                                    std::to_string(*sys.horizon));
    }
    if (sys.maps.size() > 1 && static_cast<int>(sys.maps.size()) != T) {
        throw std::invalid_argument("finite_time_estimator: per-step map count differs from horizon");
    }
    if (noises.size() > 1 && static_cast<int>(noises.size()) != T) {
        throw std::invalid_argument("finite_time_estimator: per-step noise count differs from horizon");
    }

    const bool has_dphi_hook = static_cast<bool>(observable.param_derivative);
    const bool has_init_score = static_cast<bool>(init.score_gamma);

    std::vector<double> score_sum(static_cast<std::size_t>(L));
    std::vector<double> phi_final(static_cast<std::size_t>(L));
    std::vector<double> dphi_term(has_dphi_hook ? static_cast<std::size_t>(L) : 0);
    std::vector<double> init_score(has_init_score ? static_cast<std::size_t>(L) : 0);

    const int steps = T;
    const int workers = chunk_count(L, cfg.threads);
    std::vector<std::vector<StreamingMoments>> step_moments_per_worker;
    std::vector<StreamingMoments> pooled_per_worker(static_cast<std::size_t>(workers));
    if (cfg.per_step_score_moments) {
        step_moments_per_worker.assign(static_cast<std::size_t>(workers),
                                       std::vector<StreamingMoments>(static_cast<std::size_t>(steps)));
    }

    parallel_chunks(L, cfg.threads, [&](int worker_id, std::int64_t begin, std::int64_t end) {
        StreamingMoments& pooled = pooled_per_worker[static_cast<std::size_t>(worker_id)];
        std::vector<StreamingMoments>* step_moments =
            cfg.per_step_score_moments ? &step_moments_per_worker[static_cast<std::size_t>(worker_id)]
                                       : nullptr;

        State x(static_cast<std::size_t>(sys.dimension));
        State z(static_cast<std::size_t>(sys.dimension));
        TangentVector df(static_cast<std::size_t>(sys.dimension));
        NoiseSample y;

        for (std::int64_t l = begin; l < end; ++l) {
            RngStream rng(cfg.seed, static_cast<std::uint64_t>(l));
            init.sampler(cfg.gamma, rng, x);
            if (static_cast<int>(x.size()) != sys.dimension || !all_finite(x.coords)) {
                throw std::runtime_error("finite_time_estimator: bad initial state (path " +
                                         std::to_string(l) + ")");
            }
            if (has_init_score) {
                init_score[static_cast<std::size_t>(l)] = init.score_gamma(cfg.gamma, x);
            }
            double s = 0.0;
            for (int m = 0; m < steps; ++m) {
                const NoiseModel& noise = noise_at(noises, m);
                sys.map_at(m)(cfg.gamma, x, z);
                noise.sample(cfg.gamma, z, rng, y);
                sys.map_derivative_at(m)(cfg.gamma, x, df);
                const ScoreTerm term = noise.score_term(cfg.gamma, x, df, y);
                if (!std::isfinite(term)) {
                    throw std::runtime_error("finite_time_estimator: non-finite score term (path " +
                                             std::to_string(l) + ", step " + std::to_string(m) + ")");
                }
                pooled.add(term);
                if (step_moments) (*step_moments)[static_cast<std::size_t>(m)].add(term);
                s += term;
                for (std::size_t i = 0; i < z.coords.size(); ++i) {
                    z.coords[i] += y.embedded[i];
                }
                if (sys.domain == Domain::TorusMod1) wrap_torus(z);
                if (!all_finite(z.coords)) {
                    throw std::runtime_error("finite_time_estimator: non-finite state (path " +
                                             std::to_string(l) + ", step " + std::to_string(m) + ")");
                }
                std::swap(x.coords, z.coords);
            }
            const double phi = observable.eval(cfg.gamma, x);
            if (!std::isfinite(phi)) {
                throw std::runtime_error("finite_time_estimator: non-finite observable (path " +
                                         std::to_string(l) + ")");
            }
            phi_final[static_cast<std::size_t>(l)] = phi;
            score_sum[static_cast<std::size_t>(l)] = -s;
            if (has_dphi_hook) {
                dphi_term[static_cast<std::size_t>(l)] = observable.param_derivative(cfg.gamma, x);
            }
        }
    });

    // Second pass over the per-path scalars.
    StreamingMoments phi_moments;
    for (std::int64_t l = 0; l < L; ++l) phi_moments.add(phi_final[static_cast<std::size_t>(l)]);
    const double phi_avg = phi_moments.mean();

    StreamingMoments main_moments;
    StreamingMoments total_moments;
    StreamingMoments dphi_hook_moments;
    StreamingMoments init_score_moments;
    for (std::int64_t l = 0; l < L; ++l) {
        const std::size_t i = static_cast<std::size_t>(l);
        const double main = score_sum[i] * (phi_final[i] - phi_avg);
        double total = main;
        if (has_dphi_hook) {
            dphi_hook_moments.add(dphi_term[i]);
            total += dphi_term[i];
        }
        if (has_init_score) {
            const double term = phi_final[i] * init_score[i];
            init_score_moments.add(term);
            total += term;
        }
        main_moments.add(main);
        total_moments.add(total);
    }

    EstimatorResult result;
    result.phi_avg = phi_avg;
    result.dphi_avg = total_moments.mean();
    result.se_phi = phi_moments.standard_error();
    result.se_dphi = total_moments.standard_error();
    result.samples_used = L;
    result.diagnostics.dphi_main = main_moments.mean();
    if (has_dphi_hook || has_init_score) {
        CorrectionTerms corr;
        if (has_dphi_hook) corr.delta_phi_term = dphi_hook_moments.mean();
        if (has_init_score) corr.initial_score_term = init_score_moments.mean();
        result.correction_terms = corr;
    }

    StreamingMoments pooled;
    for (const auto& p : pooled_per_worker) pooled = merge(pooled, p);
    result.diagnostics.score_mean = pooled.mean();
    result.diagnostics.score_std = pooled.stddev();
    result.diagnostics.score_count = pooled.count();
    if (cfg.per_step_score_moments) {
        std::vector<StreamingMoments> merged_steps(static_cast<std::size_t>(steps));
        for (const auto& worker : step_moments_per_worker) {
            for (int m = 0; m < steps; ++m) {
                merged_steps[static_cast<std::size_t>(m)] =
                    merge(merged_steps[static_cast<std::size_t>(m)], worker[static_cast<std::size_t>(m)]);
            }
        }
        result.diagnostics.per_step_score = std::move(merged_steps);
    }
    return result;
}

namespace {

struct ErgodicSegmentResult {
    LagCrossAccumulator lag;
    StreamingMoments phi_moments;
    std::vector<double> phi_batch_sums; // complete batches only
    StreamingMoments score_moments;

    ErgodicSegmentResult(int window, std::int64_t batch_length) : lag(window, batch_length) {}
};

ErgodicSegmentResult run_ergodic_segment(const SystemSpec& sys, const NoiseModels& noises,
                                         const Observable& observable, const ErgodicConfig& cfg,
                                         const InitialDistribution* init, std::int64_t segment_index,
                                         std::int64_t segment_length, std::int64_t batch_length) {
    ErgodicSegmentResult out(cfg.window, batch_length);
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(segment_index));

    State x(static_cast<std::size_t>(sys.dimension));
    State z(static_cast<std::size_t>(sys.dimension));
    TangentVector df(static_cast<std::size_t>(sys.dimension));
    NoiseSample y;

    if (init && init->sampler) {
        init->sampler(cfg.gamma, rng, x);
    }

    const NoiseModel& noise = noise_at(noises, 0);

    // Land on the physical measure before accumulating anything.
    for (std::int64_t m = 0; m < cfg.spin_up; ++m) {
        sys.map_at(0)(cfg.gamma, x, z);
        noise.sample(cfg.gamma, z, rng, y);
        for (std::size_t i = 0; i < z.coords.size(); ++i) z.coords[i] += y.embedded[i];
        if (sys.domain == Domain::TorusMod1) wrap_torus(z);
        if (!all_finite(z.coords)) {
            throw std::runtime_error("ergodic_estimator: non-finite state during spin-up step " +
                                     std::to_string(m));
        }
        std::swap(x.coords, z.coords);
    }

    const std::int64_t total_steps = segment_length + cfg.window;
    double phi_batch_acc = 0.0;
    std::int64_t phi_batch_count = 0;
    for (std::int64_t t = 1; t <= total_steps; ++t) {
        sys.map_at(0)(cfg.gamma, x, z);
        noise.sample(cfg.gamma, z, rng, y);
        const bool scored = (t >= 2 && t <= segment_length + 1);
        if (scored) {
            sys.map_derivative_at(0)(cfg.gamma, x, df);
            const ScoreTerm term = noise.score_term(cfg.gamma, x, df, y);
            if (!std::isfinite(term)) {
                throw std::runtime_error("ergodic_estimator: non-finite score term at step " +
                                         std::to_string(t));
            }
            out.lag.push_score(term);
            out.score_moments.add(term);
        }
        for (std::size_t i = 0; i < z.coords.size(); ++i) z.coords[i] += y.embedded[i];
        if (sys.domain == Domain::TorusMod1) wrap_torus(z);
        if (!all_finite(z.coords)) {
            throw std::runtime_error("ergodic_estimator: non-finite state at step " +
                                     std::to_string(t));
        }
        std::swap(x.coords, z.coords);
        const double phi = observable.eval(cfg.gamma, x);
        if (!std::isfinite(phi)) {
            throw std::runtime_error("ergodic_estimator: non-finite observable at step " +
                                     std::to_string(t));
        }
        out.lag.add_observation(phi);
        if (t <= segment_length) {
            out.phi_moments.add(phi);
            phi_batch_acc += phi;
            phi_batch_count += 1;
            if (phi_batch_count == batch_length) {
                out.phi_batch_sums.push_back(phi_batch_acc);
                phi_batch_acc = 0.0;
                phi_batch_count = 0;
            }
        }
    }
    return out;
}

} // namespace

EstimatorResult ergodic_estimator(const SystemSpec& sys, const NoiseModels& noises,
                                  const Observable& observable, const ErgodicConfig& cfg,
                                  const InitialDistribution* init) {
    if (!sys.time_homogeneous()) {
        throw std::invalid_argument("ergodic_estimator: system must be time-homogeneous");
    }
    if (cfg.window < 1) throw std::invalid_argument("ergodic_estimator: window must be >= 1");
    if (cfg.window >= cfg.orbit_length) {
        throw std::invalid_argument("ergodic_estimator: window must be smaller than the orbit length");
    }
    if (cfg.spin_up < 0) throw std::invalid_argument("ergodic_estimator: spin_up must be >= 0");
    if (cfg.segments < 1) throw std::invalid_argument("ergodic_estimator: segments must be >= 1");
    if (!observable.eval) throw std::invalid_argument("ergodic_estimator: observable.eval missing");

    const std::int64_t batch_length = cfg.batch_length > 0 ? cfg.batch_length : 10 * cfg.window;
    const std::int64_t L = cfg.orbit_length;
    const int K = cfg.segments;

    std::vector<std::int64_t> segment_lengths(static_cast<std::size_t>(K), L / K);
    for (std::int64_t k = 0; k < L % K; ++k) segment_lengths[static_cast<std::size_t>(k)] += 1;

    std::vector<std::optional<ErgodicSegmentResult>> segments(static_cast<std::size_t>(K));
    parallel_chunks(K, cfg.threads, [&](int, std::int64_t begin, std::int64_t end) {
        for (std::int64_t k = begin; k < end; ++k) {
            segments[static_cast<std::size_t>(k)] =
                run_ergodic_segment(sys, noises, observable, cfg, init, k,
                                    segment_lengths[static_cast<std::size_t>(k)], batch_length);
        }
    });

    // Merge in segment order: results depend on the segmentation only.
    LagCrossAccumulator lag(cfg.window, batch_length);
    StreamingMoments phi_moments;
    StreamingMoments score_moments;
    std::vector<double> phi_batch_sums;
    std::vector<LagCrossAccumulator::BatchPartial> score_batches;
    for (int k = 0; k < K; ++k) {
        ErgodicSegmentResult& seg = *segments[static_cast<std::size_t>(k)];
        lag.merge_from(seg.lag);
        phi_moments = merge(phi_moments, seg.phi_moments);
        score_moments = merge(score_moments, seg.score_moments);
        for (double s : seg.phi_batch_sums) phi_batch_sums.push_back(s);
        for (const auto& b : seg.lag.batches()) {
            if (b.count == batch_length) score_batches.push_back(b);
        }
    }

    const double phi_avg = phi_moments.mean();

    EstimatorResult result;
    result.phi_avg = phi_avg;
    result.dphi_avg = lag.centralized_sum(phi_avg);
    result.samples_used = lag.retired_count();
    result.diagnostics.dphi_main = result.dphi_avg;
    result.diagnostics.dphi_uncentralized = lag.uncentralized_sum();
    result.diagnostics.score_mean = score_moments.mean();
    result.diagnostics.score_std = score_moments.stddev();
    result.diagnostics.score_count = score_moments.count();

    // Batch-means standard errors; batch k contributes
    // -(sumA_k - phi_avg * W * sumB_k) / count_k.
    StreamingMoments dphi_batches;
    for (const auto& b : score_batches) {
        const double mean_k = -(b.sum_weighted -
                                phi_avg * static_cast<double>(cfg.window) * b.sum_score) /
                              static_cast<double>(b.count);
        dphi_batches.add(mean_k);
    }
    StreamingMoments phi_batches;
    for (double s : phi_batch_sums) phi_batches.add(s / static_cast<double>(batch_length));

    if (dphi_batches.count() >= 10) {
        result.se_dphi = dphi_batches.stddev() / std::sqrt(static_cast<double>(dphi_batches.count()));
    } else if (dphi_batches.count() >= 2) {
        result.se_dphi = dphi_batches.stddev() / std::sqrt(static_cast<double>(dphi_batches.count()));
        result.diagnostics.notes.push_back(
            "fewer than 10 complete batches; dphi standard error is unreliable");
    } else {
        result.se_dphi = std::numeric_limits<double>::quiet_NaN();
        result.diagnostics.notes.push_back("too few batches for a dphi standard error");
    }
    if (phi_batches.count() >= 2) {
        result.se_phi = phi_batches.stddev() / std::sqrt(static_cast<double>(phi_batches.count()));
    } else {
        result.se_phi = phi_moments.standard_error();
        result.diagnostics.notes.push_back("too few batches; phi standard error assumes independence");
    }
    if (L < 100 * static_cast<std::int64_t>(cfg.window)) {
        result.diagnostics.notes.push_back("orbit length below 100 windows; expect large variance");
    }
    return result;
}

CorrectionTerms chart_corrections(const Observable& observable, const InitialDistribution& init,
                                  double gamma, const std::vector<State>& initial_states,
                                  const std::vector<State>& final_states) {
    if (!observable.param_derivative || !init.score_gamma) {
        throw std::invalid_argument(
            "chart_corrections: corrections unavailable (param_derivative or score_gamma missing)");
    }
    if (initial_states.size() != final_states.size() || initial_states.empty()) {
        throw std::invalid_argument("chart_corrections: need matching non-empty endpoint lists");
    }
    StreamingMoments dphi, init_term;
    for (std::size_t l = 0; l < final_states.size(); ++l) {
        dphi.add(observable.param_derivative(gamma, final_states[l]));
        init_term.add(observable.eval(gamma, final_states[l]) * init.score_gamma(gamma, initial_states[l]));
    }
    CorrectionTerms out;
    out.delta_phi_term = dphi.mean();
    out.initial_score_term = init_term.mean();
    return out;
}

MonteCarloEstimate one_step_response(
    const std::function<void(RngStream&, State&)>& pre_noise_sampler, const NoiseModel& noise,
    const std::function<void(const State&, TangentVector&)>& df_field,
    const std::function<double(const State&)>& observable, std::int64_t samples,
    std::uint64_t seed, double gamma) {
    if (samples < 2) throw std::invalid_argument("one_step_response: need at least 2 samples");
    RngStream rng(seed, 0);
    State z;
    TangentVector df;
    NoiseSample y;
    State x1;
    StreamingMoments moments;
    for (std::int64_t l = 0; l < samples; ++l) {
        pre_noise_sampler(rng, z);
        noise.sample(gamma, z, rng, y);
        df_field(z, df);
        const ScoreTerm term = noise.score_term(gamma, z, df, y);
        x1.coords.assign(z.coords.begin(), z.coords.end());
        for (std::size_t i = 0; i < x1.coords.size(); ++i) x1.coords[i] += y.embedded[i];
        const double value = -observable(x1) * term;
        if (!std::isfinite(value)) {
            throw std::runtime_error("one_step_response: non-finite sample at index " +
                                     std::to_string(l));
        }
        moments.add(value);
    }
    return MonteCarloEstimate{moments.mean(), moments.standard_error()};
}

} // namespace kdr
