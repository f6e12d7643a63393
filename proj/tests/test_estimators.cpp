#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <memory>

#include "kdr/estimators.hpp"
#include "kdr/models.hpp"

using namespace kdr;

TEST_SUITE_BEGIN("estimators");

namespace {

Problem ar1_with_zero_df(double a, double sigma) {
    Problem p = build_ar1(a, 0.0, sigma);
    p.sys.map_derivatives[0] = [](double, const State&, TangentVector& out) {
        out.coords.assign(1, 0.0);
    };
    return p;
}

InitialDistribution point_mass(double value) {
    InitialDistribution init;
    init.sampler = [value](double, RngStream&, State& out) { out.coords.assign(1, value); };
    return init;
}

} // namespace

TEST_CASE("zero perturbation direction gives exactly zero response") {
    Problem p = ar1_with_zero_df(0.5, 0.3);
    FiniteTimeConfig cfg;
    cfg.horizon = 1;
    cfg.paths = 500;
    cfg.seed = 41;
    const EstimatorResult r = finite_time_estimator(p.sys, p.noise, p.observable, p.init, cfg);
    CHECK(r.dphi_avg == 0.0);
    CHECK(r.se_dphi == 0.0);
    CHECK(r.samples_used == 500);

    ErgodicConfig ecfg;
    ecfg.window = 5;
    ecfg.orbit_length = 5000;
    ecfg.spin_up = 100;
    ecfg.seed = 42;
    const EstimatorResult e = ergodic_estimator(p.sys, p.noise, p.observable, ecfg);
    CHECK(e.dphi_avg == 0.0);
}

TEST_CASE("one-step response of the gaussian mean shift") {
    // Shifting the mean of a Gaussian moves E[x] one-for-one; at the
    // symmetric point the derivative of E[x^2] vanishes.
    const IsotropicGaussian noise(0.5, 1);
    const auto q = [](RngStream&, State& out) { out.coords.assign(1, 0.0); };
    const auto df = [](const State&, TangentVector& out) { out.coords.assign(1, 1.0); };

    const MonteCarloEstimate linear =
        one_step_response(q, noise, df, [](const State& x) { return x[0]; }, 200000, 43);
    CHECK(std::abs(linear.value - 1.0) <= 3.0 * linear.standard_error);

    const MonteCarloEstimate quadratic =
        one_step_response(q, noise, df, [](const State& x) { return x[0] * x[0]; }, 200000, 44);
    CHECK(std::abs(quadratic.value) <= 3.0 * quadratic.standard_error);

    const auto zero_df = [](const State&, TangentVector& out) { out.coords.assign(1, 0.0); };
    const MonteCarloEstimate zero =
        one_step_response(q, noise, zero_df, [](const State& x) { return x[0]; }, 1000, 45);
    CHECK(zero.value == 0.0);
}

TEST_CASE("finite-time estimator recovers the ar1 geometric-sum response") {
    Problem p = build_ar1(0.5, 0.0, 0.3);
    FiniteTimeConfig cfg;
    cfg.horizon = 60;
    cfg.paths = 1000000;
    cfg.seed = 46;
    cfg.gamma = 0.0;
    const EstimatorResult r = finite_time_estimator(p.sys, p.noise, p.observable, point_mass(0.0), cfg);
    const double expected = 2.0 * (1.0 - std::pow(0.5, 60));
    CHECK(std::abs(r.dphi_avg - expected) <= 3.0 * r.se_dphi);
    CHECK(r.se_dphi > 0.0);
    CHECK(r.se_dphi < 0.05);
}

TEST_CASE("ergodic estimator recovers the ar1 stationary response") {
    Problem p = build_ar1(0.5, 0.0, 0.3);
    ErgodicConfig cfg;
    cfg.window = 30;
    cfg.orbit_length = 200000;
    cfg.spin_up = 1000;
    cfg.seed = 47;
    const EstimatorResult r = ergodic_estimator(p.sys, p.noise, p.observable, cfg);
    CHECK(std::abs(r.dphi_avg - 2.0) <= 3.0 * r.se_dphi);
    CHECK(std::abs(r.phi_avg) <= 5.0 * r.se_phi);
    CHECK(r.samples_used == cfg.orbit_length);
    CHECK(r.se_dphi > 0.0);
}

TEST_CASE("memoryless ar1 gives the pure mean-shift response") {
    // a = 0: the response is 1 exactly.
    Problem p = build_ar1(0.0, 0.0, 0.3);
    ErgodicConfig cfg;
    cfg.window = 5;
    cfg.orbit_length = 100000;
    cfg.spin_up = 100;
    cfg.seed = 58;
    const EstimatorResult r = ergodic_estimator(p.sys, p.noise, p.observable, cfg);
    CHECK(std::abs(r.dphi_avg - 1.0) <= 3.0 * r.se_dphi);
}

TEST_CASE("generalized score route solves the same ar1 through the noise mean") {
    // x' = a x + Y with Y ~ N(gamma, sigma^2) is the same system as the
    // standard AR(1), but the parameter now lives in the noise density;
    // the response must still be 1 / (1 - a).
    const double a = 0.5, sigma = 0.3;
    Problem p;
    p.sys.dimension = 1;
    p.sys.maps.push_back([a](double, const State& x, State& out) {
        out.coords.assign(1, a * x[0]);
    });
    p.sys.map_derivatives.push_back([](double, const State&, TangentVector& out) {
        out.coords.assign(1, 0.0);
    });
    p.noise.push_back(std::make_shared<GeneralScore>(
        1,
        [sigma](double gamma, const State&, RngStream& rng, NoiseSample& out) {
            const double v = gamma + sigma * rng.normal();
            out.raw.assign(1, v);
            out.embedded.assign(1, v);
        },
        [sigma](double gamma, const State&, const NoiseSample& y) {
            return (y.raw[0] - gamma) / (sigma * sigma);
        }));
    p.observable.eval = [](double, const State& x) { return x[0]; };

    ErgodicConfig cfg;
    cfg.window = 30;
    cfg.orbit_length = 200000;
    cfg.spin_up = 1000;
    cfg.seed = 48;
    cfg.gamma = 0.0;
    const EstimatorResult r = ergodic_estimator(p.sys, p.noise, p.observable, cfg);
    CHECK(std::abs(r.dphi_avg - 2.0) <= 3.0 * r.se_dphi);
}

TEST_CASE("centralization changes the estimate by exactly the free-centralization identity") {
    Problem p = build_ar1(0.6, 0.2, 0.4);
    ErgodicConfig cfg;
    cfg.window = 12;
    cfg.orbit_length = 50000;
    cfg.spin_up = 500;
    cfg.seed = 49;
    cfg.gamma = 0.2;
    const EstimatorResult r = ergodic_estimator(p.sys, p.noise, p.observable, cfg);
    // centralized - uncentralized = phi_avg * W * (sum I) / L.
    const double sum_scores = r.diagnostics.score_mean * static_cast<double>(r.diagnostics.score_count);
    const double identity = r.phi_avg * static_cast<double>(cfg.window) * sum_scores /
                            static_cast<double>(r.samples_used);
    CHECK(r.dphi_avg - r.diagnostics.dphi_uncentralized ==
          doctest::Approx(identity).epsilon(1e-10));
}

TEST_CASE("finite-time from a stationary ensemble agrees with the single orbit") {
    const double a = 0.5, sigma = 0.3, gamma = 0.0;
    Problem p = build_ar1(a, gamma, sigma);

    ErgodicConfig ecfg;
    ecfg.window = 30;
    ecfg.orbit_length = 400000;
    ecfg.spin_up = 1000;
    ecfg.seed = 50;
    const EstimatorResult ergodic = ergodic_estimator(p.sys, p.noise, p.observable, ecfg);

    // Stationary initial ensemble, horizon W + 1.
    InitialDistribution stationary;
    const double sd = sigma / std::sqrt(1.0 - a * a);
    stationary.sampler = [sd](double, RngStream& rng, State& out) {
        out.coords.assign(1, sd * rng.normal());
    };
    FiniteTimeConfig fcfg;
    fcfg.horizon = ecfg.window + 1;
    fcfg.paths = 400000;
    fcfg.seed = 51;
    const EstimatorResult finite =
        finite_time_estimator(p.sys, p.noise, p.observable, stationary, fcfg);

    const double combined = std::sqrt(ergodic.se_dphi * ergodic.se_dphi +
                                      finite.se_dphi * finite.se_dphi);
    CHECK(std::abs(ergodic.dphi_avg - finite.dphi_avg) <= 3.0 * combined);
}

TEST_CASE("per-step score means stay inside the free-centralization band") {
    Problem p = build_network(NetworkParams{});
    FiniteTimeConfig cfg;
    cfg.horizon = network_layers;
    cfg.paths = 4000;
    cfg.seed = 52;
    cfg.per_step_score_moments = true;
    const EstimatorResult r = finite_time_estimator(p.sys, p.noise, p.observable, p.init, cfg);
    REQUIRE(r.diagnostics.per_step_score.size() == static_cast<std::size_t>(network_layers));
    for (const auto& m : r.diagnostics.per_step_score) {
        CHECK(std::abs(m.mean()) <= 3.0 * m.stddev() / std::sqrt(static_cast<double>(m.count())));
    }
}

TEST_CASE("chart corrections report both terms and refuse silently-zero fallbacks") {
    Problem p = build_network(NetworkParams{});
    FiniteTimeConfig cfg;
    cfg.horizon = network_layers;
    cfg.paths = 3000;
    cfg.seed = 53;
    cfg.gamma = 0.1;
    const EstimatorResult r = finite_time_estimator(p.sys, p.noise, p.observable, p.init, cfg);
    REQUIRE(r.correction_terms.has_value());
    // delta Phi is identically -9, so its ensemble mean is exact.
    CHECK(*r.correction_terms->delta_phi_term == -9.0);
    CHECK(r.correction_terms->initial_score_term.has_value());
    CHECK(r.dphi_avg == doctest::Approx(r.diagnostics.dphi_main + *r.correction_terms->delta_phi_term +
                                        *r.correction_terms->initial_score_term)
                            .epsilon(1e-12));

    // Standalone operation on explicit endpoints.
    std::vector<State> x0s, xTs;
    RngStream rng(54, 0);
    for (int l = 0; l < 2000; ++l) {
        State x0(static_cast<std::size_t>(network_dimension));
        for (double& v : x0.coords) v = rng.normal();
        x0s.push_back(x0);
        xTs.push_back(x0);
    }
    const CorrectionTerms terms = chart_corrections(p.observable, p.init, 0.0, x0s, xTs);
    CHECK(*terms.delta_phi_term == -9.0);

    // Gamma = 0 initial score alone has zero mean.
    StreamingMoments score_only;
    for (const State& x0 : x0s) score_only.add(p.init.score_gamma(0.0, x0));
    CHECK(std::abs(score_only.mean()) <= 3.0 * score_only.standard_error());

    // Constant observable: the centralized initial term has zero mean.
    Observable constant;
    constant.eval = [](double, const State&) { return 4.0; };
    constant.param_derivative = [](double, const State&) { return 0.0; };
    const CorrectionTerms const_terms = chart_corrections(constant, p.init, 0.0, x0s, xTs);
    StreamingMoments init_term;
    for (const State& x0 : x0s) init_term.add(4.0 * p.init.score_gamma(0.0, x0));
    CHECK(std::abs(*const_terms.initial_score_term) <= 3.0 * init_term.standard_error());

    Observable no_hook;
    no_hook.eval = [](double, const State&) { return 0.0; };
    CHECK_THROWS_WITH_AS(chart_corrections(no_hook, p.init, 0.0, x0s, xTs),
                         doctest::Contains("corrections unavailable"), std::invalid_argument);
}

TEST_CASE("results are reproducible and thread-count invariant") {
    Problem p = build_ar1(0.5, 0.0, 0.3);
    FiniteTimeConfig cfg;
    cfg.horizon = 20;
    cfg.paths = 20000;
    cfg.seed = 55;
    const EstimatorResult once = finite_time_estimator(p.sys, p.noise, p.observable, p.init, cfg);
    const EstimatorResult again = finite_time_estimator(p.sys, p.noise, p.observable, p.init, cfg);
    CHECK(once.dphi_avg == again.dphi_avg);
    CHECK(once.phi_avg == again.phi_avg);

    FiniteTimeConfig threaded = cfg;
    threaded.threads = 3;
    const EstimatorResult par = finite_time_estimator(p.sys, p.noise, p.observable, p.init, threaded);
    CHECK(par.dphi_avg == once.dphi_avg);
    CHECK(par.phi_avg == once.phi_avg);
    CHECK(par.se_dphi == once.se_dphi);

    ErgodicConfig ecfg;
    ecfg.window = 10;
    ecfg.orbit_length = 50000;
    ecfg.spin_up = 200;
    ecfg.seed = 56;
    ecfg.segments = 4;
    const EstimatorResult seq = ergodic_estimator(p.sys, p.noise, p.observable, ecfg);
    ErgodicConfig epar = ecfg;
    epar.threads = 2;
    const EstimatorResult par2 = ergodic_estimator(p.sys, p.noise, p.observable, epar);
    CHECK(seq.dphi_avg == par2.dphi_avg);
    CHECK(seq.phi_avg == par2.phi_avg);
    CHECK(seq.se_dphi == par2.se_dphi);
}

TEST_CASE("segmented and single-orbit runs agree statistically") {
    Problem p = build_ar1(0.5, 0.0, 0.3);
    ErgodicConfig cfg;
    cfg.window = 20;
    cfg.orbit_length = 200000;
    cfg.spin_up = 500;
    cfg.seed = 57;
    const EstimatorResult one = ergodic_estimator(p.sys, p.noise, p.observable, cfg);
    ErgodicConfig seg = cfg;
    seg.segments = 8;
    const EstimatorResult many = ergodic_estimator(p.sys, p.noise, p.observable, seg);
    const double combined = std::sqrt(one.se_dphi * one.se_dphi + many.se_dphi * many.se_dphi);
    CHECK(std::abs(one.dphi_avg - many.dphi_avg) <= 3.0 * combined);
}

TEST_CASE("invalid configurations are rejected") {
    Problem p = build_ar1(0.5, 0.0, 0.3);
    ErgodicConfig cfg;
    cfg.window = 100;
    cfg.orbit_length = 100;
    CHECK_THROWS_AS(ergodic_estimator(p.sys, p.noise, p.observable, cfg), std::invalid_argument);

    FiniteTimeConfig fcfg;
    fcfg.horizon = 0;
    CHECK_THROWS_AS(finite_time_estimator(p.sys, p.noise, p.observable, p.init, fcfg),
                    std::invalid_argument);

    Problem net = build_network(NetworkParams{});
    FiniteTimeConfig bad;
    bad.horizon = 13; // conflicts with the network's 50 declared layers
    bad.paths = 10;
    CHECK_THROWS_AS(finite_time_estimator(net.sys, net.noise, net.observable, net.init, bad),
                    std::invalid_argument);
}

TEST_CASE("ergodic blowups name the offending step") {
    Problem p;
    p.sys.dimension = 1;
    p.sys.maps.push_back([](double, const State& x, State& out) {
        out.coords.assign(1, x[0] * 4.0 + 1.0);
    });
    p.sys.map_derivatives.push_back([](double, const State&, TangentVector& out) {
        out.coords.assign(1, 1.0);
    });
    p.noise.push_back(std::make_shared<IsotropicGaussian>(0.1, 1));
    p.observable.eval = [](double, const State& x) { return x[0]; };
    ErgodicConfig cfg;
    cfg.window = 3;
    cfg.orbit_length = 5000;
    cfg.spin_up = 0;
    cfg.seed = 60;
    CHECK_THROWS_WITH_AS(ergodic_estimator(p.sys, p.noise, p.observable, cfg),
                         doctest::Contains("step"), std::runtime_error);
}

TEST_CASE("derivative check validates its inputs") {
    Problem p = build_ar1(0.5, 0.0, 0.3);
    State x(std::vector<double>{0.2});
    CHECK_THROWS_AS(check_map_derivative(p.sys, 0.0, x, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(check_map_derivative(p.sys, 0.0, x, -1e-3), std::invalid_argument);
}

TEST_CASE("numerical blowups name the offending path and step") {
    Problem p;
    p.sys.dimension = 1;
    p.sys.maps.push_back([](double, const State& x, State& out) {
        out.coords.assign(1, x[0] * x[0] * 1e4 + 10.0);
    });
    p.sys.map_derivatives.push_back([](double, const State&, TangentVector& out) {
        out.coords.assign(1, 1.0);
    });
    p.noise.push_back(std::make_shared<IsotropicGaussian>(0.1, 1));
    p.observable.eval = [](double, const State& x) { return x[0]; };
    p.init.sampler = [](double, RngStream&, State& out) { out.coords.assign(1, 1.0); };
    FiniteTimeConfig cfg;
    cfg.horizon = 50;
    cfg.paths = 4;
    CHECK_THROWS_WITH_AS(finite_time_estimator(p.sys, p.noise, p.observable, p.init, cfg),
                         doctest::Contains("path"), std::runtime_error);
}

TEST_SUITE_END();
