#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kdr/costmodel.hpp"
#include "kdr/experiments.hpp"
#include "kdr/models.hpp"
#include "kdr/rng.hpp"
#include "kdr/stats.hpp"

using namespace kdr;

TEST_SUITE_BEGIN("costmodel");

TEST_CASE("intrinsic recommendation evaluates the stated formulas") {
    // eps = 0.1, theta = 0.5: W = ceil(3.32) = 4, L = ceil(4 / (0.01 * 0.01)).
    const CostModelOutput out = recommend_intrinsic(0.1, 0.5, 0.1);
    CHECK(out.window == 4);
    CHECK(out.samples == 40000);
    CHECK(out.sigma == 0.1);
    CHECK(out.predicted_error.bias == doctest::Approx(std::pow(0.5, 4)).epsilon(1e-12));
}

TEST_CASE("approximation recommendation picks sigma from the noise-error balance") {
    // sigma = eps * dgamma * (1 - theta) = 0.05; L = ceil(4 / (0.0025 * 0.01)).
    const CostModelOutput out = recommend_approximation(0.1, 0.5, 1.0);
    CHECK(out.sigma == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(out.window == 4);
    CHECK(out.samples == 160000);
    CHECK(out.predicted_error.noise == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("window shrinks as correlations decay faster") {
    int previous = 1 << 20;
    for (double theta : {0.9, 0.7, 0.5, 0.3, 0.1}) {
        const int w = recommend_intrinsic(0.1, theta, 0.1).window;
        CHECK(w <= previous);
        previous = w;
    }
}

TEST_CASE("halving the target error roughly quadruples the sample count") {
    const auto coarse = recommend_intrinsic(0.1, 0.5, 0.1);
    const auto fine = recommend_intrinsic(0.05, 0.5, 0.1);
    const double ratio = static_cast<double>(fine.samples) / static_cast<double>(coarse.samples);
    CHECK(ratio >= 4.0);
    CHECK(ratio <= 8.0); // the log_theta factor adds at most the W growth
}

TEST_CASE("smaller parameter steps inflate the approximation cost quadratically") {
    const auto wide = recommend_approximation(0.1, 0.5, 1.0);
    const auto narrow = recommend_approximation(0.1, 0.5, 0.1);
    CHECK(narrow.sigma == doctest::Approx(wide.sigma * 0.1).epsilon(1e-12));
    const double ratio = static_cast<double>(narrow.samples) / static_cast<double>(wide.samples);
    CHECK(ratio == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("slow decay blows up the approximation cost") {
    const auto fast = recommend_approximation(0.1, 0.5, 1.0);
    const auto slow = recommend_approximation(0.1, 0.99, 1.0);
    CHECK(slow.samples > 100 * fast.samples);
}

TEST_CASE("balance rule: bias and sampling terms sit within a factor two of eps") {
    // The ceiling on W keeps theta^W in (eps * theta, eps]; for theta >= 1/2
    // that is within a factor two of eps.
    for (double theta : {0.5, 0.6, 0.75, 0.9}) {
        for (double eps : {0.03, 0.1, 0.3}) {
            const auto out = recommend_intrinsic(eps, theta, 0.2);
            CHECK(out.predicted_error.bias <= eps * (1.0 + 1e-12));
            CHECK(out.predicted_error.bias >= eps / 2.0 * (1.0 - 1e-12));
            CHECK(out.predicted_error.sampling <= eps * (1.0 + 1e-12));
            CHECK(out.predicted_error.sampling >= eps / 2.0 * (1.0 - 1e-12));
        }
    }
}

TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(recommend_intrinsic(0.1, 1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(recommend_intrinsic(0.1, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(recommend_intrinsic(-0.1, 0.5, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(recommend_intrinsic(0.1, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(recommend_approximation(0.1, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("theta fit recovers the ar1 decay rate") {
    // AR(1) autocorrelation is exactly a^k.
    const double a = 0.5;
    RngStream rng(61, 0);
    std::vector<double> series(100000);
    double x = 0.0;
    for (auto& v : series) {
        x = a * x + rng.normal();
        v = x;
    }
    const double theta = fit_theta(series, 20);
    CHECK(theta == doctest::Approx(a).epsilon(0.1));
}

TEST_CASE("theta fit rejects degenerate series") {
    std::vector<double> constant(1000, 2.0);
    CHECK_THROWS_AS(fit_theta(constant, 10), std::invalid_argument);
    std::vector<double> tiny(10, 0.0);
    CHECK_THROWS_AS(fit_theta(tiny, 10), std::invalid_argument);
}

TEST_CASE("theta fit falls back to the single-lag estimate for fast mixers") {
    // The noised tent map decorrelates within one step: only lag 1 sits
    // above the noise floor and the through-origin estimate is used.
    Problem p = build_tent(3.0, 0.1);
    RngStream rng(62, 0);
    State x(1), z(1);
    NoiseSample y;
    std::vector<double> series;
    for (int t = 0; t < 101000; ++t) {
        p.sys.maps[0](3.0, x, z);
        p.noise[0]->sample(3.0, z, rng, y);
        z.coords[0] += y.embedded[0];
        wrap_torus(z);
        std::swap(x.coords, z.coords);
        if (t >= 1000) series.push_back(x[0]);
    }
    const double theta = fit_theta(series);
    CHECK(theta > 0.0);
    CHECK(theta < 0.2);
}

TEST_CASE("soft check: estimator spread at the recommended settings stays near target") {
    // The balance rule promises total error of order eps; log the repeated-run
    // spread of the tent estimator at the recommended (W, L).
    const double eps = 0.1;
    const CostModelOutput rec = recommend_intrinsic(eps, 0.1, 0.1);
    StreamingMoments reps;
    for (int r = 0; r < 5; ++r) {
        ExperimentConfig cfg;
        cfg.model = ModelKind::Tent;
        cfg.window = rec.window;
        cfg.samples = rec.samples;
        cfg.spin_up = 1000;
        cfg.seed = 9000 + static_cast<std::uint64_t>(r);
        const SweepOutput out = run_sweep(cfg);
        reps.add(out.rows[0].result.dphi_avg);
    }
    MESSAGE("recommended (W, L) = (", rec.window, ", ", rec.samples,
            "); repeated-run std = ", reps.stddev(), " vs 2 eps = ", 2.0 * eps);
    WARN(reps.stddev() <= 2.0 * eps);
}

TEST_SUITE_END();
