#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kdr/noise.hpp"
#include "kdr/stats.hpp"

using namespace kdr;

TEST_SUITE_BEGIN("noise");

TEST_CASE("isotropic sampler reproduces its scale") {
    const IsotropicGaussian model(0.1, 1);
    RngStream rng(5, 0);
    State z(1);
    NoiseSample y;
    StreamingMoments m;
    for (int i = 0; i < 1000000; ++i) {
        model.sample(0.0, z, rng, y);
        m.add(y.raw[0]);
    }
    CHECK(m.stddev() == doctest::Approx(0.1).epsilon(0.01));
    CHECK(std::abs(m.mean()) < 3.0 * m.standard_error());
}

TEST_CASE("directional samples keep all components equal along 1/sqrt(9)") {
    std::vector<double> dir(9, 1.0 / 3.0);
    const DirectionalGaussian model(1.5, dir);
    RngStream rng(6, 0);
    State z(9);
    NoiseSample y;
    for (int i = 0; i < 1000; ++i) {
        model.sample(0.0, z, rng, y);
        REQUIRE(y.raw.size() == 1);
        REQUIRE(y.embedded.size() == 9);
        for (int k = 0; k < 9; ++k) {
            // Rank-one embedding: exactly raw * direction, no leakage.
            CHECK(y.embedded[static_cast<std::size_t>(k)] == y.raw[0] * dir[static_cast<std::size_t>(k)]);
        }
    }
}

TEST_CASE("gaussian score is the exact linear map -y/sigma^2") {
    const IsotropicGaussian model(0.1, 1);
    NoiseSample y;
    y.raw = {0.05};
    y.embedded = y.raw;
    std::vector<double> s;
    model.score(y, s);
    CHECK(s[0] == doctest::Approx(-5.0).epsilon(1e-14));
    y.raw = {0.0};
    model.score(y, s);
    CHECK(s[0] == 0.0);

    const IsotropicGaussian model3(0.7, 3);
    RngStream rng(8, 0);
    for (int i = 0; i < 50; ++i) {
        NoiseSample w;
        w.raw = {rng.normal(), rng.normal(), rng.normal()};
        w.embedded = w.raw;
        model3.score(w, s);
        for (int k = 0; k < 3; ++k) {
            CHECK(s[static_cast<std::size_t>(k)] ==
                  doctest::Approx(-w.raw[static_cast<std::size_t>(k)] / 0.49).epsilon(1e-14));
        }
    }
}

TEST_CASE("score matches a finite difference of the log density") {
    const IsotropicGaussian iso(0.37, 4);
    std::vector<double> dir(9, 1.0 / 3.0);
    const DirectionalGaussian directional(1.5, dir);
    RngStream rng(9, 0);
    const double h = 1e-6;
    std::vector<double> s;

    for (int trial = 0; trial < 100; ++trial) {
        NoiseSample y;
        y.raw.resize(4);
        for (auto& v : y.raw) v = 0.37 * rng.normal();
        y.embedded = y.raw;
        iso.score(y, s);
        for (std::size_t k = 0; k < 4; ++k) {
            std::vector<double> plus = y.raw, minus = y.raw;
            plus[k] += h;
            minus[k] -= h;
            const double fd = (iso.log_density(plus) - iso.log_density(minus)) / (2.0 * h);
            CHECK(s[k] == doctest::Approx(fd).epsilon(1e-6));
        }

        NoiseSample yd;
        yd.raw = {1.5 * rng.normal()};
        directional.score(yd, s);
        std::vector<double> plus = yd.raw, minus = yd.raw;
        plus[0] += h;
        minus[0] -= h;
        const double fd = (directional.log_density(plus) - directional.log_density(minus)) / (2.0 * h);
        CHECK(s[0] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("score contribution projects onto the noise direction") {
    std::vector<double> dir(9, 1.0 / 3.0);
    const DirectionalGaussian model(1.5, dir);
    const double sigma2 = 1.5 * 1.5;
    TangentVector ones(9, 1.0);
    RngStream rng(10, 0);
    State z(9);
    NoiseSample y;
    for (int i = 0; i < 100; ++i) {
        model.sample(0.0, z, rng, y);
        const double xi = y.raw[0];
        // ones . dir = 3, so I = 3 * (-xi / sigma^2).
        CHECK(score_contribution(model, ones, y) ==
              doctest::Approx(-3.0 * xi / sigma2).epsilon(1e-12));
    }

    // Perpendicular perturbation contributes nothing.
    TangentVector perp(9, 0.0);
    perp[0] = 1.0;
    perp[1] = -1.0;
    model.sample(0.0, z, rng, y);
    CHECK(score_contribution(model, perp, y) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("foliated and full-dimensional noise share the score second moment") {
    // With df = 1 in M = 9 both give E[I^2] = M / sigma^2.
    const double sigma = 1.5;
    const int M = 9;
    std::vector<double> dir(M, 1.0 / 3.0);
    const DirectionalGaussian foliated(sigma, dir);
    const IsotropicGaussian full(sigma, M);
    TangentVector ones(static_cast<std::size_t>(M), 1.0);
    RngStream rng(11, 0);
    State z(static_cast<std::size_t>(M));
    NoiseSample y;
    StreamingMoments m_fol, m_full;
    for (int i = 0; i < 100000; ++i) {
        foliated.sample(0.0, z, rng, y);
        const double a = score_contribution(foliated, ones, y);
        m_fol.add(a * a);
        full.sample(0.0, z, rng, y);
        const double b = score_contribution(full, ones, y);
        m_full.add(b * b);
    }
    const double expected = static_cast<double>(M) / (sigma * sigma);
    CHECK(m_fol.mean() == doctest::Approx(expected).epsilon(0.05));
    CHECK(m_full.mean() == doctest::Approx(expected).epsilon(0.05));
    CHECK(m_fol.mean() / m_full.mean() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("free centralization: score terms have zero mean") {
    const IsotropicGaussian model(0.1, 1);
    TangentVector df(1, 0.8);
    RngStream rng(12, 0);
    State z(1);
    NoiseSample y;
    StreamingMoments m;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        model.sample(0.0, z, rng, y);
        m.add(score_contribution(model, df, y));
    }
    CHECK(std::abs(m.mean()) <= 3.0 * m.stddev() / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("general score models expose only the fused derivative") {
    // Noise with parameter-dependent mean c * gamma: the fused score is
    // c (y - c gamma) / sigma^2, and it must centralize to zero under the
    // model's own sampler.
    const double c = 2.0;
    const double sigma = 0.5;
    GeneralScore model(
        1,
        [c, sigma](double gamma, const State&, RngStream& rng, NoiseSample& out) {
            const double v = c * gamma + sigma * rng.normal();
            out.raw.assign(1, v);
            out.embedded.assign(1, v);
        },
        [c, sigma](double gamma, const State&, const NoiseSample& y) {
            return c * (y.raw[0] - c * gamma) / (sigma * sigma);
        });

    RngStream rng(13, 0);
    State z(1);
    NoiseSample y;
    StreamingMoments m;
    const double gamma = 0.3;
    TangentVector df(1, 1.0);
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        model.sample(gamma, z, rng, y);
        // score_term is minus the fused score.
        m.add(-model.score_term(gamma, z, df, y));
    }
    CHECK(std::abs(m.mean()) <= 3.0 * m.stddev() / std::sqrt(static_cast<double>(n)));

    std::vector<double> s;
    CHECK_THROWS_AS(model.score(y, s), std::logic_error);
    CHECK_THROWS_AS(score_contribution(model, df, y), std::logic_error);
}

TEST_CASE("samples shrink with the noise scale") {
    const IsotropicGaussian model(1e-12, 2);
    RngStream rng(14, 0);
    State z(2);
    NoiseSample y;
    for (int i = 0; i < 100; ++i) {
        model.sample(0.0, z, rng, y);
        for (double v : y.embedded) CHECK(std::abs(v) < 1e-10);
    }
}

TEST_CASE("dimension mismatches are hard errors") {
    const IsotropicGaussian model(0.5, 2);
    NoiseSample y;
    y.raw = {0.1, 0.2};
    y.embedded = y.raw;
    TangentVector df(3, 1.0);
    CHECK_THROWS_AS(score_contribution(model, df, y), std::invalid_argument);
}

TEST_SUITE_END();
