#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <fstream>
#include <sstream>

#include "kdr/models.hpp"
#include "kdr/stats.hpp"

using namespace kdr;

TEST_SUITE_BEGIN("models");

TEST_CASE("network base weights match the published matrix") {
    const auto& w = network_base_weights();
    const double first_row[9] = {-0.54, -1.19, -0.33, 1.66, -0.5, -1.3, 1.52, -0.5, 1.95};
    for (int j = 0; j < 9; ++j) {
        CHECK(w[static_cast<std::size_t>(j)] == first_row[j]);
    }
    CHECK(w[80] == -1.28);
}

TEST_CASE("base weights round-trip through the CSV resource bit-exactly") {
    const std::string csv = network_base_weights_csv();
    const auto parsed = parse_network_weights_csv(csv);
    const auto& w = network_base_weights();
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(parsed[i] == w[i]);
    }
}

TEST_CASE("shipped CSV resource matches the in-code matrix") {
    std::ifstream in(std::string(KDR_SOURCE_DIR) + "/data/network_weights.csv");
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto parsed = parse_network_weights_csv(buffer.str());
    const auto& w = network_base_weights();
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(parsed[i] == w[i]);
    }
}

TEST_CASE("tent derivative follows the branch structure") {
    Problem tent = build_tent(3.0, 0.1);
    TangentVector df(1);
    State x(std::vector<double>{0.3});
    tent.sys.map_derivatives[0](3.0, x, df);
    CHECK(df[0] == doctest::Approx(0.3).epsilon(1e-14));
    x.coords[0] = 0.8;
    tent.sys.map_derivatives[0](3.0, x, df);
    CHECK(df[0] == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("tent warns outside the usual slope range") {
    CHECK(build_tent(3.0, 0.1).warnings.empty());
    CHECK(!build_tent(4.5, 0.1).warnings.empty());
    CHECK_THROWS_AS(build_tent(3.0, 0.0), std::invalid_argument);
}

TEST_CASE("network map sends the origin to gamma * ones") {
    Problem net = build_network(NetworkParams{});
    State zero(static_cast<std::size_t>(network_dimension), 0.0);
    State out(static_cast<std::size_t>(network_dimension));
    net.sys.maps[0](0.25, zero, out);
    for (double v : out.coords) {
        CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
    }
}

TEST_CASE("chart init score evaluates the gaussian log-derivative") {
    Problem net = build_network(NetworkParams{});
    State ones(static_cast<std::size_t>(network_dimension), 1.0);
    // x0 . 1 - gamma M at gamma = 0, x0 = 1 is 9.
    CHECK(net.init.score_gamma(0.0, ones) == doctest::Approx(9.0).epsilon(1e-14));
    CHECK(net.init.score_gamma(0.5, ones) == doctest::Approx(9.0 - 4.5).epsilon(1e-14));
    // delta Phi is the constant -9.
    CHECK(net.observable.param_derivative(0.3, ones) == doctest::Approx(-9.0).epsilon(1e-14));
}

TEST_CASE("chart and original coordinates describe the same deterministic system") {
    NetworkParams chart_params;
    chart_params.noise_mode = NetworkNoiseMode::None;
    NetworkParams orig_params = chart_params;
    orig_params.form = NetworkForm::Original;
    Problem chart = build_network(chart_params);
    Problem orig = build_network(orig_params);

    const double gamma = 0.13;
    RngStream rng_seed(21, 0);
    State xp(static_cast<std::size_t>(network_dimension));
    for (double& v : xp.coords) v = rng_seed.normal();
    State xc = xp;
    for (double& v : xc.coords) v += gamma; // X = X' + gamma 1

    State tmp(static_cast<std::size_t>(network_dimension));
    for (int n = 0; n < network_layers; ++n) {
        orig.sys.maps[0](gamma, xp, tmp);
        std::swap(xp.coords, tmp.coords);
        chart.sys.maps[0](gamma, xc, tmp);
        std::swap(xc.coords, tmp.coords);
        for (int i = 0; i < network_dimension; ++i) {
            CHECK(xc[static_cast<std::size_t>(i)] ==
                  doctest::Approx(xp[static_cast<std::size_t>(i)] + gamma).epsilon(1e-10));
        }
    }
    CHECK(chart.observable.eval(gamma, xc) ==
          doctest::Approx(orig.observable.eval(gamma, xp)).epsilon(1e-9));
}

TEST_CASE("network jacobian product norms are reported") {
    // Diagnostic only: with J = 4 J0 the tanh inputs saturate and the
    // layer products contract, so path-to-path magnitudes vary wildly.
    StreamingMoments log_growth;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const double g = network_jacobian_growth(0.0, s);
        REQUIRE(std::isfinite(g));
        REQUIRE(g > 0.0);
        log_growth.add(std::log10(g));
    }
    MESSAGE("mean log10 |Df^50| over 20 paths: ", log_growth.mean());
}

TEST_CASE("ar1 stationary moments match the closed form") {
    // Mean gamma / (1 - a) = 2, variance sigma^2 / (1 - a^2).
    const double a = 0.5, gamma = 1.0, sigma = 0.3;
    Problem ar1 = build_ar1(a, gamma, sigma);
    RngStream rng(22, 0);
    State x(std::vector<double>{0.0});
    State z(1);
    NoiseSample y;
    StreamingMoments m;
    const std::int64_t spin = 1000, n = 1000000;
    for (std::int64_t t = 0; t < spin + n; ++t) {
        ar1.sys.maps[0](gamma, x, z);
        ar1.noise[0]->sample(gamma, z, rng, y);
        z.coords[0] += y.embedded[0];
        std::swap(x.coords, z.coords);
        if (t >= spin) m.add(x[0]);
    }
    CHECK(m.mean() == doctest::Approx(2.0).epsilon(0.01));
    const double var_expected = sigma * sigma / (1.0 - a * a);
    CHECK(m.variance() == doctest::Approx(var_expected).epsilon(0.01));
}

TEST_CASE("ar1 rejects non-contracting maps") {
    CHECK_THROWS_AS(build_ar1(1.0, 0.0, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(build_ar1(-1.2, 0.0, 0.3), std::invalid_argument);
}

TEST_SUITE_END();
