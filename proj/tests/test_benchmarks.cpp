#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "demandcast/benchmarks.hpp"

using namespace demandcast;

TEST_CASE("naive repeats the last observation") {
    CHECK(forecast_naive({1, 2, 3}, 2) == std::vector<double>{3, 3});
    CHECK(forecast_naive({5, 5, 5}, 3) == std::vector<double>{5, 5, 5});
    CHECK(forecast_naive({0}, 3) == std::vector<double>{0, 0, 0});
    CHECK_THROWS_AS(forecast_naive({}, 1), std::invalid_argument);
}

TEST_CASE("seasonal naive continues the last period") {
    std::vector<double> x;
    for (int t = 1; t <= 14; ++t) x.push_back(t);
    CHECK(forecast_snaive(x, 7) == std::vector<double>{8, 9, 10, 11, 12, 13, 14});

    // A perfectly 7-periodic series continues exactly.
    std::vector<double> periodic;
    for (int t = 0; t < 35; ++t) periodic.push_back(std::sin(2.0 * M_PI * t / 7.0));
    auto f = forecast_snaive(periodic, 10);
    for (int t = 0; t < 10; ++t)
        REQUIRE(f[static_cast<std::size_t>(t)] ==
                Catch::Approx(std::sin(2.0 * M_PI * (35 + t) / 7.0)).margin(1e-12));

    CHECK_THROWS_AS(forecast_snaive({1, 2, 3}, 2, 7), std::invalid_argument);
}

TEST_CASE("snaive with period one reduces to naive on every input") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    std::uniform_int_distribution<int> len(1, 40);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> x(static_cast<std::size_t>(len(rng)));
        for (auto& v : x) v = u(rng);
        REQUIRE(forecast_snaive(x, 5, 1) == forecast_naive(x, 5));
    }
}

TEST_CASE("ewma level matches the recursive hand computation") {
    // l0=1, l1=0.99*2+0.01*1=1.99, l2=0.99*3+0.01*1.99=2.9899.
    auto f = forecast_ewma({1, 2, 3}, 2, 0.99);
    CHECK(f[0] == Catch::Approx(2.9899).margin(1e-10));
    CHECK(f[1] == f[0]);

    // A constant series is a fixed point under any alpha.
    for (double alpha : {0.05, 0.3, 0.9}) {
        auto c = forecast_ewma({4, 4, 4, 4}, 3, alpha);
        for (double v : c) REQUIRE(v == Catch::Approx(4.0).margin(1e-12));
    }
}

TEST_CASE("ewma grid fit picks a high alpha on a noiseless trend") {
    std::vector<double> trend(60);
    for (std::size_t t = 0; t < trend.size(); ++t) trend[t] = 2.0 * static_cast<double>(t);
    const double alpha = detail::grid_fit_alpha(trend, 10);
    CHECK(alpha >= 0.9);
}

TEST_CASE("grid-fitted alpha beats every other grid point in-sample") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(80, 0.0);
    double level = 10.0;
    for (auto& v : x) {
        level += 0.3 * gauss(rng);
        v = level + gauss(rng);
    }
    const int window = 10;
    const double fitted = detail::grid_fit_alpha(x, window);
    double fitted_sse = 0.0;
    detail::ewma_level(x, fitted, window, &fitted_sse);
    for (int step = 1; step <= 99; ++step) {
        double sse = 0.0;
        detail::ewma_level(x, 0.01 * step, window, &sse);
        REQUIRE(fitted_sse <= sse + 1e-12);
    }
}

TEST_CASE("holt continues a noiseless linear trend") {
    std::vector<double> line(50);
    for (std::size_t t = 0; t < line.size(); ++t) line[t] = 3.0 + 0.5 * static_cast<double>(t);
    auto f = forecast_ets(line, 5, false);
    for (int h = 1; h <= 5; ++h)
        REQUIRE(f[static_cast<std::size_t>(h - 1)] ==
                Catch::Approx(3.0 + 0.5 * (49.0 + h)).margin(1e-6));
}

TEST_CASE("holt-winters continues a noiseless weekly pattern") {
    std::vector<double> periodic(70);
    for (std::size_t t = 0; t < periodic.size(); ++t)
        periodic[t] = 10.0 + 3.0 * std::sin(2.0 * M_PI * static_cast<double>(t) / 7.0);
    auto f = forecast_ets(periodic, 10, true);
    for (int h = 1; h <= 10; ++h)
        REQUIRE(f[static_cast<std::size_t>(h - 1)] ==
                Catch::Approx(10.0 + 3.0 * std::sin(2.0 * M_PI * (69.0 + h) / 7.0)).margin(1e-6));
}

TEST_CASE("ets degenerate cases") {
    auto f = forecast_ets(std::vector<double>(30, 6.0), 4, false);
    for (double v : f) REQUIRE(v == Catch::Approx(6.0).margin(1e-9));

    // Too short for the seasonal fit: falls back to ses with a warning.
    std::string warning;
    f = forecast_ets({1, 2, 3, 4, 5}, 3, true, 7, &warning);
    CHECK_FALSE(warning.empty());
    REQUIRE(f.size() == 3);
}

TEST_CASE("ar recovers the coefficient of a simulated AR(1)") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> x(500);
        double prev = 0.0;
        for (auto& v : x) {
            prev = 0.8 * prev + gauss(rng);
            v = prev;
        }
        auto fit = fit_ar(x, 7);
        REQUIRE_FALSE(fit.phi.empty());
        REQUIRE(fit.phi[0] >= 0.72);
        REQUIRE(fit.phi[0] <= 0.88);
    }
}

TEST_CASE("ar on white noise forecasts near the series mean") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(5.0, 1.0);
        std::vector<double> x(400);
        double mean = 0.0, var = 0.0;
        for (auto& v : x) {
            v = gauss(rng);
            mean += v;
        }
        mean /= static_cast<double>(x.size());
        for (double v : x) var += (v - mean) * (v - mean);
        var /= static_cast<double>(x.size() - 1);

        auto fit = fit_ar(x, 7);
        // Forecast deviation stems from the estimation noise of p fitted
        // coefficients, each with standard error ~ 1/sqrt(n); iterated
        // multi-step prediction compounds it a little beyond 3 sigma.
        const double stderr_bound =
            std::sqrt(var) * std::sqrt(static_cast<double>(std::max(1, fit.order)) /
                                       static_cast<double>(x.size()));
        auto f = forecast_ar(x, 5);
        for (double v : f) REQUIRE(std::abs(v - mean) <= 4.0 * stderr_bound);
    }
}

TEST_CASE("ar on a constant series forecasts the constant") {
    auto f = forecast_ar(std::vector<double>(40, 9.0), 5);
    for (double v : f) REQUIRE(v == Catch::Approx(9.0).margin(1e-9));
}

TEST_CASE("all benchmark forecasts are finite and sized to the horizon") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 30.0);
    std::vector<double> x(90);
    for (auto& v : x) v = std::round(u(rng));
    const int horizon = 10;
    for (auto f : {forecast_naive(x, horizon), forecast_snaive(x, horizon),
                   forecast_ewma(x, horizon), forecast_ses(x, horizon),
                   forecast_ets(x, horizon, false), forecast_ets(x, horizon, true),
                   forecast_ar(x, horizon)}) {
        REQUIRE(f.size() == static_cast<std::size_t>(horizon));
        for (double v : f) REQUIRE(std::isfinite(v));
    }
}
