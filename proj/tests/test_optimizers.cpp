#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "demandcast/optimizers.hpp"

using namespace demandcast;

TEST_CASE("first adam step with unit gradient moves by about lr") {
    std::vector<double> params(8, 1.0);
    std::vector<double> grads(8, 1.0);
    AdamState adam(params.size());
    adam.step(params, grads, 0.01);
    for (double p : params) CHECK(p == Catch::Approx(0.99).margin(1e-6));
}

TEST_CASE("zero gradient leaves parameters untouched") {
    std::vector<double> params{0.5, -0.25, 3.0};
    std::vector<double> grads(3, 0.0);
    AdamState adam(3);
    adam.step(params, grads, 0.1);
    CHECK(params == std::vector<double>{0.5, -0.25, 3.0});

    CocobState cocob(params);
    for (int i = 0; i < 100; ++i) cocob.step(params, grads);
    CHECK(params == std::vector<double>{0.5, -0.25, 3.0});
}

TEST_CASE("adam update magnitude is bounded in early steps") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 3.0);
    std::vector<double> params(16, 0.0);
    AdamState adam(params.size());
    const double lr = 0.05;
    const double bound = lr / (1.0 - 0.9) + 1e-12;
    for (int step = 0; step < 20; ++step) {
        std::vector<double> grads(params.size());
        for (auto& g : grads) g = gauss(rng);
        auto before = params;
        adam.step(params, grads, lr);
        for (std::size_t i = 0; i < params.size(); ++i)
            REQUIRE(std::abs(params[i] - before[i]) <= bound);
    }
}

TEST_CASE("adam drives a quadratic bowl to near zero") {
    // f(w) = ||w||^2, grad = 2w, from w0 = 1.
    std::vector<double> w(100, 1.0);
    AdamState adam(w.size());
    for (int step = 0; step < 500; ++step) {
        std::vector<double> grads(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) grads[i] = 2.0 * w[i];
        adam.step(w, grads, 1e-2);
    }
    double f = 0.0;
    for (double v : w) f += v * v;
    CHECK(f < 1e-6);
}

TEST_CASE("cocob converges on a 1-d quadratic without a learning rate") {
    std::vector<double> w{0.0};
    CocobState cocob(w);
    for (int step = 0; step < 2000; ++step) {
        std::vector<double> grads{2.0 * (w[0] - 3.0)};
        cocob.step(w, grads);
    }
    CHECK(std::abs(w[0] - 3.0) < 0.1);
}

TEST_CASE("cocob trajectory mirrors under sign flip") {
    std::vector<double> w_pos{0.0}, w_neg{0.0};
    CocobState pos(w_pos), neg(w_neg);
    for (int step = 0; step < 500; ++step) {
        std::vector<double> g_pos{2.0 * (w_pos[0] - 3.0)};
        std::vector<double> g_neg{2.0 * (w_neg[0] + 3.0)};
        pos.step(w_pos, g_pos);
        neg.step(w_neg, g_neg);
        REQUIRE(w_neg[0] == Catch::Approx(-w_pos[0]).margin(1e-12));
    }
}

TEST_CASE("optimizer steps are deterministic functions of state and grads") {
    std::vector<double> a{1.0, 2.0}, b{1.0, 2.0};
    AdamState adam_a(2), adam_b(2);
    std::vector<double> grads{0.3, -0.7};
    adam_a.step(a, grads, 0.01);
    adam_b.step(b, grads, 0.01);
    REQUIRE(a == b);

    std::vector<double> c{1.0, 2.0}, d{1.0, 2.0};
    CocobState cocob_c(c), cocob_d(d);
    cocob_c.step(c, grads);
    cocob_d.step(d, grads);
    REQUIRE(c == d);
}

TEST_CASE("gradient clipping preserves direction and caps the norm") {
    std::vector<double> grads{3.0, 4.0};  // norm 5
    const double norm = clip_by_global_norm(grads, 1.0);
    CHECK(norm == Catch::Approx(5.0));
    CHECK(grads[0] == Catch::Approx(0.6));
    CHECK(grads[1] == Catch::Approx(0.8));

    std::vector<double> small{0.1, 0.1};
    clip_by_global_norm(small, 1.0);
    CHECK(small == std::vector<double>{0.1, 0.1});
}

TEST_CASE("cocob guards against division by zero via the scale floor") {
    std::vector<double> w{1.0};
    CocobState cocob(w, 100.0, 1e-8);
    std::vector<double> tiny{1e-300};
    cocob.step(w, tiny);  // must not produce NaN/inf
    REQUIRE(std::isfinite(w[0]));
}
