#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "demandcast/hpo.hpp"

using namespace demandcast;

namespace {

SearchSpace unit_interval() {
    SearchSpace space;
    space.dims.push_back({"x", 0.0, 1.0, false, false});
    return space;
}

/// Branin-style 2-D test function rescaled onto the unit square (three
/// global minima, value ~0.398 at the minima).
double branin(double u0, double u1) {
    const double x = 15.0 * u0 - 5.0;
    const double y = 15.0 * u1;
    const double a = 1.0, b = 5.1 / (4.0 * M_PI * M_PI), c = 5.0 / M_PI;
    const double r = 6.0, s = 10.0, t = 1.0 / (8.0 * M_PI);
    const double term = y - b * x * x + c * x - r;
    return a * term * term + s * (1.0 - t) * std::cos(x) + s;
}

constexpr double kBraninMin = 0.397887;

}  // namespace

TEST_CASE("budget equal to the initial design behaves as quasi-random search") {
    int calls = 0;
    auto result = bayes_optimize(
        unit_interval(), [&](const std::vector<double>& x) {
            ++calls;
            return (x[0] - 0.3) * (x[0] - 0.3);
        },
        5, 42);
    CHECK(calls == 5);
    CHECK(result.history.size() == 5);
    CHECK_THROWS_AS(bayes_optimize(unit_interval(), [](const std::vector<double>&) { return 0.0; },
                                   3, 42),
                    std::invalid_argument);
}

TEST_CASE("gp-ei localizes a 1-d quadratic minimum") {
    auto result = bayes_optimize(
        unit_interval(),
        [](const std::vector<double>& x) { return (x[0] - 0.3) * (x[0] - 0.3); }, 25, 7);
    CHECK(std::abs(result.best().point[0] - 0.3) < 0.05);
}

TEST_CASE("fixed seed reproduces the trial history exactly") {
    auto objective = [](const std::vector<double>& x) {
        return std::sin(5.0 * x[0]) + (x[0] - 0.6) * (x[0] - 0.6);
    };
    auto a = bayes_optimize(unit_interval(), objective, 15, 99);
    auto b = bayes_optimize(unit_interval(), objective, 15, 99);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        REQUIRE(a.history[i].point == b.history[i].point);
        REQUIRE(a.history[i].objective == b.history[i].objective);
    }
    CHECK(a.best_index == b.best_index);
}

TEST_CASE("every proposed configuration lies inside the bounds") {
    SearchSpace space;
    space.dims.push_back({"cell", 50, 100, true, false});
    space.dims.push_back({"lr", 1e-6, 1e-3, false, true});
    auto result = bayes_optimize(
        space,
        [](const std::vector<double>& x) { return x[0] / 100.0 + std::log10(x[1]); }, 20, 5);
    for (const auto& trial : result.history) {
        REQUIRE(trial.point[0] >= 50.0);
        REQUIRE(trial.point[0] <= 100.0);
        REQUIRE(trial.point[0] == std::round(trial.point[0]));  // integer dim
        REQUIRE(trial.point[1] >= 1e-6);
        REQUIRE(trial.point[1] <= 1e-3);
    }
}

TEST_CASE("best-so-far is monotone in the budget") {
    auto objective = [](const std::vector<double>& x) {
        return std::cos(7.0 * x[0]) * 0.4 + x[0] * 0.2;
    };
    auto result = bayes_optimize(unit_interval(), objective, 30, 12);
    double best = std::numeric_limits<double>::max();
    std::vector<double> running;
    for (const auto& trial : result.history) {
        best = std::min(best, trial.objective);
        running.push_back(best);
    }
    for (std::size_t i = 1; i < running.size(); ++i) REQUIRE(running[i] <= running[i - 1]);
    CHECK(result.best().objective == running.back());
}

TEST_CASE("surrogate interpolates observed points with vanishing variance") {
    std::vector<std::vector<double>> x{{0.1, 0.2}, {0.5, 0.8}, {0.9, 0.4}, {0.3, 0.6}};
    std::vector<double> y{1.0, -0.5, 0.7, 0.2};
    detail::GaussianProcess gp(x, y, {0.5, 0.5}, 1e-6);
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto [mean, variance] = gp.predict(x[i]);
        REQUIRE(std::abs(mean - y[i]) < 1e-3);
        REQUIRE(variance < 1e-6);
    }
}

TEST_CASE("failed trials are recorded and a fully failed run raises") {
    int calls = 0;
    auto result = bayes_optimize(
        unit_interval(),
        [&](const std::vector<double>& x) {
            ++calls;
            if (calls % 2 == 0) throw std::runtime_error("boom");
            return x[0];
        },
        8, 3);
    std::size_t failed = 0;
    for (const auto& t : result.history) failed += t.failed ? 1 : 0;
    CHECK(failed > 0);
    CHECK_FALSE(result.history[result.best_index].failed);

    try {
        bayes_optimize(unit_interval(),
                       [](const std::vector<double>&) -> double { throw std::runtime_error("x"); },
                       6, 3);
        FAIL("expected HpoError");
    } catch (const HpoError& e) {
        CHECK(e.history.size() == 6);
    }
}

TEST_CASE("gp-ei beats seeded random search on the branin surface") {
    const int budget = 25;
    double ei_total = 0.0, random_total = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SearchSpace space;
        space.dims.push_back({"u0", 0.0, 1.0, false, false});
        space.dims.push_back({"u1", 0.0, 1.0, false, false});
        auto result = bayes_optimize(
            space, [](const std::vector<double>& x) { return branin(x[0], x[1]); }, budget, seed);
        ei_total += result.best().objective - kBraninMin;

        std::mt19937_64 rng(derive_seed(seed, 0xabcdULL));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        double best_random = std::numeric_limits<double>::max();
        for (int i = 0; i < budget; ++i)
            best_random = std::min(best_random, branin(u01(rng), u01(rng)));
        random_total += best_random - kBraninMin;
    }
    INFO("mean regret gp-ei=" << ei_total / 20.0 << " random=" << random_total / 20.0);
    CHECK(ei_total / 20.0 <= random_total / 20.0);
}

TEST_CASE("lstm search space drops the learning rate for cocob") {
    auto with_lr = SearchSpace::lstm_grid(true);
    auto without_lr = SearchSpace::lstm_grid(false);
    CHECK(with_lr.size() == 6);
    CHECK(without_lr.size() == 5);
    CHECK(with_lr.index_of("learning_rate") >= 0);
    CHECK(without_lr.index_of("learning_rate") < 0);
    CHECK(with_lr.validate().empty());

    // Table-derived bounds spot checks.
    CHECK(with_lr.dims[0].min_value == 50);
    CHECK(with_lr.dims[0].max_value == 100);
    CHECK(with_lr.dims[1].max_value == 1500);
    CHECK(with_lr.dims[2].log_scale);
}

TEST_CASE("trial history exports as csv") {
    auto space = unit_interval();
    auto result = bayes_optimize(
        space, [](const std::vector<double>& x) { return x[0] * x[0]; }, 6, 2);
    auto path = std::filesystem::temp_directory_path() / "demandcast_trials.csv";
    write_trials_csv(space, result, path.string());
    std::ifstream in(path);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 7);  // header + 6 trials
}
