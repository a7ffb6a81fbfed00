#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "demandcast/dataset.hpp"

using namespace demandcast;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "demandcast_test_dataset";
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const auto n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double num = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va <= 0 || vb <= 0) return 0.0;
    return num / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("load_csv parses complete data onto the common grid") {
    auto dir = temp_dir();
    std::string rows = "item_id,date,sales\n";
    for (int i = 0; i < 2; ++i)
        for (int t = 0; t < 20; ++t)
            rows += "I" + std::to_string(i) + "," + format_date(17532 + t) + "," +
                    std::to_string(t + i) + "\n";
    write_file(dir / "sales.csv", rows);

    auto set = load_csv((dir / "sales.csv").string());
    REQUIRE(set.size() == 2);
    CHECK(set.days() == 20);
    CHECK(set.start_day() == 17532);
    CHECK(validate_set(set).empty());
    CHECK(set.series[0].values[3] == 3.0);
    CHECK(set.series[1].values[3] == 4.0);
}

TEST_CASE("load_csv masks holes in an item's date coverage") {
    auto dir = temp_dir();
    write_file(dir / "gappy.csv",
               "item_id,date,sales\n"
               "A,2018-01-01,5\n"
               "A,2018-01-03,7\n"
               "B,2018-01-01,1\n"
               "B,2018-01-02,2\n"
               "B,2018-01-03,3\n");
    auto set = load_csv((dir / "gappy.csv").string());
    REQUIRE(set.size() == 2);
    const auto& a = set.series[set.index_of("A") >= 0 ? static_cast<std::size_t>(set.index_of("A")) : 0];
    REQUIRE(a.length() == 3);
    CHECK_FALSE(a.missing[0]);
    CHECK(a.missing[1]);
    CHECK_FALSE(a.missing[2]);
}

TEST_CASE("load_csv rejects malformed and duplicate rows") {
    auto dir = temp_dir();
    write_file(dir / "bad_number.csv", "item_id,date,sales\nA,2018-01-01,abc\n");
    CHECK_THROWS_WITH(load_csv((dir / "bad_number.csv").string()),
                      Catch::Matchers::ContainsSubstring("line 2"));

    write_file(dir / "bad_date.csv", "A,2018-99-01,3\n");
    CHECK_THROWS_WITH(load_csv((dir / "bad_date.csv").string()),
                      Catch::Matchers::ContainsSubstring("line 1"));

    write_file(dir / "dup.csv",
               "item_id,date,sales\nA,2018-01-01,3\nA,2018-01-01,4\n");
    CHECK_THROWS_WITH(load_csv((dir / "dup.csv").string()),
                      Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("csv round-trip is exact for finite values") {
    SyntheticSpec spec;
    spec.n_items = 8;
    spec.n_days = 40;
    spec.rng_seed = 11;
    spec.zero_inflation_probability = 0.2;
    auto set = generate_synthetic(spec);
    // Perturb a value to a non-integer to exercise shortest-round-trip formatting.
    set.series[0].values[5] = 3.14159265358979;

    auto dir = temp_dir();
    write_sales_csv(set, (dir / "rt_sales.csv").string());
    write_meta_csv(set, (dir / "rt_meta.csv").string());
    write_calendar_csv(set, (dir / "rt_cal.csv").string());
    auto reloaded = load_csv((dir / "rt_sales.csv").string(), (dir / "rt_cal.csv").string(),
                             (dir / "rt_meta.csv").string());

    REQUIRE(reloaded.size() == set.size());
    REQUIRE(reloaded.days() == set.days());
    for (std::size_t i = 0; i < set.size(); ++i) {
        CHECK(reloaded.series[i].item_id == set.series[i].item_id);
        CHECK(reloaded.meta[i].subcategory_id == set.meta[i].subcategory_id);
        for (std::size_t t = 0; t < set.days(); ++t) {
            REQUIRE(reloaded.series[i].missing[t] == set.series[i].missing[t]);
            if (!set.series[i].missing[t])
                REQUIRE(reloaded.series[i].values[t] == set.series[i].values[t]);
        }
    }
}

TEST_CASE("synthetic generation is deterministic in the seed") {
    SyntheticSpec spec;
    spec.n_items = 12;
    spec.n_days = 60;
    spec.rng_seed = 7;
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        REQUIRE(a.series[i].values == b.series[i].values);

    spec.rng_seed = 8;
    auto c = generate_synthetic(spec);
    bool any_different = false;
    for (std::size_t i = 0; i < a.size() && !any_different; ++i)
        any_different = a.series[i].values != c.series[i].values;
    CHECK(any_different);
}

TEST_CASE("noiseless zero-inflation-free output is exactly 7-periodic and positive") {
    SyntheticSpec spec;
    spec.n_items = 10;
    spec.n_days = 70;
    spec.noise_std = 0.0;
    spec.zero_inflation_probability = 0.0;
    spec.weekly_seasonality_amplitude = 0.3;
    spec.base_level_min = 50.0;  // keep rounding clear of zero
    spec.base_level_max = 5000.0;
    spec.rng_seed = 3;
    auto set = generate_synthetic(spec);
    for (const auto& s : set.series) {
        for (std::size_t t = 0; t + 7 < s.length(); ++t)
            REQUIRE(s.values[t] == s.values[t + 7]);
        for (double v : s.values) REQUIRE(v > 0.0);
    }
}

TEST_CASE("shared_pattern_strength controls within-subcategory correlation") {
    SyntheticSpec spec;
    spec.n_items = 40;
    spec.n_days = 140;
    spec.n_subcategories = 2;
    spec.noise_std = 0.0;
    spec.zero_inflation_probability = 0.0;
    spec.weekly_seasonality_amplitude = 0.4;
    spec.base_level_min = 50.0;  // quantization must not mask the patterns
    spec.base_level_max = 5000.0;
    spec.rng_seed = 5;

    auto mean_correlation = [&](double strength) {
        spec.shared_pattern_strength = strength;
        auto set = generate_synthetic(spec);
        double total = 0.0;
        int pairs = 0;
        for (std::size_t i = 0; i < set.size(); ++i)
            for (std::size_t j = i + 1; j < set.size(); ++j) {
                if (set.meta[i].subcategory_id != set.meta[j].subcategory_id) continue;
                total += pearson(set.series[i].values, set.series[j].values);
                ++pairs;
            }
        REQUIRE(pairs > 0);
        return total / pairs;
    };

    CHECK(std::abs(mean_correlation(0.0)) < 0.15);
    CHECK(mean_correlation(1.0) > 0.9);
}

TEST_CASE("full shared strength gives identical shapes up to scale") {
    SyntheticSpec spec;
    spec.n_items = 12;
    spec.n_days = 84;
    spec.n_subcategories = 3;
    spec.noise_std = 0.0;
    spec.zero_inflation_probability = 0.0;
    spec.shared_pattern_strength = 1.0;
    spec.weekly_seasonality_amplitude = 0.5;
    spec.base_level_min = 50.0;
    spec.base_level_max = 5000.0;
    spec.rng_seed = 17;
    auto set = generate_synthetic(spec);
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t j = i + 1; j < set.size(); ++j) {
            if (set.meta[i].subcategory_id != set.meta[j].subcategory_id) continue;
            // Rounding to integer sales breaks exact proportionality, so test
            // shape agreement through correlation.
            CHECK(pearson(set.series[i].values, set.series[j].values) > 0.98);
        }
}

TEST_CASE("synthetic spec validation") {
    SyntheticSpec spec;
    spec.zero_inflation_probability = 1.5;
    CHECK_FALSE(validate_spec(spec).empty());
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
}
