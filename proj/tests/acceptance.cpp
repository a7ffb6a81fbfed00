// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavier relative-ordering experiments run on fixed seeds
// and print their measured numbers for the record.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "demandcast/runner.hpp"

using namespace demandcast;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void report(int id, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] AC%-2d %-28s %s (%.1fs)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

// --- AC1: analytic BPTT vs central finite differences --------------------

double fd_loss(const LstmParams& params, const std::vector<std::vector<double>>& inputs,
               const std::vector<std::vector<double>>& targets, Scheme scheme, double l2) {
    auto cache = lstm_forward(params, inputs, LstmState::zero(params.dims().cell_dim));
    return sequence_loss(cache, targets, scheme, l2, params);
}

void ac1_gradient_correctness() {
    Timer timer;
    std::mt19937_64 rng(20240501);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    std::uniform_int_distribution<int> pd(1, 8), dd(1, 6), td(1, 6), md(1, 4);
    const double eps = 1e-5;
    double worst = 0.0;
    int configs = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const int p = pd(rng), d = dd(rng), t = td(rng), m = md(rng);
        LstmParams params(LstmDims{p, d, m});
        for (auto& w : params.flat()) w = u(rng);
        std::vector<std::vector<double>> inputs(static_cast<std::size_t>(t),
                                                std::vector<double>(static_cast<std::size_t>(d)));
        std::vector<std::vector<double>> targets(static_cast<std::size_t>(t),
                                                 std::vector<double>(static_cast<std::size_t>(m)));
        for (auto& row : inputs)
            for (auto& v : row) v = u(rng);
        for (auto& row : targets)
            for (auto& v : row) v = u(rng);
        const double l2 = rep % 2 == 0 ? 0.0 : 3e-4;
        for (Scheme scheme : {Scheme::LS1, Scheme::LS2}) {
            auto cache = lstm_forward(params, inputs, LstmState::zero(p));
            auto analytic = lstm_backward(params, cache, targets, scheme, l2);
            LstmParams perturbed = params;
            for (std::size_t i = 0; i < perturbed.size(); ++i) {
                const double saved = perturbed.flat()[i];
                perturbed.flat()[i] = saved + eps;
                const double up = fd_loss(perturbed, inputs, targets, scheme, l2);
                perturbed.flat()[i] = saved - eps;
                const double down = fd_loss(perturbed, inputs, targets, scheme, l2);
                perturbed.flat()[i] = saved;
                const double numeric = (up - down) / (2.0 * eps);
                worst = std::max(worst, std::abs(analytic[i] - numeric) /
                                            std::max(1e-3, std::abs(numeric)));
            }
        }
        ++configs;
    }
    const double secs = timer.seconds();
    std::ostringstream detail;
    detail << "max rel err " << worst << " over " << configs << " configs, both schemes";
    report(1, "gradient correctness", worst < 1e-4 && secs < 60.0, detail.str(), secs);
}

// --- AC2: transform round-trip --------------------------------------------

void ac2_transform_round_trip() {
    Timer timer;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    std::uniform_int_distribution<int> nd(2, 20), md(1, 12);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = nd(rng), m = md(rng);
        std::uniform_int_distribution<int> kd(n + m + 1, n + m + 60);
        const int k = kd(rng);
        SalesSeries s;
        s.item_id = "x";
        s.start_day = 17532;
        s.values.resize(static_cast<std::size_t>(k));
        s.missing.assign(static_cast<std::size_t>(k), false);
        for (auto& v : s.values) v = u(rng);
        auto scaled = mean_scale(s);
        TrainingSet ts;
        FeatureLayout layout;
        if (!make_windows(scaled, ItemMeta{}, Calendar{}, n, m, layout, ts)) continue;
        const auto& pair = ts.validation_pairs.front();
        auto restored =
            postprocess_forecast(pair.targets, pair.local_mean, scaled.scale_factor, false);
        for (int j = 0; j < m; ++j) {
            const double truth = s.values[static_cast<std::size_t>(pair.origin_index + n + j)];
            const double err = std::abs(restored[static_cast<std::size_t>(j)] - truth) /
                               std::max(1.0, std::abs(truth));
            worst = std::max(worst, err);
        }
    }
    std::ostringstream detail;
    detail << "max rel err " << worst << " on 1000 random series";
    report(2, "transform round-trip", worst < 1e-12, detail.str(), timer.seconds());
}

// --- AC3: metric oracle ----------------------------------------------------

void ac3_metric_oracle() {
    Timer timer;
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> u(-80.0, 80.0);
    std::uniform_real_distribution<double> p01(0.0, 1.0);
    std::uniform_int_distribution<int> len(1, 40);
    double worst = 0.0;
    for (int rep = 0; rep < 10000; ++rep) {
        const auto m = static_cast<std::size_t>(len(rng));
        std::vector<double> f(m), a(m);
        const bool zero_actuals = p01(rng) < 0.1;
        for (std::size_t i = 0; i < m; ++i) {
            f[i] = u(rng);
            a[i] = zero_actuals ? 0.0 : u(rng);
        }
        double brute = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            brute += std::fabs(f[i] - a[i]) / (1.0 + std::fabs(a[i]));
        brute /= static_cast<double>(m);
        worst = std::max(worst, std::abs(mmape(f, a) - brute) / std::max(1.0, brute));
    }
    std::ostringstream detail;
    detail << "max rel diff " << worst << " on 10000 pairs";
    report(3, "metric oracle", worst < 1e-12, detail.str(), timer.seconds());
}

// --- AC4: window-count law -------------------------------------------------

void ac4_window_count_law() {
    Timer timer;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 30.0);
    bool ok = true;
    long checked = 0;
    for (int n : {2, 5, 13}) {
        for (int m : {1, 4, 10}) {
            for (int k = n + m + 1; k <= 200; ++k) {
                SalesSeries s;
                s.item_id = "x";
                s.start_day = 0;
                s.values.resize(static_cast<std::size_t>(k));
                s.missing.assign(static_cast<std::size_t>(k), false);
                for (auto& v : s.values) v = u(rng);
                TrainingSet ts;
                FeatureLayout layout;
                make_windows(mean_scale(s), ItemMeta{}, Calendar{}, n, m, layout, ts);
                ok = ok && ts.train_pairs.size() == static_cast<std::size_t>(k - n - m) &&
                     ts.validation_pairs.size() == 1;
                ++checked;
            }
        }
    }
    std::ostringstream detail;
    detail << checked << " (K,n,m) combinations";
    report(4, "window-count law", ok, detail.str(), timer.seconds());
}

// --- AC5: global-learning benefit ------------------------------------------

PipelineConfig relative_benefit_config(std::uint64_t seed) {
    PipelineConfig cfg;
    SyntheticSpec spec;
    spec.n_items = 200;
    spec.n_days = 190;
    spec.n_subcategories = 4;
    spec.weekly_seasonality_amplitude = 0.6;
    spec.shared_pattern_strength = 0.8;
    spec.zero_inflation_probability = 0.2;
    spec.noise_std = 0.15;
    spec.base_level_min = 2.0;
    spec.base_level_max = 200.0;
    spec.rng_seed = seed;
    cfg.synthetic = spec;
    cfg.horizon = 10;
    cfg.train.cell_dim = 50;
    cfg.train.minibatch_size = 60;
    cfg.train.learning_rate = 1e-3;
    cfg.train.max_epochs = 12;
    cfg.train.scheme = Scheme::LS1;
    cfg.train.optimizer = OptimizerKind::adam;
    cfg.seed = seed;
    return cfg;
}

void ac5_global_learning_benefit() {
    Timer timer;
    int beat_naive = 0, beat_snaive = 0;
    double max_seed_seconds = 0.0;
    std::ostringstream detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Timer seed_timer;
        auto cfg = relative_benefit_config(seed);
        auto full = load_or_generate(cfg);
        auto prep = prepare_data(full, cfg);
        const double lstm = run_variant(prep, cfg, Variant::all).metrics.overall.mean_mmape;
        const double naive = run_benchmark(prep, cfg, "naive").metrics.overall.mean_mmape;
        const double snaive = run_benchmark(prep, cfg, "snaive").metrics.overall.mean_mmape;
        if (lstm < naive) ++beat_naive;
        if (lstm < snaive) ++beat_snaive;
        max_seed_seconds = std::max(max_seed_seconds, seed_timer.seconds());
        detail << (seed > 1 ? " " : "") << "s" << seed << ":" << std::fixed
               << std::setprecision(3) << lstm << (lstm < naive ? "<" : ">=") << naive;
    }
    detail << " | naive " << beat_naive << "/5, snaive " << beat_snaive << "/5";
    report(5, "global-learning benefit",
           beat_naive == 5 && beat_snaive >= 4 && max_seed_seconds < 600.0, detail.str(),
           timer.seconds());
}

// --- AC6: grouping benefit ---------------------------------------------------

/// Two deliberately heterogeneous regimes: steady, dense, high-volume items
/// against sparse, noisy, low-volume items with an unrelated weekly pattern.
SeriesSet two_regime_set(std::uint64_t seed) {
    SyntheticSpec head;
    head.n_items = 100;
    head.n_days = 190;
    head.n_subcategories = 2;
    head.weekly_seasonality_amplitude = 0.6;
    head.shared_pattern_strength = 0.9;
    head.zero_inflation_probability = 0.0;
    head.noise_std = 0.1;
    head.base_level_min = 20.0;
    head.base_level_max = 200.0;
    head.rng_seed = derive_seed(seed, 1);

    SyntheticSpec tail = head;
    tail.zero_inflation_probability = 0.5;
    tail.noise_std = 0.3;
    tail.base_level_min = 0.5;
    tail.base_level_max = 5.0;
    tail.rng_seed = derive_seed(seed, 2);

    auto set_a = generate_synthetic(head);
    auto set_b = generate_synthetic(tail);
    SeriesSet merged;
    merged.calendar = set_a.calendar;
    for (std::size_t i = 0; i < set_a.size(); ++i) {
        auto s = set_a.series[i];
        auto m = set_a.meta[i];
        s.item_id = "A." + s.item_id;
        m.item_id = s.item_id;
        merged.series.push_back(std::move(s));
        merged.meta.push_back(std::move(m));
    }
    for (std::size_t i = 0; i < set_b.size(); ++i) {
        auto s = set_b.series[i];
        auto m = set_b.meta[i];
        s.item_id = "B." + s.item_id;
        m.item_id = s.item_id;
        m.subcategory_id = "SC1" + m.subcategory_id.substr(3);  // SC00 -> SC10
        m.category_id = "CAT1" + m.category_id.substr(4);
        merged.series.push_back(std::move(s));
        merged.meta.push_back(std::move(m));
    }
    return merged;
}

void ac6_grouping_benefit() {
    Timer timer;
    int group_wins = 0;
    std::ostringstream detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto cfg = relative_benefit_config(seed);
        cfg.synthetic.reset();
        cfg.sales_csv.clear();
        auto full = two_regime_set(seed);
        PipelineConfig prep_cfg = cfg;
        prep_cfg.synthetic.reset();
        auto prep = prepare_data(full, prep_cfg);
        const double all = run_variant(prep, cfg, Variant::all).metrics.overall.mean_mmape;
        const double group = run_variant(prep, cfg, Variant::group).metrics.overall.mean_mmape;
        if (group <= all) ++group_wins;
        detail << (seed > 1 ? " " : "") << "s" << seed << ":" << std::fixed
               << std::setprecision(3) << group << (group <= all ? "<=" : ">") << all;
    }
    detail << " | group wins " << group_wins << "/5";
    report(6, "grouping benefit", group_wins >= 4, detail.str(), timer.seconds());
}

// --- AC7: optimizer contracts ------------------------------------------------

void ac7_optimizer_contracts() {
    Timer timer;
    std::vector<double> w(100, 1.0);
    AdamState adam(w.size());
    double f_quadratic = 0.0;
    for (int step = 0; step < 500; ++step) {
        std::vector<double> grads(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) grads[i] = 2.0 * w[i];
        adam.step(w, grads, 1e-2);
    }
    for (double v : w) f_quadratic += v * v;

    std::vector<double> cw{0.0};
    CocobState cocob(cw);
    for (int step = 0; step < 2000; ++step) {
        std::vector<double> grads{2.0 * (cw[0] - 3.0)};
        cocob.step(cw, grads);
    }
    const double cocob_err = std::abs(cw[0] - 3.0);
    std::ostringstream detail;
    detail << "adam f=" << f_quadratic << " after 500 steps; cocob |w-w*|=" << cocob_err;
    report(7, "optimizer contracts", f_quadratic < 1e-6 && cocob_err < 0.1, detail.str(),
           timer.seconds());
}

// --- AC8: HPO sanity ---------------------------------------------------------

double branin(double u0, double u1) {
    const double x = 15.0 * u0 - 5.0;
    const double y = 15.0 * u1;
    const double b = 5.1 / (4.0 * M_PI * M_PI), c = 5.0 / M_PI;
    const double term = y - b * x * x + c * x - 6.0;
    return term * term + 10.0 * (1.0 - 1.0 / (8.0 * M_PI)) * std::cos(x) + 10.0;
}

void ac8_hpo_sanity() {
    Timer timer;
    const double optimum = 0.397887;
    const int budget = 25;
    double ei_regret = 0.0, random_regret = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SearchSpace space;
        space.dims.push_back({"u0", 0.0, 1.0, false, false});
        space.dims.push_back({"u1", 0.0, 1.0, false, false});
        auto result = bayes_optimize(
            space, [](const std::vector<double>& x) { return branin(x[0], x[1]); }, budget, seed);
        ei_regret += result.best().objective - optimum;

        std::mt19937_64 rng(derive_seed(seed, 0xabcdULL));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        double best = std::numeric_limits<double>::max();
        for (int i = 0; i < budget; ++i) best = std::min(best, branin(u01(rng), u01(rng)));
        random_regret += best - optimum;
    }
    std::ostringstream detail;
    detail << "mean regret gp-ei " << ei_regret / 20.0 << " vs random " << random_regret / 20.0;
    report(8, "hpo regret vs random", ei_regret <= random_regret, detail.str(), timer.seconds());
}

// --- AC9: clustering ----------------------------------------------------------

void ac9_clustering() {
    Timer timer;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 0.5);
    std::vector<std::vector<double>> data;
    std::vector<int> truth;
    for (int i = 0; i < 60; ++i) {
        const bool second = i % 2 == 1;
        data.push_back({(second ? 8.0 : 0.0) + gauss(rng), (second ? -4.0 : 4.0) + gauss(rng)});
        truth.push_back(second ? 1 : 0);
    }
    auto sel = select_k_by_silhouette(data, 2, 5, 123);
    int agree = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        agree += sel.result.labels[i] == truth[i] ? 1 : 0;
    const int purity = std::max(agree, static_cast<int>(truth.size()) - agree);
    std::ostringstream detail;
    detail << "k=" << sel.k << ", silhouette " << sel.silhouette << ", purity " << purity << "/"
           << truth.size();
    report(9, "silhouette clustering",
           sel.k == 2 && sel.silhouette > 0.8 && purity == static_cast<int>(truth.size()),
           detail.str(), timer.seconds());
}

// --- AC10: determinism ----------------------------------------------------------

std::string file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ac10_determinism() {
    Timer timer;
    PipelineConfig cfg;
    SyntheticSpec spec;
    spec.n_items = 40;
    spec.n_days = 90;
    spec.rng_seed = 9;
    spec.zero_inflation_probability = 0.15;
    cfg.synthetic = spec;
    cfg.horizon = 10;
    cfg.train.max_epochs = 5;
    cfg.seed = 123;
    const auto dir_a = fs::temp_directory_path() / "demandcast_ac10_a";
    const auto dir_b = fs::temp_directory_path() / "demandcast_ac10_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    cfg.output_dir = dir_a.string();
    run_end_to_end(cfg);
    cfg.output_dir = dir_b.string();
    run_end_to_end(cfg);
    const bool identical =
        file_bytes(dir_a / "forecasts.csv") == file_bytes(dir_b / "forecasts.csv");
    report(10, "run determinism", identical, "two executions, byte-compared forecasts.csv",
           timer.seconds());
}

// --- AC11: end-to-end smoke -----------------------------------------------------

void ac11_end_to_end_smoke() {
    Timer timer;
    const fs::path bundled = fs::path(DEMANDCAST_SOURCE_DIR) / "configs" / "synthetic_smoke.json";
    auto cfg = load_config_file(bundled.string());
    const auto out_dir = fs::temp_directory_path() / "demandcast_ac11";
    fs::remove_all(out_dir);
    cfg.output_dir = out_dir.string();
    auto summary = run_end_to_end(cfg);

    // Table-4-shaped: every model reports All plus the G1/G2/G3 columns.
    bool shape_ok = summary.reports.size() ==
                    cfg.variants.size() + cfg.benchmarks.size();
    int models_with_groups = 0;
    for (const auto& r : summary.reports) {
        const bool has_groups = r.by_group.count("G1") && r.by_group.count("G2") &&
                                r.by_group.count("G3");
        models_with_groups += has_groups ? 1 : 0;
        shape_ok = shape_ok && r.overall.count > 0;
    }
    shape_ok = shape_ok && models_with_groups == static_cast<int>(summary.reports.size());
    const bool artifacts_ok = fs::exists(out_dir / "forecasts.csv") &&
                              fs::exists(out_dir / "metrics.csv") &&
                              fs::exists(out_dir / "report.txt") &&
                              fs::exists(out_dir / "manifest.json");
    const double secs = timer.seconds();
    std::ostringstream detail;
    detail << summary.reports.size() << " models (4 variants + " << cfg.benchmarks.size()
           << " benchmarks), G1/G2/G3 rows present";
    report(11, "end-to-end smoke", shape_ok && artifacts_ok && secs < 1800.0, detail.str(), secs);
}

}  // namespace

int main() {
    ac1_gradient_correctness();
    ac2_transform_round_trip();
    ac3_metric_oracle();
    ac4_window_count_law();
    ac5_global_learning_benefit();
    ac6_grouping_benefit();
    ac7_optimizer_contracts();
    ac8_hpo_sanity();
    ac9_clustering();
    ac10_determinism();
    ac11_end_to_end_smoke();
    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 11 acceptance criteria passed\n");
    return 0;
}
