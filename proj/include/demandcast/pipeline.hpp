#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "demandcast/benchmarks.hpp"
#include "demandcast/dataset.hpp"
#include "demandcast/hpo.hpp"
#include "demandcast/metrics.hpp"
#include "demandcast/preprocess.hpp"
#include "demandcast/training.hpp"
#include "demandcast/windowing.hpp"

namespace demandcast {

enum class Variant { all, group, feature, cluster };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::all: return "lstm.all";
        case Variant::group: return "lstm.group";
        case Variant::feature: return "lstm.feature";
        case Variant::cluster: return "lstm.cluster";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& name) {
    if (name == "all" || name == "lstm.all") return Variant::all;
    if (name == "group" || name == "lstm.group") return Variant::group;
    if (name == "feature" || name == "lstm.feature") return Variant::feature;
    if (name == "cluster" || name == "lstm.cluster") return Variant::cluster;
    throw std::invalid_argument("unknown variant: " + name);
}

struct PipelineConfig {
    // Exactly one data source: flat files or the synthetic generator.
    std::string sales_csv, meta_csv, calendar_csv;
    std::optional<SyntheticSpec> synthetic;

    int horizon = 10;       // forecast horizon M (= output window m)
    int input_window = 0;   // 0 -> default_input_window(horizon)
    double gamma = 10.0;    // fake-zero threshold
    bool repair_zeros = true;

    std::vector<Variant> variants{Variant::all};
    TrainConfig train;
    bool use_hpo = false;
    int hpo_budget = 30;
    ClusterOptions cluster;

    /// naive, snaive, ewma, ets_nonseasonal, ets_seasonal, ar
    std::vector<std::string> benchmarks{"naive",           "snaive",       "ewma",
                                        "ets_nonseasonal", "ets_seasonal", "ar"};

    std::string output_dir = "out";
    std::uint64_t seed = 1;
    bool clamp_outputs = true;
    bool round_outputs = false;
};

inline std::vector<std::string> validate_config(const PipelineConfig& cfg) {
    std::vector<std::string> violations;
    const bool has_files = !cfg.sales_csv.empty();
    if (has_files == cfg.synthetic.has_value())
        violations.push_back("exactly one data source required (sales_csv or synthetic)");
    if (cfg.horizon < 1) violations.push_back("horizon must be >= 1");
    if (cfg.input_window < 0) violations.push_back("input_window must be >= 0 (0 = default)");
    if (cfg.gamma <= 0.0) violations.push_back("gamma must be > 0");
    if (cfg.use_hpo && cfg.hpo_budget < 5) violations.push_back("hpo_budget must be >= 5");
    for (auto v : cfg.variants)
        if (v == Variant::cluster && cfg.cluster.k_min < 2)
            violations.push_back("cluster variant needs a k range starting at 2");
    if (cfg.synthetic) {
        for (auto& msg : validate_spec(*cfg.synthetic)) violations.push_back("synthetic: " + msg);
        if (cfg.horizon >= 1) {
            const int n =
                cfg.input_window > 0 ? cfg.input_window : default_input_window(cfg.horizon);
            if (cfg.synthetic->n_days <= n + 2 * cfg.horizon)
                violations.push_back("synthetic n_days must exceed input_window + 2*horizon");
        }
    }
    return violations;
}

inline int env_worker_count() {
    if (const char* env = std::getenv("DEMANDCAST_WORKERS")) {
        const int value = std::atoi(env);
        if (value >= 1) return value;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

/// Chunked parallel map over [0, n); each index writes only its own slot,
/// so the result is identical for any worker count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int workers = std::min<int>(env_worker_count(), static_cast<int>(n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = static_cast<std::size_t>(w); i < n;
                 i += static_cast<std::size_t>(workers))
                fn(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Data preparation: holdout split + cleaning
// ---------------------------------------------------------------------------

/// Train region (first K-M days, repaired and forward-filled), raw test
/// actuals (last M days, forward-filled from history only), and the shared
/// grouping/business annotations computed on the train region.
struct PreparedData {
    SeriesSet train;                               // cleaned, length K-M
    std::map<std::string, std::vector<double>> test_actuals;  // item -> last M sales
    GroupAssignment domain_groups;
    std::unordered_map<std::string, std::string> group_of_item;
    DayOffset forecast_origin = 0;  // first test day
};

inline SeriesSet load_or_generate(const PipelineConfig& cfg) {
    if (cfg.synthetic) return generate_synthetic(*cfg.synthetic);
    return load_csv(cfg.sales_csv, cfg.calendar_csv, cfg.meta_csv);
}

inline PreparedData prepare_data(const SeriesSet& full, const PipelineConfig& cfg) {
    const auto k = static_cast<int>(full.days());
    if (k <= cfg.horizon)
        throw std::runtime_error("prepare_data: series shorter than the forecast horizon");
    const auto k_train = static_cast<std::size_t>(k - cfg.horizon);

    PreparedData prep;
    prep.train.calendar = full.calendar;
    prep.forecast_origin = full.start_day() + static_cast<DayOffset>(k_train);
    for (std::size_t i = 0; i < full.size(); ++i) {
        const auto& s = full.series[i];
        SalesSeries head;
        head.item_id = s.item_id;
        head.start_day = s.start_day;
        head.values.assign(s.values.begin(), s.values.begin() + static_cast<std::ptrdiff_t>(k_train));
        head.missing.assign(s.missing.begin(), s.missing.begin() + static_cast<std::ptrdiff_t>(k_train));
        if (cfg.repair_zeros) head = repair_fake_zeros(head, cfg.gamma);
        head = forward_fill(head);
        prep.train.series.push_back(std::move(head));
        prep.train.meta.push_back(full.meta[i]);

        // Test ground truth: raw sales, gaps imputed from history only.
        SalesSeries whole = s;
        whole = forward_fill(whole);
        prep.test_actuals[s.item_id] =
            std::vector<double>(whole.values.begin() + static_cast<std::ptrdiff_t>(k_train),
                                whole.values.end());
    }
    annotate_business_metrics(prep.train);
    prep.domain_groups = domain_grouping(prep.train);
    for (std::size_t i = 0; i < prep.train.size(); ++i)
        prep.group_of_item[prep.train.series[i].item_id] = prep.domain_groups.labels[i];
    return prep;
}

// ---------------------------------------------------------------------------
// LSTM variants
// ---------------------------------------------------------------------------

struct PartitionRun {
    std::string label;           // partition label ("all", "G1", "C0", ...)
    std::vector<std::string> item_ids;
    TrainResult training;
    int window_count = 0;
    bool skipped = false;
    std::string skip_reason;
    HpoResult hpo;  // populated when HPO ran for this partition
    bool ran_hpo = false;
};

struct ModelRunResult {
    std::string model_tag;
    std::vector<ForecastResult> forecasts;  // post-processed per output config
    MetricReport metrics;                   // unclamped mMAPE (Eq.-style)
    MetricReport metrics_clamped;
    std::vector<PartitionRun> partitions;
    std::vector<std::string> excluded_items;  // too short for windowing
};

namespace detail {

struct ItemWindows {
    std::size_t item_index;
    ScaledSeries scaled;
    std::string group_label;  // label in the active layout ("" when unused)
};

/// Forecast one item: run the chronological tail of its windows (up to
/// bptt_steps, ending at the input window that touches the train boundary)
/// and post-process the final projected output.
inline std::vector<double> forecast_item_raw(const LstmParams& params, const ScaledSeries& scaled,
                                             const ItemMeta& meta, const Calendar& cal, int n,
                                             const FeatureLayout& layout,
                                             const std::string& group_label, int bptt_steps,
                                             double* local_mean_out) {
    const auto k_train = static_cast<int>(scaled.scaled_values.size());
    const int final_origin = k_train - n;
    const int first_origin = std::max(0, final_origin - (bptt_steps - 1));
    std::vector<std::vector<double>> inputs;
    double final_local_mean = 0.0;
    for (int origin = first_origin; origin <= final_origin; ++origin) {
        auto window = make_input_window(scaled, meta, cal, n, layout, origin, group_label);
        final_local_mean = window.local_mean;
        inputs.push_back(assemble_step_input(window));
    }
    auto cache = lstm_forward(params, inputs, LstmState::zero(params.dims().cell_dim));
    auto out = cache.output(cache.steps - 1);
    if (local_mean_out) *local_mean_out = final_local_mean;
    return {out.begin(), out.end()};
}

inline TrainConfig config_from_trial(const SearchSpace& space, const std::vector<double>& point,
                                     const TrainConfig& base) {
    TrainConfig cfg = base;
    auto get = [&](const char* name, double fallback) {
        const int idx = space.index_of(name);
        return idx >= 0 ? point[static_cast<std::size_t>(idx)] : fallback;
    };
    cfg.cell_dim = static_cast<int>(get("cell_dim", cfg.cell_dim));
    cfg.minibatch_size = static_cast<int>(get("minibatch_size", cfg.minibatch_size));
    cfg.learning_rate = get("learning_rate", cfg.learning_rate);
    cfg.max_epochs = static_cast<int>(get("max_epochs", cfg.max_epochs));
    cfg.gaussian_noise_std = get("gaussian_noise_std", cfg.gaussian_noise_std);
    cfg.l2_weight = get("l2_weight", cfg.l2_weight);
    return cfg;
}

/// Mean validation mMAPE (original scale, unclamped) over a training set's
/// reserved windows; the HPO objective.
inline double validation_mmape(const LstmParams& params, const TrainingSet& ts,
                               const std::map<std::string, double>& scale_of_item) {
    if (ts.validation_pairs.empty()) return 0.0;
    double total = 0.0;
    for (const auto& pair : ts.validation_pairs) {
        std::vector<std::vector<double>> inputs{assemble_step_input(pair)};
        auto cache = lstm_forward(params, inputs, LstmState::zero(params.dims().cell_dim));
        auto raw = cache.output(0);
        const double scale = scale_of_item.at(pair.item_id);
        auto predicted = postprocess_forecast({raw.begin(), raw.end()}, pair.local_mean, scale, false);
        auto actual = postprocess_forecast(pair.targets, pair.local_mean, scale, false);
        total += mmape(predicted, actual);
    }
    return total / static_cast<double>(ts.validation_pairs.size());
}

}  // namespace detail

/// Trains and evaluates one LSTM variant on a prepared data split.
///
/// ALL: one model over every item's windows. GROUP: one model per domain
/// group. FEATURE: one global model with the group label one-hot appended
/// to the feature block. CLUSTER: one model per silhouette-selected
/// k-means cluster.
///
/// When `pretrained` is given, training (and HPO) is skipped and the
/// checkpointed parameters keyed by partition label are used instead.
inline ModelRunResult run_variant(const PreparedData& prep, const PipelineConfig& cfg,
                                  Variant variant,
                                  const std::map<std::string, LstmParams>* pretrained = nullptr) {
    const int m = cfg.horizon;
    const int n = cfg.input_window > 0 ? cfg.input_window : default_input_window(m);

    ModelRunResult result;
    result.model_tag = to_string(variant);

    // Scale factors from the train region only.
    std::vector<ScaledSeries> scaled(prep.train.size());
    std::map<std::string, double> scale_of_item;
    for (std::size_t i = 0; i < prep.train.size(); ++i) {
        scaled[i] = mean_scale(prep.train.series[i]);
        scale_of_item[scaled[i].item_id] = scaled[i].scale_factor;
    }

    // Partition items and fix the feature layout per variant.
    std::vector<std::string> partition_labels;     // parallel to items
    std::vector<std::string> partitions;           // distinct, training order
    FeatureLayout layout = FeatureLayout::from_set(prep.train);
    std::vector<std::string> window_group_labels(prep.train.size());  // for FEATURE

    switch (variant) {
        case Variant::all:
            partition_labels.assign(prep.train.size(), "all");
            partitions = {"all"};
            break;
        case Variant::group:
            partition_labels = prep.domain_groups.labels;
            partitions = {"G1", "G2", "G3"};
            break;
        case Variant::feature: {
            partition_labels.assign(prep.train.size(), "all");
            partitions = {"all"};
            auto groups = prep.domain_groups.distinct_labels();
            layout = FeatureLayout::from_set(prep.train, groups);
            window_group_labels = prep.domain_groups.labels;
            break;
        }
        case Variant::cluster: {
            auto selection = cluster_items(prep.train, cfg.cluster);
            partition_labels = selection.groups.labels;
            for (int c = 0; c < std::max(1, selection.selected_k); ++c)
                partitions.push_back("C" + std::to_string(c));
            break;
        }
    }

    // Forecast per partition.
    std::set<std::string> excluded;
    std::size_t partition_index = 0;
    for (const auto& partition : partitions) {
        PartitionRun run;
        run.label = partition;

        TrainingSet ts;
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < prep.train.size(); ++i) {
            if (partition_labels[i] != partition) continue;
            const std::string& group_label =
                variant == Variant::feature ? window_group_labels[i] : std::string();
            if (make_windows(scaled[i], prep.train.meta[i], prep.train.calendar, n, m, layout, ts,
                             group_label))
                members.push_back(i);
        }
        for (const auto& item : ts.excluded_items) excluded.insert(item);

        if (ts.train_pairs.empty()) {
            run.skipped = true;
            run.skip_reason = "no trainable series in partition";
            result.partitions.push_back(std::move(run));
            ++partition_index;
            continue;
        }
        run.window_count = static_cast<int>(ts.train_pairs.size());
        for (auto i : members) run.item_ids.push_back(prep.train.series[i].item_id);

        TrainConfig train_cfg = cfg.train;
        train_cfg.rng_seed = derive_seed(cfg.seed, 0x7a0000ULL + partition_index);

        if (pretrained) {
            auto it = pretrained->find(partition);
            if (it == pretrained->end()) {
                run.skipped = true;
                run.skip_reason = "no checkpoint for partition";
                result.partitions.push_back(std::move(run));
                ++partition_index;
                continue;
            }
            run.training.params = it->second;
        } else {
            if (cfg.use_hpo) {
                auto space = SearchSpace::lstm_grid(train_cfg.optimizer == OptimizerKind::adam);
                auto objective = [&](const std::vector<double>& point) {
                    TrainConfig candidate = detail::config_from_trial(space, point, train_cfg);
                    auto trained = train_epochs(ts, candidate);
                    return detail::validation_mmape(trained.params, ts, scale_of_item);
                };
                run.hpo = bayes_optimize(space, objective, cfg.hpo_budget,
                                         derive_seed(cfg.seed, 0xb0a7ULL + partition_index));
                run.ran_hpo = true;
                train_cfg = detail::config_from_trial(space, run.hpo.best().point, train_cfg);
            }
            run.training = train_epochs(ts, train_cfg);
        }

        // Forecast every member item from the trained parameters.
        std::vector<ForecastResult> partition_forecasts(members.size());
        detail::parallel_for(members.size(), [&](std::size_t idx) {
            const auto i = members[idx];
            const std::string& group_label =
                variant == Variant::feature ? window_group_labels[i] : std::string();
            double local_mean = 0.0;
            auto raw = detail::forecast_item_raw(run.training.params, scaled[i],
                                                 prep.train.meta[i], prep.train.calendar, n,
                                                 layout, group_label, train_cfg.bptt_steps,
                                                 &local_mean);
            ForecastResult forecast;
            forecast.item_id = scaled[i].item_id;
            forecast.origin_day = prep.forecast_origin;
            forecast.horizon = m;
            forecast.model_tag = result.model_tag;
            forecast.point_forecasts = postprocess_forecast(raw, local_mean,
                                                            scaled[i].scale_factor, false);
            partition_forecasts[idx] = std::move(forecast);
        });
        for (auto& f : partition_forecasts) result.forecasts.push_back(std::move(f));
        result.partitions.push_back(std::move(run));
        ++partition_index;
    }

    result.excluded_items.assign(excluded.begin(), excluded.end());

    // Score against the held-out actuals, unclamped and clamped.
    std::map<std::string, double> scores, scores_clamped;
    for (auto& f : result.forecasts) {
        const auto& actual = prep.test_actuals.at(f.item_id);
        scores[f.item_id] = mmape(f.point_forecasts, actual);
        auto clamped = f.point_forecasts;
        for (auto& v : clamped) v = std::max(0.0, v);
        if (cfg.round_outputs)
            for (auto& v : clamped) v = std::round(v);
        scores_clamped[f.item_id] = mmape(clamped, actual);
        if (cfg.clamp_outputs) f.point_forecasts = std::move(clamped);
    }
    result.metrics = aggregate(scores, prep.group_of_item, result.model_tag);
    result.metrics_clamped =
        aggregate(scores_clamped, prep.group_of_item, result.model_tag + "+clamp");
    return result;
}

// ---------------------------------------------------------------------------
// Benchmarks
// ---------------------------------------------------------------------------

struct BenchmarkRunResult {
    std::string model_tag;
    std::vector<ForecastResult> forecasts;
    MetricReport metrics;
    MetricReport metrics_clamped;
    std::vector<std::pair<std::string, std::string>> failures;  // item -> reason
};

/// Fits one benchmark per item on the cleaned train region and scores it on
/// the same held-out window as the LSTM variants. Per-item failures are
/// disclosed and the item excluded from that model's report.
inline BenchmarkRunResult run_benchmark(const PreparedData& prep, const PipelineConfig& cfg,
                                        const std::string& tag) {
    BenchmarkRunResult result;
    result.model_tag = tag;
    const int m = cfg.horizon;

    std::vector<ForecastResult> forecasts(prep.train.size());
    std::vector<std::string> errors(prep.train.size());
    detail::parallel_for(prep.train.size(), [&](std::size_t i) {
        const auto& x = prep.train.series[i].values;
        try {
            std::vector<double> f;
            if (tag == "naive")
                f = forecast_naive(x, m);
            else if (tag == "snaive")
                f = forecast_snaive(x, m);
            else if (tag == "ewma")
                f = forecast_ewma(x, m, 0.0, m);
            else if (tag == "ses")
                f = forecast_ses(x, m);
            else if (tag == "ets_nonseasonal")
                f = forecast_ets(x, m, false);
            else if (tag == "ets_seasonal")
                f = forecast_ets(x, m, true);
            else if (tag == "ar")
                f = forecast_ar(x, m);
            else
                throw std::invalid_argument("unknown benchmark tag: " + tag);
            ForecastResult fr;
            fr.item_id = prep.train.series[i].item_id;
            fr.origin_day = prep.forecast_origin;
            fr.horizon = m;
            fr.model_tag = tag;
            fr.point_forecasts = std::move(f);
            forecasts[i] = std::move(fr);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    std::map<std::string, double> scores, scores_clamped;
    for (std::size_t i = 0; i < prep.train.size(); ++i) {
        if (!errors[i].empty()) {
            result.failures.emplace_back(prep.train.series[i].item_id, errors[i]);
            continue;
        }
        auto& f = forecasts[i];
        const auto& actual = prep.test_actuals.at(f.item_id);
        scores[f.item_id] = mmape(f.point_forecasts, actual);
        auto clamped = f.point_forecasts;
        for (auto& v : clamped) v = std::max(0.0, v);
        if (cfg.round_outputs)
            for (auto& v : clamped) v = std::round(v);
        scores_clamped[f.item_id] = mmape(clamped, actual);
        if (cfg.clamp_outputs) f.point_forecasts = std::move(clamped);
        result.forecasts.push_back(std::move(f));
    }
    result.metrics = aggregate(scores, prep.group_of_item, tag);
    result.metrics_clamped = aggregate(scores_clamped, prep.group_of_item, tag + "+clamp");
    return result;
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

inline void write_forecasts_csv(const std::vector<ForecastResult>& forecasts,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write forecasts file: " + path);
    out << "item_id,origin_date,h,forecast,model_tag\n";
    for (const auto& f : forecasts)
        for (int h = 1; h <= f.horizon; ++h)
            out << f.item_id << ',' << format_date(f.origin_day) << ',' << h << ','
                << detail::format_double(f.point_forecasts[static_cast<std::size_t>(h - 1)]) << ','
                << f.model_tag << '\n';
}

inline std::vector<ForecastResult> read_forecasts_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open forecasts file: " + path);
    std::map<std::pair<std::string, std::string>, ForecastResult> by_key;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line_no == 1 && line.rfind("item_id", 0) == 0)) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 5)
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected 5 columns in forecasts file");
        auto& f = by_key[{fields[4], fields[0]}];
        f.item_id = fields[0];
        f.origin_day = parse_date(fields[1]);
        f.model_tag = fields[4];
        const int h = static_cast<int>(detail::parse_double(fields[2], "step", line_no));
        if (static_cast<int>(f.point_forecasts.size()) < h)
            f.point_forecasts.resize(static_cast<std::size_t>(h));
        f.point_forecasts[static_cast<std::size_t>(h - 1)] =
            detail::parse_double(fields[3], "forecast", line_no);
        f.horizon = std::max(f.horizon, h);
    }
    std::vector<ForecastResult> out;
    out.reserve(by_key.size());
    for (auto& [key, f] : by_key) out.push_back(std::move(f));
    return out;
}

}  // namespace demandcast
