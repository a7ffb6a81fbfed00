#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "demandcast/pipeline.hpp"

namespace demandcast {

inline nlohmann::json config_to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["sales_csv"] = cfg.sales_csv;
    j["meta_csv"] = cfg.meta_csv;
    j["calendar_csv"] = cfg.calendar_csv;
    if (cfg.synthetic) {
        const auto& s = *cfg.synthetic;
        j["synthetic"] = {{"n_items", s.n_items},
                          {"n_days", s.n_days},
                          {"n_subcategories", s.n_subcategories},
                          {"weekly_seasonality_amplitude", s.weekly_seasonality_amplitude},
                          {"shared_pattern_strength", s.shared_pattern_strength},
                          {"zero_inflation_probability", s.zero_inflation_probability},
                          {"noise_std", s.noise_std},
                          {"base_level_min", s.base_level_min},
                          {"base_level_max", s.base_level_max},
                          {"rng_seed", s.rng_seed},
                          {"start_date", format_date(s.start_day)}};
    }
    j["horizon"] = cfg.horizon;
    j["input_window"] = cfg.input_window;
    j["gamma"] = cfg.gamma;
    j["repair_zeros"] = cfg.repair_zeros;
    std::vector<std::string> variant_names;
    for (auto v : cfg.variants) variant_names.push_back(to_string(v));
    j["variants"] = variant_names;
    j["train"] = {{"cell_dim", cfg.train.cell_dim},
                  {"minibatch_size", cfg.train.minibatch_size},
                  {"learning_rate", cfg.train.learning_rate},
                  {"max_epochs", cfg.train.max_epochs},
                  {"gaussian_noise_std", cfg.train.gaussian_noise_std},
                  {"l2_weight", cfg.train.l2_weight},
                  {"scheme", to_string(cfg.train.scheme)},
                  {"optimizer", to_string(cfg.train.optimizer)},
                  {"bptt_steps", cfg.train.bptt_steps},
                  {"clip_norm", cfg.train.clip_norm}};
    j["use_hpo"] = cfg.use_hpo;
    j["hpo_budget"] = cfg.hpo_budget;
    j["cluster"] = {{"k_min", cfg.cluster.k_min}, {"k_max", cfg.cluster.k_max}};
    j["benchmarks"] = cfg.benchmarks;
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    j["clamp_outputs"] = cfg.clamp_outputs;
    j["round_outputs"] = cfg.round_outputs;
    return j;
}

/// Keys present in `j` override the corresponding fields of `cfg`; absent
/// keys keep the base values (the CLI passes its flag values as the base).
inline PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig cfg = {}) {
    cfg.sales_csv = j.value("sales_csv", cfg.sales_csv);
    cfg.meta_csv = j.value("meta_csv", cfg.meta_csv);
    cfg.calendar_csv = j.value("calendar_csv", cfg.calendar_csv);
    if (j.contains("synthetic")) {
        if (!j.contains("sales_csv")) cfg.sales_csv.clear();  // file wins on the source choice
        SyntheticSpec s = cfg.synthetic ? *cfg.synthetic : SyntheticSpec{};
        const auto& js = j.at("synthetic");
        s.n_items = js.value("n_items", s.n_items);
        s.n_days = js.value("n_days", s.n_days);
        s.n_subcategories = js.value("n_subcategories", s.n_subcategories);
        s.weekly_seasonality_amplitude =
            js.value("weekly_seasonality_amplitude", s.weekly_seasonality_amplitude);
        s.shared_pattern_strength = js.value("shared_pattern_strength", s.shared_pattern_strength);
        s.zero_inflation_probability =
            js.value("zero_inflation_probability", s.zero_inflation_probability);
        s.noise_std = js.value("noise_std", s.noise_std);
        s.base_level_min = js.value("base_level_min", s.base_level_min);
        s.base_level_max = js.value("base_level_max", s.base_level_max);
        s.rng_seed = js.value("rng_seed", s.rng_seed);
        if (js.contains("start_date")) s.start_day = parse_date(js.at("start_date"));
        cfg.synthetic = s;
    } else if (j.contains("sales_csv")) {
        cfg.synthetic.reset();
    }
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.input_window = j.value("input_window", cfg.input_window);
    cfg.gamma = j.value("gamma", cfg.gamma);
    cfg.repair_zeros = j.value("repair_zeros", cfg.repair_zeros);
    if (j.contains("variants")) {
        cfg.variants.clear();
        for (const auto& name : j.at("variants"))
            cfg.variants.push_back(variant_from_string(name.get<std::string>()));
    }
    if (j.contains("train")) {
        const auto& jt = j.at("train");
        cfg.train.cell_dim = jt.value("cell_dim", cfg.train.cell_dim);
        cfg.train.minibatch_size = jt.value("minibatch_size", cfg.train.minibatch_size);
        cfg.train.learning_rate = jt.value("learning_rate", cfg.train.learning_rate);
        cfg.train.max_epochs = jt.value("max_epochs", cfg.train.max_epochs);
        cfg.train.gaussian_noise_std = jt.value("gaussian_noise_std", cfg.train.gaussian_noise_std);
        cfg.train.l2_weight = jt.value("l2_weight", cfg.train.l2_weight);
        if (jt.contains("scheme"))
            cfg.train.scheme =
                jt.at("scheme").get<std::string>() == "LS2" ? Scheme::LS2 : Scheme::LS1;
        if (jt.contains("optimizer"))
            cfg.train.optimizer = jt.at("optimizer").get<std::string>() == "cocob"
                                      ? OptimizerKind::cocob
                                      : OptimizerKind::adam;
        cfg.train.bptt_steps = jt.value("bptt_steps", cfg.train.bptt_steps);
        cfg.train.clip_norm = jt.value("clip_norm", cfg.train.clip_norm);
    }
    cfg.use_hpo = j.value("use_hpo", cfg.use_hpo);
    cfg.hpo_budget = j.value("hpo_budget", cfg.hpo_budget);
    if (j.contains("cluster")) {
        cfg.cluster.k_min = j.at("cluster").value("k_min", cfg.cluster.k_min);
        cfg.cluster.k_max = j.at("cluster").value("k_max", cfg.cluster.k_max);
    }
    if (j.contains("benchmarks")) cfg.benchmarks = j.at("benchmarks").get<std::vector<std::string>>();
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.clamp_outputs = j.value("clamp_outputs", cfg.clamp_outputs);
    cfg.round_outputs = j.value("round_outputs", cfg.round_outputs);
    return cfg;
}

inline PipelineConfig load_config_file(const std::string& path, PipelineConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return config_from_json(j, std::move(base));
}

namespace detail {

inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

}  // namespace detail

struct RunSummary {
    std::vector<ModelRunResult> variant_results;
    std::vector<BenchmarkRunResult> benchmark_results;
    std::vector<MetricReport> reports;  // unclamped, one per model
    std::string output_dir;
};

/// Fixed-origin end-to-end run: preprocess, train the requested variants,
/// forecast the held-out last-M-days window, score every model, and write
/// all artifacts under cfg.output_dir. Outputs are a pure function of the
/// config (the manifest records its hash).
inline RunSummary run_end_to_end(const PipelineConfig& cfg) {
    auto stage = [](const std::string& name, auto&& fn) {
        try {
            return fn();
        } catch (const std::exception& e) {
            throw std::runtime_error("[" + name + "] " + e.what());
        }
    };

    stage("config", [&] {
        auto violations = validate_config(cfg);
        if (!violations.empty()) throw std::runtime_error(violations.front());
        return 0;
    });

    const SeriesSet full = stage("ingest", [&] { return load_or_generate(cfg); });
    stage("validate", [&] {
        auto violations = validate_set(full);
        if (!violations.empty()) throw std::runtime_error(violations.front());
        return 0;
    });
    const PreparedData prep = stage("preprocess", [&] { return prepare_data(full, cfg); });

    RunSummary summary;
    summary.output_dir = cfg.output_dir;
    for (auto variant : cfg.variants)
        summary.variant_results.push_back(stage(
            std::string("train:") + to_string(variant), [&] { return run_variant(prep, cfg, variant); }));
    for (const auto& tag : cfg.benchmarks)
        summary.benchmark_results.push_back(
            stage("benchmark:" + tag, [&] { return run_benchmark(prep, cfg, tag); }));

    stage("artifacts", [&] {
        namespace fs = std::filesystem;
        fs::create_directories(cfg.output_dir);
        fs::create_directories(fs::path(cfg.output_dir) / "models");

        std::vector<ForecastResult> all_forecasts;
        std::vector<MetricReport> reports, reports_clamped;
        for (const auto& r : summary.variant_results) {
            all_forecasts.insert(all_forecasts.end(), r.forecasts.begin(), r.forecasts.end());
            reports.push_back(r.metrics);
            reports_clamped.push_back(r.metrics_clamped);
        }
        for (const auto& r : summary.benchmark_results) {
            all_forecasts.insert(all_forecasts.end(), r.forecasts.begin(), r.forecasts.end());
            reports.push_back(r.metrics);
            reports_clamped.push_back(r.metrics_clamped);
        }
        summary.reports = reports;

        write_forecasts_csv(all_forecasts, (fs::path(cfg.output_dir) / "forecasts.csv").string());
        write_metrics_csv(reports, (fs::path(cfg.output_dir) / "metrics.csv").string());
        write_metrics_csv(reports_clamped,
                          (fs::path(cfg.output_dir) / "metrics_clamped.csv").string());
        write_per_item_csv(reports, (fs::path(cfg.output_dir) / "per_item_mmape.csv").string());
        write_groups_csv(prep.train, prep.domain_groups,
                         (fs::path(cfg.output_dir) / "groups.csv").string());
        {
            std::ofstream report_txt(fs::path(cfg.output_dir) / "report.txt");
            report_txt << render_report_table(reports);
        }
        {
            std::ofstream trace(fs::path(cfg.output_dir) / "trace.csv");
            trace << "model_tag,partition,epoch,train_loss,l2_penalty,validation_loss\n";
            for (const auto& r : summary.variant_results)
                for (const auto& p : r.partitions) {
                    if (p.skipped) continue;
                    for (std::size_t e = 0; e < p.training.trace.size(); ++e)
                        trace << r.model_tag << ',' << p.label << ',' << e << ','
                              << demandcast::detail::format_double(p.training.trace[e].train_loss)
                              << ','
                              << demandcast::detail::format_double(p.training.trace[e].l2_penalty)
                              << ','
                              << demandcast::detail::format_double(
                                     p.training.trace[e].validation_loss)
                              << '\n';
                }
        }
        for (const auto& r : summary.variant_results) {
            for (const auto& p : r.partitions) {
                if (p.skipped) continue;
                const auto name = r.model_tag + "_" + p.label + ".bin";
                p.training.params.save((fs::path(cfg.output_dir) / "models" / name).string());
                if (p.ran_hpo) {
                    auto space =
                        SearchSpace::lstm_grid(cfg.train.optimizer == OptimizerKind::adam);
                    write_trials_csv(space, p.hpo,
                                     (fs::path(cfg.output_dir) /
                                      (r.model_tag + "_" + p.label + "_trials.csv"))
                                         .string());
                }
            }
        }

        nlohmann::json manifest;
        const auto config_json = config_to_json(cfg);
        manifest["config"] = config_json;
        char hash_hex[32];
        std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                      static_cast<unsigned long long>(detail::fnv1a(config_json.dump())));
        manifest["config_hash"] = hash_hex;
        manifest["seed"] = cfg.seed;
        manifest["format_versions"] = {{"checkpoint", "DCLSTM01"}, {"forecasts_csv", 1},
                                       {"metrics_csv", 1}};
        manifest["n_items"] = full.size();
        manifest["n_days"] = full.days();
        manifest["forecast_origin"] = format_date(prep.forecast_origin);
        nlohmann::json exclusions = nlohmann::json::object();
        for (const auto& r : summary.variant_results)
            exclusions[r.model_tag] = r.excluded_items.size();
        for (const auto& r : summary.benchmark_results)
            exclusions[r.model_tag] = r.failures.size();
        manifest["excluded_or_failed_items"] = exclusions;
        std::ofstream manifest_out(fs::path(cfg.output_dir) / "manifest.json");
        manifest_out << manifest.dump(2) << '\n';
        return 0;
    });
    return summary;
}

}  // namespace demandcast
