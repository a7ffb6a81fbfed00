// demandcast command line: synthetic data generation, preprocessing, LSTM
// training, forecasting, evaluation and the end-to-end pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "demandcast/runner.hpp"

namespace fs = std::filesystem;
using namespace demandcast;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string sales_csv, meta_csv, calendar_csv;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    int horizon = 10;
    int input_window = 0;
    double gamma = 10.0;
    bool no_repair = false;
    std::string variant = "all";
    std::string variants_csv;  // comma-separated list; run subcommand
    std::string scheme = "LS1";
    std::string optimizer = "adam";
    int cell_dim = 50;
    int minibatch = 60;
    double learning_rate = 1e-3;
    int epochs = 5;
    double noise_std = 1e-4;
    double l2 = 1e-4;
    int bptt = 8;
    int k_min = 2, k_max = 5;
    bool use_hpo = false;
    int hpo_budget = 30;
    std::string benchmarks_csv;
};

void add_data_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path,
                    "JSON config file; its keys override command-line flags");
    cmd->add_option("--sales", f.sales_csv, "sales CSV (item_id,date,sales)");
    cmd->add_option("--meta", f.meta_csv, "metadata CSV (item_id,subcategory,...)");
    cmd->add_option("--calendar", f.calendar_csv, "calendar CSV (date,holiday)");
    cmd->add_option("--out", f.output_dir, "output directory");
    cmd->add_option("--seed", f.seed, "pipeline RNG seed");
}

void add_model_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--horizon", f.horizon, "forecast horizon M");
    cmd->add_option("--input-window", f.input_window, "input window n (0 = ceil(1.25*M))");
    cmd->add_option("--gamma", f.gamma, "fake-zero repair threshold");
    cmd->add_flag("--no-repair", f.no_repair, "skip fake-zero repair");
    cmd->add_option("--scheme", f.scheme, "learning scheme: LS1 | LS2");
    cmd->add_option("--optimizer", f.optimizer, "optimizer: adam | cocob");
    cmd->add_option("--cell-dim", f.cell_dim, "LSTM cell dimension");
    cmd->add_option("--minibatch", f.minibatch, "minibatch size");
    cmd->add_option("--lr", f.learning_rate, "learning rate (adam)");
    cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--noise-std", f.noise_std, "gaussian input noise std");
    cmd->add_option("--l2", f.l2, "L2 regularization weight");
    cmd->add_option("--bptt", f.bptt, "BPTT truncation length");
    cmd->add_option("--k-min", f.k_min, "cluster count lower bound");
    cmd->add_option("--k-max", f.k_max, "cluster count upper bound");
}

PipelineConfig config_from_flags(const CommonFlags& f) {
    PipelineConfig cfg;
    cfg.sales_csv = f.sales_csv;
    cfg.meta_csv = f.meta_csv;
    cfg.calendar_csv = f.calendar_csv;
    cfg.output_dir = f.output_dir;
    cfg.seed = f.seed;
    cfg.horizon = f.horizon;
    cfg.input_window = f.input_window;
    cfg.gamma = f.gamma;
    cfg.repair_zeros = !f.no_repair;
    cfg.train.scheme = f.scheme == "LS2" ? Scheme::LS2 : Scheme::LS1;
    cfg.train.optimizer = f.optimizer == "cocob" ? OptimizerKind::cocob : OptimizerKind::adam;
    cfg.train.cell_dim = f.cell_dim;
    cfg.train.minibatch_size = f.minibatch;
    cfg.train.learning_rate = f.learning_rate;
    cfg.train.max_epochs = f.epochs;
    cfg.train.gaussian_noise_std = f.noise_std;
    cfg.train.l2_weight = f.l2;
    cfg.train.bptt_steps = f.bptt;
    cfg.cluster.k_min = f.k_min;
    cfg.cluster.k_max = f.k_max;
    cfg.cluster.rng_seed = f.seed;
    cfg.use_hpo = f.use_hpo;
    cfg.hpo_budget = f.hpo_budget;
    if (!f.variants_csv.empty()) {
        cfg.variants.clear();
        std::stringstream ss(f.variants_csv);
        std::string name;
        while (std::getline(ss, name, ',')) cfg.variants.push_back(variant_from_string(name));
    } else {
        cfg.variants = {variant_from_string(f.variant)};
    }
    if (!f.benchmarks_csv.empty()) {
        cfg.benchmarks.clear();
        std::stringstream ss(f.benchmarks_csv);
        std::string name;
        while (std::getline(ss, name, ',')) cfg.benchmarks.push_back(name);
    }
    return cfg;
}

PipelineConfig resolve_config(const CommonFlags& f) {
    PipelineConfig cfg = config_from_flags(f);
    if (!f.config_path.empty()) cfg = load_config_file(f.config_path, std::move(cfg));
    return cfg;
}

int cmd_synth(const CommonFlags& flags, const SyntheticSpec& spec_flags) {
    PipelineConfig cfg = config_from_flags(flags);
    cfg.synthetic = spec_flags;
    cfg.sales_csv.clear();
    if (!flags.config_path.empty()) cfg = load_config_file(flags.config_path, std::move(cfg));
    if (!cfg.synthetic) throw std::runtime_error("synth: config did not define a synthetic spec");

    auto set = generate_synthetic(*cfg.synthetic);
    fs::create_directories(cfg.output_dir);
    write_sales_csv(set, (fs::path(cfg.output_dir) / "sales.csv").string());
    write_meta_csv(set, (fs::path(cfg.output_dir) / "meta.csv").string());
    write_calendar_csv(set, (fs::path(cfg.output_dir) / "calendar.csv").string());
    std::cout << "wrote " << set.size() << " items x " << set.days() << " days under "
              << cfg.output_dir << "\n";
    return 0;
}

int cmd_preprocess(const CommonFlags& flags, bool with_clusters) {
    PipelineConfig cfg = resolve_config(flags);
    auto set = load_or_generate(cfg);
    fs::create_directories(cfg.output_dir);

    SeriesSet cleaned;
    cleaned.calendar = set.calendar;
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto s = set.series[i];
        if (cfg.repair_zeros) s = repair_fake_zeros(s, cfg.gamma);
        s = forward_fill(s);
        cleaned.series.push_back(std::move(s));
        cleaned.meta.push_back(set.meta[i]);
    }
    annotate_business_metrics(cleaned);
    write_sales_csv(cleaned, (fs::path(cfg.output_dir) / "cleaned_sales.csv").string());

    auto domain = domain_grouping(cleaned);
    write_groups_csv(cleaned, domain, (fs::path(cfg.output_dir) / "groups_domain.csv").string());
    if (with_clusters) {
        cfg.cluster.rng_seed = cfg.seed;
        auto clusters = cluster_items(cleaned, cfg.cluster);
        write_groups_csv(cleaned, clusters.groups,
                         (fs::path(cfg.output_dir) / "groups_cluster.csv").string());
        std::cout << "selected k=" << clusters.selected_k;
        if (!clusters.groups.warning.empty()) std::cout << " (" << clusters.groups.warning << ")";
        std::cout << "\n";
    }
    std::cout << "preprocessed " << cleaned.size() << " items into " << cfg.output_dir << "\n";
    return 0;
}

int cmd_train(const CommonFlags& flags) {
    PipelineConfig cfg = resolve_config(flags);
    auto full = load_or_generate(cfg);
    auto prep = prepare_data(full, cfg);

    fs::create_directories(fs::path(cfg.output_dir) / "models");
    std::ofstream trace(fs::path(cfg.output_dir) / "trace.csv");
    trace << "model_tag,partition,epoch,train_loss,l2_penalty,validation_loss\n";
    for (auto variant : cfg.variants) {
        auto result = run_variant(prep, cfg, variant);
        for (const auto& p : result.partitions) {
            if (p.skipped) {
                std::cout << result.model_tag << "/" << p.label << ": skipped (" << p.skip_reason
                          << ")\n";
                continue;
            }
            const auto name = result.model_tag + "_" + p.label + ".bin";
            p.training.params.save((fs::path(cfg.output_dir) / "models" / name).string());
            for (std::size_t e = 0; e < p.training.trace.size(); ++e)
                trace << result.model_tag << ',' << p.label << ',' << e << ','
                      << p.training.trace[e].train_loss << ',' << p.training.trace[e].l2_penalty
                      << ',' << p.training.trace[e].validation_loss << '\n';
            std::cout << result.model_tag << "/" << p.label << ": best epoch "
                      << p.training.best_epoch << ", validation loss "
                      << p.training.trace[static_cast<std::size_t>(p.training.best_epoch)]
                             .validation_loss
                      << "\n";
            if (p.ran_hpo) {
                auto space = SearchSpace::lstm_grid(cfg.train.optimizer == OptimizerKind::adam);
                write_trials_csv(space, p.hpo,
                                 (fs::path(cfg.output_dir) /
                                  (result.model_tag + "_" + p.label + "_trials.csv"))
                                     .string());
            }
        }
    }
    std::cout << "checkpoints under " << (fs::path(cfg.output_dir) / "models").string() << "\n";
    return 0;
}

int cmd_forecast(const CommonFlags& flags, const std::string& models_dir) {
    PipelineConfig cfg = resolve_config(flags);
    auto full = load_or_generate(cfg);
    auto prep = prepare_data(full, cfg);

    fs::create_directories(cfg.output_dir);
    std::vector<ForecastResult> all;
    for (auto variant : cfg.variants) {
        std::map<std::string, LstmParams> pretrained;
        const std::string tag = to_string(variant);
        for (const auto& entry : fs::directory_iterator(models_dir)) {
            const auto name = entry.path().filename().string();
            if (name.rfind(tag + "_", 0) == 0 && entry.path().extension() == ".bin") {
                const auto label = name.substr(tag.size() + 1, name.size() - tag.size() - 5);
                pretrained.emplace(label, LstmParams::load(entry.path().string()));
            }
        }
        if (pretrained.empty())
            throw std::runtime_error("forecast: no checkpoints for " + tag + " under " +
                                     models_dir);
        auto result = run_variant(prep, cfg, variant, &pretrained);
        all.insert(all.end(), result.forecasts.begin(), result.forecasts.end());
    }
    const auto path = (fs::path(cfg.output_dir) / "forecasts.csv").string();
    write_forecasts_csv(all, path);
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& forecasts_path) {
    PipelineConfig cfg = resolve_config(flags);
    auto full = load_or_generate(cfg);
    auto prep = prepare_data(full, cfg);
    auto forecasts = read_forecasts_csv(forecasts_path);

    std::map<std::string, std::map<std::string, double>> scores_by_model;
    for (const auto& f : forecasts) {
        auto it = prep.test_actuals.find(f.item_id);
        if (it == prep.test_actuals.end())
            throw std::runtime_error("evaluate: unknown item in forecasts: " + f.item_id);
        if (f.horizon != cfg.horizon)
            throw std::runtime_error("evaluate: forecast horizon mismatch for " + f.item_id);
        scores_by_model[f.model_tag][f.item_id] = mmape(f.point_forecasts, it->second);
    }
    std::vector<MetricReport> reports;
    for (const auto& [tag, scores] : scores_by_model)
        reports.push_back(aggregate(scores, prep.group_of_item, tag));

    fs::create_directories(cfg.output_dir);
    write_metrics_csv(reports, (fs::path(cfg.output_dir) / "metrics.csv").string());
    write_per_item_csv(reports, (fs::path(cfg.output_dir) / "per_item_mmape.csv").string());
    const auto table = render_report_table(reports);
    std::ofstream(fs::path(cfg.output_dir) / "report.txt") << table;
    std::cout << table;
    return 0;
}

int cmd_run(const CommonFlags& flags) {
    PipelineConfig cfg = resolve_config(flags);
    auto summary = run_end_to_end(cfg);
    std::cout << render_report_table(summary.reports);
    std::cout << "artifacts under " << summary.output_dir << "\n";
    return 0;
}

int cmd_hpo(const CommonFlags& flags) {
    PipelineConfig cfg = resolve_config(flags);
    cfg.use_hpo = true;
    auto full = load_or_generate(cfg);
    auto prep = prepare_data(full, cfg);
    fs::create_directories(cfg.output_dir);

    auto result = run_variant(prep, cfg, cfg.variants.front());
    const PartitionRun* searched = nullptr;
    for (const auto& p : result.partitions)
        if (p.ran_hpo) searched = &p;
    if (!searched) throw std::runtime_error("hpo: search did not run");
    auto space = SearchSpace::lstm_grid(cfg.train.optimizer == OptimizerKind::adam);
    write_trials_csv(space, searched->hpo, (fs::path(cfg.output_dir) / "trials.csv").string());

    nlohmann::json best;
    for (std::size_t d = 0; d < space.dims.size(); ++d)
        best[space.dims[d].name] = searched->hpo.best().point[d];
    best["objective_validation_mmape"] = searched->hpo.best().objective;
    std::ofstream(fs::path(cfg.output_dir) / "best_config.json") << best.dump(2) << '\n';
    std::cout << "best validation mMAPE " << searched->hpo.best().objective << "; trials in "
              << cfg.output_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"demandcast: global LSTM demand forecasting pipeline"};
    app.require_subcommand(1);

    CommonFlags flags;
    SyntheticSpec spec;
    std::string start_date = "2018-01-01";
    std::string models_dir = "out/models";
    std::string forecasts_path = "out/forecasts.csv";
    bool with_clusters = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic hierarchical dataset");
    add_data_flags(synth, flags);
    synth->add_option("--items", spec.n_items, "number of items");
    synth->add_option("--days", spec.n_days, "number of days");
    synth->add_option("--subcategories", spec.n_subcategories, "number of subcategories");
    synth->add_option("--amplitude", spec.weekly_seasonality_amplitude, "weekly amplitude");
    synth->add_option("--shared", spec.shared_pattern_strength, "shared pattern strength [0,1]");
    synth->add_option("--zero-prob", spec.zero_inflation_probability, "zero inflation prob [0,1]");
    synth->add_option("--noise", spec.noise_std, "relative noise std");
    synth->add_option("--base-min", spec.base_level_min, "minimum base sales level");
    synth->add_option("--base-max", spec.base_level_max, "maximum base sales level");
    synth->add_option("--start-date", start_date, "first day (YYYY-MM-DD)");

    auto* preprocess = app.add_subcommand("preprocess", "repair, impute and group the data");
    add_data_flags(preprocess, flags);
    add_model_flags(preprocess, flags);
    preprocess->add_flag("--clusters", with_clusters, "also compute feature clusters");

    auto* train = app.add_subcommand("train", "train LSTM variant(s) on the holdout-split data");
    add_data_flags(train, flags);
    add_model_flags(train, flags);
    train->add_option("--variant", flags.variant, "all | group | feature | cluster");
    train->add_option("--variants", flags.variants_csv, "comma-separated variant list");
    train->add_flag("--hpo", flags.use_hpo, "Bayesian hyperparameter search");
    train->add_option("--budget", flags.hpo_budget, "HPO trial budget");

    auto* forecast = app.add_subcommand("forecast", "forecast from saved checkpoints");
    add_data_flags(forecast, flags);
    add_model_flags(forecast, flags);
    forecast->add_option("--variant", flags.variant, "all | group | feature | cluster");
    forecast->add_option("--models", models_dir, "checkpoint directory");

    auto* evaluate = app.add_subcommand("evaluate", "score a forecasts CSV against the holdout");
    add_data_flags(evaluate, flags);
    add_model_flags(evaluate, flags);
    evaluate->add_option("--forecasts", forecasts_path, "forecasts CSV to score");

    auto* run = app.add_subcommand("run", "end-to-end: preprocess, train, forecast, evaluate");
    add_data_flags(run, flags);
    add_model_flags(run, flags);
    run->add_option("--variant", flags.variant, "all | group | feature | cluster");
    run->add_option("--variants", flags.variants_csv, "comma-separated variant list");
    run->add_option("--benchmarks", flags.benchmarks_csv, "comma-separated benchmark list");
    run->add_flag("--hpo", flags.use_hpo, "Bayesian hyperparameter search");
    run->add_option("--budget", flags.hpo_budget, "HPO trial budget");

    auto* hpo = app.add_subcommand("hpo", "hyperparameter search on one variant");
    add_data_flags(hpo, flags);
    add_model_flags(hpo, flags);
    hpo->add_option("--variant", flags.variant, "all | group | feature | cluster");
    hpo->add_option("--budget", flags.hpo_budget, "HPO trial budget");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            spec.rng_seed = flags.seed;
            spec.start_day = parse_date(start_date);
            return cmd_synth(flags, spec);
        }
        if (preprocess->parsed()) return cmd_preprocess(flags, with_clusters);
        if (train->parsed()) return cmd_train(flags);
        if (forecast->parsed()) return cmd_forecast(flags, models_dir);
        if (evaluate->parsed()) return cmd_evaluate(flags, forecasts_path);
        if (run->parsed()) return cmd_run(flags);
        if (hpo->parsed()) return cmd_hpo(flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
