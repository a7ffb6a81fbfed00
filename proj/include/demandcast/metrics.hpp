#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace demandcast {

/// Modified MAPE: mean of |F_t - A_t| / (1 + |A_t|). The +1 keeps the ratio
/// defined for zero actuals, the common case for tail items.
inline double mmape(const std::vector<double>& forecast, const std::vector<double>& actual) {
    if (forecast.size() != actual.size())
        throw std::invalid_argument("mmape: forecast/actual length mismatch");
    if (forecast.empty()) throw std::invalid_argument("mmape: empty horizon");
    double total = 0.0;
    for (std::size_t t = 0; t < forecast.size(); ++t)
        total += std::abs(forecast[t] - actual[t]) / (1.0 + std::abs(actual[t]));
    return total / static_cast<double>(forecast.size());
}

struct GroupAggregate {
    double mean_mmape = 0.0;
    double median_mmape = 0.0;  // lower median for even counts
    std::size_t count = 0;
};

struct MetricReport {
    std::string model_tag;
    std::map<std::string, double> per_item;             // item_id -> mMAPE
    std::map<std::string, GroupAggregate> by_group;     // only non-empty groups appear
    GroupAggregate overall;
};

namespace detail {

inline GroupAggregate aggregate_values(std::vector<double> values) {
    GroupAggregate agg;
    agg.count = values.size();
    if (values.empty()) return agg;
    double sum = 0.0;
    for (double v : values) sum += v;
    agg.mean_mmape = sum / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    agg.median_mmape = values[(values.size() - 1) / 2];
    return agg;
}

}  // namespace detail

/// Group-wise and overall mean/median of per-item scores. Items without a
/// group label are rejected; empty groups are simply absent.
inline MetricReport aggregate(const std::map<std::string, double>& per_item,
                              const std::unordered_map<std::string, std::string>& group_of_item,
                              const std::string& model_tag) {
    MetricReport report;
    report.model_tag = model_tag;
    report.per_item = per_item;

    std::map<std::string, std::vector<double>> buckets;
    std::vector<double> all;
    for (const auto& [item, score] : per_item) {
        auto it = group_of_item.find(item);
        if (it == group_of_item.end())
            throw std::invalid_argument("aggregate: item '" + item + "' has no group label");
        buckets[it->second].push_back(score);
        all.push_back(score);
    }
    for (auto& [label, values] : buckets)
        report.by_group[label] = detail::aggregate_values(values);
    report.overall = detail::aggregate_values(std::move(all));
    return report;
}

/// Side-by-side table of several model reports: one row per model, mean and
/// median per group plus the overall column.
inline std::string render_report_table(const std::vector<MetricReport>& reports) {
    std::vector<std::string> groups;
    for (const auto& r : reports)
        for (const auto& [label, agg] : r.by_group)
            if (std::find(groups.begin(), groups.end(), label) == groups.end())
                groups.push_back(label);
    std::sort(groups.begin(), groups.end());

    std::ostringstream out;
    char buf[64];
    out << "model                    ";
    std::snprintf(buf, sizeof(buf), " %18s", "All(mean/median)");
    out << buf;
    for (const auto& g : groups) {
        std::snprintf(buf, sizeof(buf), " %18s", (g + "(mean/median)").c_str());
        out << buf;
    }
    out << '\n';
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%-25s", r.model_tag.c_str());
        out << buf;
        std::snprintf(buf, sizeof(buf), " %9.4f/%8.4f", r.overall.mean_mmape,
                      r.overall.median_mmape);
        out << buf;
        for (const auto& g : groups) {
            auto it = r.by_group.find(g);
            if (it == r.by_group.end()) {
                std::snprintf(buf, sizeof(buf), " %18s", "-");
                out << buf;
            } else {
                std::snprintf(buf, sizeof(buf), " %9.4f/%8.4f", it->second.mean_mmape,
                              it->second.median_mmape);
                out << buf;
            }
        }
        out << '\n';
    }
    return out.str();
}

inline void write_metrics_csv(const std::vector<MetricReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metrics file: " + path);
    out << "model_tag,group,k,mean_mmape,median_mmape\n";
    char buf[64];
    for (const auto& r : reports) {
        auto row = [&](const std::string& group, const GroupAggregate& agg) {
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g", agg.mean_mmape, agg.median_mmape);
            out << r.model_tag << ',' << group << ',' << agg.count << ',' << buf << '\n';
        };
        row("All", r.overall);
        for (const auto& [label, agg] : r.by_group) row(label, agg);
    }
}

inline void write_per_item_csv(const std::vector<MetricReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write per-item metrics file: " + path);
    out << "model_tag,item_id,mmape\n";
    char buf[32];
    for (const auto& r : reports)
        for (const auto& [item, score] : r.per_item) {
            std::snprintf(buf, sizeof(buf), "%.10g", score);
            out << r.model_tag << ',' << item << ',' << buf << '\n';
        }
}

}  // namespace demandcast
