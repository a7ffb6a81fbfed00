#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "demandcast/dataset.hpp"
#include "demandcast/series.hpp"

namespace demandcast {

/// Series divided by one plus its mean, so heterogeneous sales volumes
/// become comparable. scale_factor * scaled_values recovers the original.
struct ScaledSeries {
    std::string item_id;
    DayOffset start_day = 0;
    std::vector<double> scaled_values;
    double scale_factor = 1.0;
};

/// scale_factor = 1 + mean(values); the +1 keeps the denominator >= 1 for
/// all-zero items. Requires a gap-free series.
inline ScaledSeries mean_scale(const SalesSeries& s) {
    for (std::size_t t = 0; t < s.length(); ++t)
        if (s.missing[t])
            throw std::invalid_argument("mean_scale: series '" + s.item_id +
                                        "' has missing values");
    ScaledSeries out;
    out.item_id = s.item_id;
    out.start_day = s.start_day;
    const double mean =
        s.values.empty()
            ? 0.0
            : std::accumulate(s.values.begin(), s.values.end(), 0.0) /
                  static_cast<double>(s.values.size());
    out.scale_factor = 1.0 + mean;
    out.scaled_values.resize(s.values.size());
    for (std::size_t t = 0; t < s.values.size(); ++t)
        out.scaled_values[t] = s.values[t] / out.scale_factor;
    return out;
}

/// Heuristic input-window size: ceil(1.25 * m).
inline int default_input_window(int m) {
    if (m < 1) throw std::invalid_argument("default_input_window: m must be >= 1");
    return (5 * m + 3) / 4;
}

/// Layout of the per-step exogenous feature row: holiday flag, season
/// one-hot, day-of-week one-hot, subcategory one-hot, and optionally a
/// group-label one-hot (the FEATURE model variant).
struct FeatureLayout {
    std::vector<std::string> subcategories;  // sorted distinct ids
    std::vector<std::string> group_labels;   // empty unless groups are features

    int dim() const {
        return 1 + kNumSeasons + kNumWeekdays + static_cast<int>(subcategories.size()) +
               static_cast<int>(group_labels.size());
    }

    static FeatureLayout from_set(const SeriesSet& set,
                                  std::vector<std::string> group_labels = {}) {
        FeatureLayout layout;
        for (const auto& m : set.meta) layout.subcategories.push_back(m.subcategory_id);
        std::sort(layout.subcategories.begin(), layout.subcategories.end());
        layout.subcategories.erase(
            std::unique(layout.subcategories.begin(), layout.subcategories.end()),
            layout.subcategories.end());
        layout.group_labels = std::move(group_labels);
        return layout;
    }
};

/// One <input, output> training patch. Sales are in scaled space with the
/// input-window mean already subtracted from both sides; `features` holds
/// the n x P exogenous block row-major, one row per input step.
struct WindowPair {
    std::string item_id;
    int origin_index = 0;  // offset of the first input element in the series
    double local_mean = 0.0;
    std::vector<double> input;     // length n
    std::vector<double> targets;   // length m
    std::vector<double> features;  // n * P
};

struct TrainingSet {
    std::vector<WindowPair> train_pairs;       // grouped by item, origins ascending
    std::vector<WindowPair> validation_pairs;  // the last window of each item
    int input_window = 0;
    int output_window = 0;
    int feature_dim = 0;
    std::vector<std::string> excluded_items;   // too short for even one pair
};

namespace detail {

inline void fill_feature_row(std::vector<double>& row_out, std::size_t offset,
                             const Calendar& cal, DayOffset day, const FeatureLayout& layout,
                             int subcategory_index, int group_index) {
    double* row = row_out.data() + offset;
    row[0] = cal.holiday(day) ? 1.0 : 0.0;
    row[1 + cal.season(day)] = 1.0;
    row[1 + kNumSeasons + cal.day_of_week(day)] = 1.0;
    if (subcategory_index >= 0) row[1 + kNumSeasons + kNumWeekdays + subcategory_index] = 1.0;
    if (group_index >= 0)
        row[1 + kNumSeasons + kNumWeekdays + static_cast<int>(layout.subcategories.size()) +
            group_index] = 1.0;
}

inline int index_in(const std::vector<std::string>& haystack, const std::string& needle) {
    auto it = std::lower_bound(haystack.begin(), haystack.end(), needle);
    if (it == haystack.end() || *it != needle) return -1;
    return static_cast<int>(it - haystack.begin());
}

}  // namespace detail

/// Builds the input side of a window at `origin` (locally normalized sales
/// plus the feature block); targets stay empty. Used both by make_windows
/// and by the forecast path, where the output window is the future.
inline WindowPair make_input_window(const ScaledSeries& s, const ItemMeta& meta,
                                    const Calendar& cal, int n, const FeatureLayout& layout,
                                    int origin, const std::string& group_label = "") {
    if (n < 1) throw std::invalid_argument("make_input_window: need n >= 1");
    if (origin < 0 || origin + n > static_cast<int>(s.scaled_values.size()))
        throw std::invalid_argument("make_input_window: window out of range");
    const int sub_index = detail::index_in(layout.subcategories, meta.subcategory_id);
    int group_index = -1;
    if (!layout.group_labels.empty()) {
        group_index = detail::index_in(layout.group_labels, group_label);
        if (group_index < 0)
            throw std::invalid_argument("make_input_window: group label '" + group_label +
                                        "' not in feature layout");
    }
    const int p = layout.dim();
    WindowPair pair;
    pair.item_id = s.item_id;
    pair.origin_index = origin;
    const auto uo = static_cast<std::size_t>(origin);
    double local_mean = 0.0;
    for (int j = 0; j < n; ++j) local_mean += s.scaled_values[uo + static_cast<std::size_t>(j)];
    local_mean /= static_cast<double>(n);
    pair.local_mean = local_mean;
    pair.input.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        pair.input[static_cast<std::size_t>(j)] =
            s.scaled_values[uo + static_cast<std::size_t>(j)] - local_mean;
    pair.features.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(p), 0.0);
    for (int j = 0; j < n; ++j) {
        const DayOffset day = s.start_day + origin + j;
        detail::fill_feature_row(pair.features,
                                 static_cast<std::size_t>(j) * static_cast<std::size_t>(p), cal,
                                 day, layout, sub_index, group_index);
    }
    return pair;
}

/// Stride-1 moving windows over one scaled series. A series of length K
/// yields K-n-m training pairs plus one reserved validation pair (the last
/// window). Returns false when K < n+m+1 and the series must be skipped.
inline bool make_windows(const ScaledSeries& s, const ItemMeta& meta, const Calendar& cal,
                         int n, int m, const FeatureLayout& layout, TrainingSet& out,
                         const std::string& group_label = "") {
    if (n < 1 || m < 1) throw std::invalid_argument("make_windows: need n >= 1 and m >= 1");
    const auto k = static_cast<int>(s.scaled_values.size());
    if (k < n + m + 1) {
        out.excluded_items.push_back(s.item_id);
        return false;
    }
    const int last_origin = k - n - m;
    for (int origin = 0; origin <= last_origin; ++origin) {
        WindowPair pair = make_input_window(s, meta, cal, n, layout, origin, group_label);
        pair.targets.resize(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j)
            pair.targets[static_cast<std::size_t>(j)] =
                s.scaled_values[static_cast<std::size_t>(origin + n + j)] - pair.local_mean;
        if (origin == last_origin)
            out.validation_pairs.push_back(std::move(pair));
        else
            out.train_pairs.push_back(std::move(pair));
    }
    out.input_window = n;
    out.output_window = m;
    out.feature_dim = layout.dim();
    return true;
}

/// Inverse of the forward transforms, in reverse order: add back the local
/// input-window mean, then multiply by the item's scale factor. Clamping at
/// zero (and optional integer rounding) is for reported forecasts; metric
/// unit tests run unclamped.
inline std::vector<double> postprocess_forecast(const std::vector<double>& raw,
                                                double local_mean, double scale_factor,
                                                bool clamp, bool round_to_int = false) {
    if (scale_factor < 1.0)
        throw std::invalid_argument("postprocess_forecast: scale_factor must be >= 1");
    std::vector<double> out(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) {
        double v = (raw[j] + local_mean) * scale_factor;
        if (clamp) v = std::max(0.0, v);
        if (round_to_int) v = std::round(v);
        out[j] = v;
    }
    return out;
}

/// Debug dump: item, origin, local_mean, input..., target..., features...
inline void write_training_csv(const TrainingSet& ts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write training dump: " + path);
    out << "item_id,origin,split,local_mean";
    for (int j = 0; j < ts.input_window; ++j) out << ",x" << j;
    for (int j = 0; j < ts.output_window; ++j) out << ",y" << j;
    for (int j = 0; j < ts.input_window * ts.feature_dim; ++j) out << ",f" << j;
    out << '\n';
    auto dump = [&](const WindowPair& p, const char* split) {
        out << p.item_id << ',' << p.origin_index << ',' << split << ','
            << detail::format_double(p.local_mean);
        for (double v : p.input) out << ',' << detail::format_double(v);
        for (double v : p.targets) out << ',' << detail::format_double(v);
        for (double v : p.features) out << ',' << detail::format_double(v);
        out << '\n';
    };
    for (const auto& p : ts.train_pairs) dump(p, "train");
    for (const auto& p : ts.validation_pairs) dump(p, "validation");
}

}  // namespace demandcast
