#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "demandcast/dataset.hpp"
#include "demandcast/features.hpp"
#include "demandcast/kmeans.hpp"
#include "demandcast/series.hpp"

namespace demandcast {

/// Per-item group labels under one strategy ("domain" -> G1/G2/G3,
/// "cluster" -> C0..C{k-1}). `labels` is parallel to the SeriesSet items.
struct GroupAssignment {
    std::vector<std::string> labels;
    std::string strategy_tag;
    std::string warning;  // non-empty when a degenerate fallback fired

    std::vector<std::string> distinct_labels() const {
        std::vector<std::string> out = labels;
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
};

inline void write_groups_csv(const SeriesSet& set, const GroupAssignment& groups,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write group file: " + path);
    out << "item_id,strategy,label\n";
    for (std::size_t i = 0; i < set.size(); ++i)
        out << set.series[i].item_id << ',' << groups.strategy_tag << ',' << groups.labels[i]
            << '\n';
}

// ---------------------------------------------------------------------------
// Data-quality repair and imputation
// ---------------------------------------------------------------------------

/// Marks suspicious zeros as missing: a zero at t is treated as a data fault
/// when the minimum non-zero sale observed in the trailing lookback window
/// exceeds gamma (an item that reliably sells above gamma does not suddenly
/// sell nothing). Non-zero values and existing masks are never touched.
inline SalesSeries repair_fake_zeros(const SalesSeries& s, double gamma,
                                     int lookback_days = 183) {
    if (gamma <= 0.0) throw std::invalid_argument("repair_fake_zeros: gamma must be > 0");
    SalesSeries out = s;
    const auto k = static_cast<std::ptrdiff_t>(s.length());
    for (std::ptrdiff_t t = 0; t < k; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        if (s.missing[ut] || s.values[ut] != 0.0) continue;
        double min_nonzero = std::numeric_limits<double>::max();
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, t - lookback_days); j <= t; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            if (!s.missing[uj] && s.values[uj] > 0.0)
                min_nonzero = std::min(min_nonzero, s.values[uj]);
        }
        if (min_nonzero != std::numeric_limits<double>::max() && min_nonzero > gamma)
            out.missing[ut] = true;
    }
    return out;
}

/// Replaces every missing value with the most recent valid observation;
/// leading gaps are backfilled from the first valid one.
inline SalesSeries forward_fill(const SalesSeries& s) {
    SalesSeries out = s;
    std::ptrdiff_t first_valid = -1;
    for (std::size_t t = 0; t < s.length(); ++t)
        if (!s.missing[t]) {
            first_valid = static_cast<std::ptrdiff_t>(t);
            break;
        }
    if (first_valid < 0)
        throw std::runtime_error("forward_fill: series '" + s.item_id + "' is fully missing");

    double last = s.values[static_cast<std::size_t>(first_valid)];
    for (std::size_t t = 0; t < s.length(); ++t) {
        if (out.missing[t]) {
            out.values[t] = last;
            out.missing[t] = false;
        } else {
            last = out.values[t];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Business metrics and domain grouping
// ---------------------------------------------------------------------------

namespace detail {

/// Ascending rank quantiles in [0,1]; ties share their average rank.
inline std::vector<double> ascending_quantiles(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<double> q(n, 0.5);
    if (n < 2) return q;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
        for (std::size_t r = i; r <= j; ++r)
            q[order[r]] = avg_rank / static_cast<double>(n - 1);
        i = j + 1;
    }
    return q;
}

}  // namespace detail

/// Writes sales_quantile (ascending in total sales) and zero_sales_pct into
/// each item's metadata. Masked entries are ignored.
inline void annotate_business_metrics(SeriesSet& set) {
    std::vector<double> totals(set.size(), 0.0);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& s = set.series[i];
        double total = 0.0;
        std::size_t zeros = 0, observed = 0;
        for (std::size_t t = 0; t < s.length(); ++t) {
            if (s.missing[t]) continue;
            ++observed;
            total += s.values[t];
            if (s.values[t] == 0.0) ++zeros;
        }
        totals[i] = total;
        set.meta[i].zero_sales_pct =
            observed > 0 ? static_cast<double>(zeros) / static_cast<double>(observed) : 0.0;
    }
    const auto q = detail::ascending_quantiles(totals);
    for (std::size_t i = 0; i < set.size(); ++i) set.meta[i].sales_quantile = q[i];
}

struct DomainGroupingOptions {
    double lower = 1.0 / 3.0;
    double upper = 2.0 / 3.0;
    /// Default reads quantiles so that G1 is the head segment (top sellers
    /// with few zero days). The inverted convention mirrors a literal
    /// low-quantile reading and is kept selectable.
    bool head_items_high_quantile = true;
};

/// Partitions items into G1 (high sales, low sparsity), G2 (low sales, high
/// sparsity) and the G3 remainder. Both conditions are strict, so boundary
/// ties land in G3.
inline GroupAssignment domain_grouping(const SeriesSet& set,
                                       const DomainGroupingOptions& opt = {}) {
    if (set.size() < 3) throw std::invalid_argument("domain_grouping: need n >= 3");
    std::vector<double> totals(set.size(), 0.0), zero_pcts(set.size(), 0.0);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& s = set.series[i];
        double total = 0.0;
        std::size_t zeros = 0, observed = 0;
        for (std::size_t t = 0; t < s.length(); ++t) {
            if (s.missing[t]) continue;
            ++observed;
            total += s.values[t];
            if (s.values[t] == 0.0) ++zeros;
        }
        totals[i] = total;
        zero_pcts[i] = observed > 0 ? static_cast<double>(zeros) / static_cast<double>(observed)
                                    : 0.0;
    }
    auto sales_q = detail::ascending_quantiles(totals);
    auto zero_q = detail::ascending_quantiles(zero_pcts);

    GroupAssignment out;
    out.strategy_tag = "domain";
    out.labels.resize(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        double sq = sales_q[i], zq = zero_q[i];
        if (!opt.head_items_high_quantile) {
            sq = 1.0 - sq;
            zq = 1.0 - zq;
        }
        if (sq > opt.upper && zq < opt.lower)
            out.labels[i] = "G1";
        else if (sq < opt.lower && zq > opt.upper)
            out.labels[i] = "G2";
        else
            out.labels[i] = "G3";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature clustering
// ---------------------------------------------------------------------------

struct ClusterOptions {
    int k_min = 2;
    int k_max = 5;
    std::uint64_t rng_seed = 1;
    int restarts = 25;
    int max_iter = 300;
};

struct ClusterSelection {
    GroupAssignment groups;
    int selected_k = 1;
    std::vector<std::pair<int, double>> silhouette_by_k;
};

/// K-means over standardized feature vectors, with the cluster count picked
/// by mean silhouette over [k_min, k_max]. Items are canonically ordered by
/// item_id internally, so the labels do not depend on input order.
inline ClusterSelection cluster_items(const SeriesSet& set, const ClusterOptions& opt = {}) {
    const std::size_t n = set.size();
    if (opt.k_min < 2 || opt.k_max < opt.k_min)
        throw std::invalid_argument("cluster_items: need 2 <= k_min <= k_max");

    std::vector<double> totals(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        totals[i] = std::accumulate(set.series[i].values.begin(), set.series[i].values.end(), 0.0);
    const auto sales_q = detail::ascending_quantiles(totals);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return set.series[a].item_id < set.series[b].item_id;
    });

    // Feature matrix in canonical order, standardized per dimension.
    const int dim = TsFeatureVector::kDim;
    std::vector<std::vector<double>> feats(n, std::vector<double>(static_cast<std::size_t>(dim)));
    for (std::size_t r = 0; r < n; ++r) {
        const auto i = order[r];
        const auto arr = extract_features(set.series[i], sales_q[i]).as_array();
        std::copy(arr.begin(), arr.end(), feats[r].begin());
    }
    bool any_varying = false;
    for (int j = 0; j < dim; ++j) {
        double mean = 0.0;
        for (const auto& f : feats) mean += f[static_cast<std::size_t>(j)];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& f : feats) {
            const double d = f[static_cast<std::size_t>(j)] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var);
        for (auto& f : feats)
            f[static_cast<std::size_t>(j)] = sd > 0.0 ? (f[static_cast<std::size_t>(j)] - mean) / sd : 0.0;
        if (sd > 0.0) any_varying = true;
    }

    ClusterSelection sel;
    sel.groups.strategy_tag = "cluster";
    sel.groups.labels.assign(n, "C0");
    if (!any_varying) {
        sel.groups.warning = "degenerate feature matrix (zero variance); single cluster";
        sel.selected_k = 1;
        return sel;
    }

    auto choice = select_k_by_silhouette(feats, opt.k_min, opt.k_max,
                                         derive_seed(opt.rng_seed, 0xc1a57e12ULL), opt.restarts,
                                         opt.max_iter);
    sel.silhouette_by_k = choice.silhouette_by_k;
    if (choice.silhouette_by_k.empty()) {
        sel.groups.warning = "no feasible k in range; single cluster";
        sel.selected_k = 1;
        return sel;
    }
    sel.selected_k = choice.k;
    for (std::size_t r = 0; r < n; ++r)
        sel.groups.labels[order[r]] = "C" + std::to_string(choice.result.labels[r]);
    return sel;
}

}  // namespace demandcast
