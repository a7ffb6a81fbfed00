#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "demandcast/series.hpp"

namespace demandcast {

/// Clustering feature vector: two business metrics plus seven series-shape
/// statistics. Field order matches feature_names()/as_array().
struct TsFeatureVector {
    double sales_quantile = 0.0;
    double zero_sales_percentage = 0.0;
    double trend_strength = 0.0;
    double spikiness = 0.0;
    double linearity = 0.0;
    double curvature = 0.0;
    double acf1_residuals = 0.0;
    double acf1_series = 0.0;
    double spectral_entropy = 1.0;

    static constexpr int kDim = 9;

    std::array<double, kDim> as_array() const {
        return {sales_quantile, zero_sales_percentage, trend_strength,
                spikiness,      linearity,             curvature,
                acf1_residuals, acf1_series,           spectral_entropy};
    }

    static std::array<const char*, kDim> feature_names() {
        return {"sales_quantile", "zero_sales_pct", "trend_strength",
                "spikiness",      "linearity",      "curvature",
                "acf1_residuals", "acf1_series",    "spectral_entropy"};
    }
};

namespace detail {

inline double mean_of(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample variance (n-1 denominator); 0 for fewer than two points.
inline double variance_of(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    const double mu = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    return ss / static_cast<double>(n - 1);
}

/// Centered moving average with the window shrunk at the edges.
inline std::vector<double> moving_average_trend(const std::vector<double>& x, int window = 7) {
    const int n = static_cast<int>(x.size());
    const int half = window / 2;
    std::vector<double> trend(x.size(), 0.0);
    for (int t = 0; t < n; ++t) {
        const int lo = std::max(0, t - half);
        const int hi = std::min(n - 1, t + half);
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) sum += x[static_cast<std::size_t>(j)];
        trend[static_cast<std::size_t>(t)] = sum / static_cast<double>(hi - lo + 1);
    }
    return trend;
}

inline double acf1(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    const double mu = mean_of(x);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        den += (x[t] - mu) * (x[t] - mu);
        if (t + 1 < n) num += (x[t] - mu) * (x[t + 1] - mu);
    }
    return den > 0.0 ? num / den : 0.0;
}

/// Shannon entropy of the normalized periodogram over Fourier frequencies
/// 1..floor(n/2), scaled into [0,1]. Flat (constant) input maps to 1.
inline double spectral_entropy(const std::vector<double>& x) {
    const std::size_t n = x.size();
    const std::size_t n_freq = n / 2;
    if (n_freq < 2) return 1.0;
    const double mu = mean_of(x);
    std::vector<double> power(n_freq, 0.0);
    double total = 0.0;
    for (std::size_t k = 1; k <= n_freq; ++k) {
        double re = 0.0, im = 0.0;
        const double w = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t) {
            const double centered = x[t] - mu;
            re += centered * std::cos(w * static_cast<double>(t));
            im += centered * std::sin(w * static_cast<double>(t));
        }
        power[k - 1] = re * re + im * im;
        total += power[k - 1];
    }
    if (total <= 0.0) return 1.0;
    double entropy = 0.0;
    for (double p : power) {
        if (p <= 0.0) continue;
        const double q = p / total;
        entropy -= q * std::log(q);
    }
    return entropy / std::log(static_cast<double>(n_freq));
}

/// Variance of the leave-one-out variances of the remainder; O(n) via
/// running-sum identities.
inline double spikiness_of(const std::vector<double>& r) {
    const std::size_t n = r.size();
    if (n < 3) return 0.0;
    const double sum = std::accumulate(r.begin(), r.end(), 0.0);
    double sumsq = 0.0;
    for (double v : r) sumsq += v * v;
    std::vector<double> loo(n, 0.0);
    const double m = static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        const double s = sum - r[j];
        const double q = sumsq - r[j] * r[j];
        loo[j] = (q - s * s / m) / (m - 1.0);
    }
    return variance_of(loo);
}

/// Coefficients of the trend component regressed on an orthonormal
/// polynomial basis in time (degree 1 and 2).
inline std::pair<double, double> poly_coefficients(const std::vector<double>& trend) {
    const std::size_t n = trend.size();
    if (n < 3) return {0.0, 0.0};
    std::vector<double> p1(n), p2(n);
    const double tbar = (static_cast<double>(n) - 1.0) / 2.0;
    double norm1 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        p1[t] = static_cast<double>(t) - tbar;
        norm1 += p1[t] * p1[t];
    }
    norm1 = std::sqrt(norm1);
    for (auto& v : p1) v /= norm1;

    // Gram-Schmidt t^2 against the constant and linear directions.
    double mean_t2 = 0.0, proj1 = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean_t2 += static_cast<double>(t) * static_cast<double>(t);
    mean_t2 /= static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t)
        proj1 += static_cast<double>(t) * static_cast<double>(t) * p1[t];
    double norm2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        p2[t] = static_cast<double>(t) * static_cast<double>(t) - mean_t2 - proj1 * p1[t];
        norm2 += p2[t] * p2[t];
    }
    norm2 = std::sqrt(norm2);
    if (norm2 <= 0.0) return {0.0, 0.0};
    for (auto& v : p2) v /= norm2;

    double beta1 = 0.0, beta2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        beta1 += trend[t] * p1[t];
        beta2 += trend[t] * p2[t];
    }
    return {beta1, beta2};
}

}  // namespace detail

/// Computes the series-shape features of a gap-free series. sales_quantile
/// is a set-level metric and is passed through by the caller (cluster_items
/// supplies the real value). Requires no missing values; intended for
/// series of length >= 14.
inline TsFeatureVector extract_features(const SalesSeries& s, double sales_quantile = 0.5) {
    for (std::size_t t = 0; t < s.length(); ++t)
        if (s.missing[t])
            throw std::invalid_argument("extract_features: series '" + s.item_id +
                                        "' still has missing values (forward_fill first)");
    const auto& x = s.values;
    TsFeatureVector f;
    f.sales_quantile = sales_quantile;

    std::size_t zeros = 0;
    for (double v : x)
        if (v == 0.0) ++zeros;
    f.zero_sales_percentage =
        x.empty() ? 0.0 : static_cast<double>(zeros) / static_cast<double>(x.size());

    const double var_x = detail::variance_of(x);
    if (var_x <= 0.0) {
        // Constant series convention: no trend, no spikes, flat spectrum.
        f.trend_strength = 0.0;
        f.spikiness = 0.0;
        f.linearity = 0.0;
        f.curvature = 0.0;
        f.acf1_residuals = 0.0;
        f.acf1_series = 0.0;
        f.spectral_entropy = 1.0;
        return f;
    }

    const std::vector<double> trend = detail::moving_average_trend(x, 7);
    std::vector<double> remainder(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) remainder[t] = x[t] - trend[t];

    f.trend_strength = std::max(0.0, 1.0 - detail::variance_of(remainder) / var_x);
    f.spikiness = detail::spikiness_of(remainder);
    auto [lin, curv] = detail::poly_coefficients(trend);
    f.linearity = lin;
    f.curvature = curv;
    f.acf1_residuals = detail::acf1(remainder);
    f.acf1_series = detail::acf1(x);
    f.spectral_entropy = detail::spectral_entropy(x);
    return f;
}

}  // namespace demandcast
