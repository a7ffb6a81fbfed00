#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "demandcast/rng.hpp"

namespace demandcast {

struct KMeansResult {
    std::vector<int> labels;
    std::vector<std::vector<double>> centers;
    double inertia = 0.0;
    std::vector<double> inertia_trace;  // one entry per Lloyd iteration of the winning restart
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        d += diff * diff;
    }
    return d;
}

inline std::vector<std::vector<double>> kmeanspp_init(const std::vector<std::vector<double>>& data,
                                                      int k, std::mt19937_64& rng) {
    const std::size_t n = data.size();
    std::vector<std::vector<double>> centers;
    centers.reserve(static_cast<std::size_t>(k));
    centers.push_back(data[uniform_index(rng, n)]);
    std::vector<double> d2(n);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : centers) best = std::min(best, sq_dist(data[i], c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            // All remaining points coincide with existing centers.
            centers.push_back(data[uniform_index(rng, n)]);
            continue;
        }
        double target = u01(rng) * total;
        std::size_t pick = n - 1;
        double cum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cum += d2[i];
            if (cum >= target) {
                pick = i;
                break;
            }
        }
        centers.push_back(data[pick]);
    }
    return centers;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding, several restarts, convergence
/// when assignments stabilize. Restarts draw from derived seed streams and
/// the best inertia wins (ties to the lower restart index), so the result
/// is a deterministic function of (data, k, seed).
inline KMeansResult kmeans(const std::vector<std::vector<double>>& data, int k, std::uint64_t seed,
                           int restarts = 25, int max_iter = 300) {
    const std::size_t n = data.size();
    if (n == 0 || k < 1) throw std::invalid_argument("kmeans: need data and k >= 1");
    if (static_cast<std::size_t>(k) > n) throw std::invalid_argument("kmeans: k > n");
    const std::size_t dim = data[0].size();

    KMeansResult best;
    best.inertia = std::numeric_limits<double>::max();
    for (int restart = 0; restart < restarts; ++restart) {
        std::mt19937_64 rng(derive_seed(seed, 0x6d5a0000ULL + static_cast<std::uint64_t>(restart)));
        auto centers = detail::kmeanspp_init(data, k, rng);
        std::vector<int> labels(n, -1);
        std::vector<double> trace;
        for (int iter = 0; iter < max_iter; ++iter) {
            bool changed = false;
            double inertia = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                int arg = 0;
                double bestd = std::numeric_limits<double>::max();
                for (int c = 0; c < k; ++c) {
                    const double d = detail::sq_dist(data[i], centers[static_cast<std::size_t>(c)]);
                    if (d < bestd) {
                        bestd = d;
                        arg = c;
                    }
                }
                if (labels[i] != arg) {
                    labels[i] = arg;
                    changed = true;
                }
                inertia += bestd;
            }
            trace.push_back(inertia);
            if (!changed) break;
            std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                                  std::vector<double>(dim, 0.0));
            std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
            for (std::size_t i = 0; i < n; ++i) {
                auto c = static_cast<std::size_t>(labels[i]);
                ++counts[c];
                for (std::size_t j = 0; j < dim; ++j) sums[c][j] += data[i][j];
            }
            for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
                if (counts[c] == 0) continue;  // empty cluster keeps its old center
                for (std::size_t j = 0; j < dim; ++j)
                    centers[c][j] = sums[c][j] / static_cast<double>(counts[c]);
            }
        }
        const double inertia = trace.empty() ? 0.0 : trace.back();
        if (inertia < best.inertia) {
            best.labels = labels;
            best.centers = centers;
            best.inertia = inertia;
            best.inertia_trace = std::move(trace);
        }
    }
    return best;
}

/// Mean silhouette coefficient over all points. Points in singleton
/// clusters contribute 0 by convention. Result lies in [-1, 1].
inline double mean_silhouette(const std::vector<std::vector<double>>& data,
                              const std::vector<int>& labels, int k) {
    const std::size_t n = data.size();
    if (k < 2 || n < 2) throw std::invalid_argument("mean_silhouette: need k >= 2 and n >= 2");
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];

    double total = 0.0;
    std::vector<double> dist_to_cluster(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(dist_to_cluster.begin(), dist_to_cluster.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            dist_to_cluster[static_cast<std::size_t>(labels[j])] +=
                std::sqrt(detail::sq_dist(data[i], data[j]));
        }
        const auto own = static_cast<std::size_t>(labels[i]);
        if (counts[own] <= 1) continue;  // singleton: s(i) = 0
        const double a = dist_to_cluster[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::max();
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (c == own || counts[c] == 0) continue;
            b = std::min(b, dist_to_cluster[c] / static_cast<double>(counts[c]));
        }
        if (b == std::numeric_limits<double>::max()) continue;
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

struct KSelection {
    int k = 1;
    double silhouette = -1.0;
    KMeansResult result;
    std::vector<std::pair<int, double>> silhouette_by_k;
};

/// Runs kmeans for each k in [k_min, k_max] that the sample size supports
/// and keeps the k with the best mean silhouette.
inline KSelection select_k_by_silhouette(const std::vector<std::vector<double>>& data, int k_min,
                                         int k_max, std::uint64_t seed, int restarts = 25,
                                         int max_iter = 300) {
    KSelection sel;
    sel.silhouette = -2.0;
    for (int k = k_min; k <= k_max; ++k) {
        if (static_cast<std::size_t>(k) * 2 > data.size()) break;
        auto res = kmeans(data, k, derive_seed(seed, 0x5e1ec7ULL + static_cast<std::uint64_t>(k)),
                          restarts, max_iter);
        const double sil = mean_silhouette(data, res.labels, k);
        sel.silhouette_by_k.emplace_back(k, sil);
        if (sil > sel.silhouette) {
            sel.silhouette = sil;
            sel.k = k;
            sel.result = std::move(res);
        }
    }
    if (sel.silhouette_by_k.empty()) {
        sel.k = 1;
        sel.silhouette = -1.0;
        sel.result.labels.assign(data.size(), 0);
    }
    return sel;
}

}  // namespace demandcast
