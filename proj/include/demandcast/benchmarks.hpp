#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace demandcast {

/// Univariate baseline families. ses/holt cover the simplified exponential
/// smoothing substitutes (holt doubles as Holt-Winters when seasonal); ar is
/// the least-squares AR(p) stand-in for ARIMA.
enum class BenchmarkFamily { naive, snaive, ewma, ses, holt, ar };

inline const char* to_string(BenchmarkFamily f) {
    switch (f) {
        case BenchmarkFamily::naive: return "naive";
        case BenchmarkFamily::snaive: return "snaive";
        case BenchmarkFamily::ewma: return "ewma";
        case BenchmarkFamily::ses: return "ses";
        case BenchmarkFamily::holt: return "holt";
        case BenchmarkFamily::ar: return "ar";
    }
    return "?";
}

/// Every forecast equals the last observation.
inline std::vector<double> forecast_naive(const std::vector<double>& x, int horizon) {
    if (x.empty()) throw std::invalid_argument("forecast_naive: empty series");
    return std::vector<double>(static_cast<std::size_t>(horizon), x.back());
}

/// Forecast t repeats the observation one period back:
/// F_t = x[K - period + ((t-1) mod period)]. period=1 reduces to naive.
inline std::vector<double> forecast_snaive(const std::vector<double>& x, int horizon,
                                           int period = 7) {
    if (period < 1) throw std::invalid_argument("forecast_snaive: period must be >= 1");
    if (static_cast<int>(x.size()) < period)
        throw std::invalid_argument("forecast_snaive: series shorter than one period");
    std::vector<double> out(static_cast<std::size_t>(horizon));
    const std::size_t base = x.size() - static_cast<std::size_t>(period);
    for (int t = 0; t < horizon; ++t)
        out[static_cast<std::size_t>(t)] = x[base + static_cast<std::size_t>(t % period)];
    return out;
}

namespace detail {

/// l_0 = x_0, l_t = alpha x_t + (1-alpha) l_{t-1}. Returns the final level;
/// when sse_out is given, accumulates one-step squared errors over the last
/// eval_window in-sample points (0 = all).
inline double ewma_level(const std::vector<double>& x, double alpha, int eval_window = 0,
                         double* sse_out = nullptr) {
    double level = x[0];
    double sse = 0.0;
    const std::size_t first_scored =
        eval_window > 0 && static_cast<std::size_t>(eval_window) < x.size() - 1
            ? x.size() - static_cast<std::size_t>(eval_window)
            : 1;
    for (std::size_t t = 1; t < x.size(); ++t) {
        if (t >= first_scored) {
            const double e = x[t] - level;
            sse += e * e;
        }
        level = alpha * x[t] + (1.0 - alpha) * level;
    }
    if (sse_out) *sse_out = sse;
    return level;
}

inline double grid_fit_alpha(const std::vector<double>& x, int eval_window) {
    double best_alpha = 0.01, best_sse = std::numeric_limits<double>::max();
    for (int step = 1; step <= 99; ++step) {
        const double alpha = 0.01 * step;
        double sse = 0.0;
        ewma_level(x, alpha, eval_window, &sse);
        if (sse < best_sse) {
            best_sse = sse;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

}  // namespace detail

/// Flat forecast at the exponentially weighted level. alpha <= 0 requests a
/// grid fit (0.01 steps) scored on the last eval_window one-step errors.
inline std::vector<double> forecast_ewma(const std::vector<double>& x, int horizon,
                                         double alpha = 0.0, int eval_window = 10) {
    if (x.empty()) throw std::invalid_argument("forecast_ewma: empty series");
    if (alpha >= 1.0) throw std::invalid_argument("forecast_ewma: alpha must lie in (0,1)");
    if (alpha <= 0.0) alpha = x.size() > 1 ? detail::grid_fit_alpha(x, eval_window) : 0.5;
    const double level = detail::ewma_level(x, alpha);
    return std::vector<double>(static_cast<std::size_t>(horizon), level);
}

/// Simple exponential smoothing: same recursion as EWMA but with alpha
/// fitted on the full in-sample one-step error.
inline std::vector<double> forecast_ses(const std::vector<double>& x, int horizon,
                                        double alpha = 0.0) {
    if (x.empty()) throw std::invalid_argument("forecast_ses: empty series");
    if (alpha <= 0.0) alpha = x.size() > 1 ? detail::grid_fit_alpha(x, 0) : 0.5;
    const double level = detail::ewma_level(x, alpha);
    return std::vector<double>(static_cast<std::size_t>(horizon), level);
}

namespace detail {

struct HoltFit {
    double alpha = 0.5, beta = 0.1, gamma = 0.1;
    double level = 0.0, trend = 0.0;
    std::vector<double> seasonal;  // empty when non-seasonal
    double sse = std::numeric_limits<double>::max();
};

/// Additive Holt; returns final state and in-sample one-step SSE.
inline HoltFit holt_run(const std::vector<double>& x, double alpha, double beta) {
    HoltFit fit;
    fit.alpha = alpha;
    fit.beta = beta;
    double level = x[0];
    double trend = x.size() > 1 ? x[1] - x[0] : 0.0;
    double sse = 0.0;
    for (std::size_t t = 1; t < x.size(); ++t) {
        const double pred = level + trend;
        const double e = x[t] - pred;
        sse += e * e;
        const double new_level = alpha * x[t] + (1.0 - alpha) * (level + trend);
        trend = beta * (new_level - level) + (1.0 - beta) * trend;
        level = new_level;
    }
    fit.level = level;
    fit.trend = trend;
    fit.sse = sse;
    return fit;
}

/// Additive Holt-Winters, seasonal period L. Seasonal update uses the
/// previous level/trend: s_t = gamma (x_t - l_{t-1} - b_{t-1}) + (1-gamma) s_{t-L}.
inline HoltFit holt_winters_run(const std::vector<double>& x, double alpha, double beta,
                                double gamma, int period) {
    HoltFit fit;
    fit.alpha = alpha;
    fit.beta = beta;
    fit.gamma = gamma;
    const auto pl = static_cast<std::size_t>(period);
    double first_mean = 0.0, second_mean = 0.0;
    for (std::size_t j = 0; j < pl; ++j) first_mean += x[j];
    first_mean /= static_cast<double>(period);
    for (std::size_t j = pl; j < 2 * pl; ++j) second_mean += x[j];
    second_mean /= static_cast<double>(period);

    double level = first_mean;
    double trend = (second_mean - first_mean) / static_cast<double>(period);
    std::vector<double> seasonal(x.size() + pl, 0.0);  // seasonal[t] pairs with x[t]
    for (std::size_t j = 0; j < pl; ++j) seasonal[j] = x[j] - first_mean;

    double sse = 0.0;
    for (std::size_t t = pl; t < x.size(); ++t) {
        const double s_prev = seasonal[t - pl];
        const double pred = level + trend + s_prev;
        const double e = x[t] - pred;
        sse += e * e;
        const double new_level = alpha * (x[t] - s_prev) + (1.0 - alpha) * (level + trend);
        seasonal[t] = gamma * (x[t] - level - trend) + (1.0 - gamma) * s_prev;
        trend = beta * (new_level - level) + (1.0 - beta) * trend;
        level = new_level;
    }
    // Keep the freshest seasonal estimate per phase; forecast step h reads
    // entry (h-1) mod period.
    fit.seasonal.assign(pl, 0.0);
    for (std::size_t j = 0; j < pl; ++j) fit.seasonal[j] = seasonal[x.size() - pl + j];
    fit.level = level;
    fit.trend = trend;
    fit.sse = sse;
    return fit;
}

}  // namespace detail

/// Simplified additive exponential smoothing with trend: Holt when
/// non-seasonal, additive Holt-Winters (default weekly period) when
/// seasonal. Parameters are grid-fit on in-sample one-step error. Series
/// too short for the seasonal fit fall back to ses and report a warning.
inline std::vector<double> forecast_ets(const std::vector<double>& x, int horizon,
                                        bool seasonal, int period = 7,
                                        std::string* warning = nullptr) {
    if (x.empty()) throw std::invalid_argument("forecast_ets: empty series");
    if (seasonal && static_cast<int>(x.size()) < 2 * period) {
        if (warning) *warning = "series too short for seasonal fit; fell back to ses";
        return forecast_ses(x, horizon);
    }
    if (!seasonal && x.size() < 3) return forecast_ses(x, horizon);

    detail::HoltFit best;
    if (seasonal) {
        for (double alpha = 0.02; alpha < 1.0; alpha += 0.08)
            for (double beta = 0.02; beta < 1.0; beta += 0.08)
                for (double gamma = 0.02; gamma < 1.0; gamma += 0.08) {
                    auto fit = detail::holt_winters_run(x, alpha, beta, gamma, period);
                    if (fit.sse < best.sse) best = std::move(fit);
                }
    } else {
        for (double alpha = 0.02; alpha < 1.0; alpha += 0.02)
            for (double beta = 0.02; beta < 1.0; beta += 0.02) {
                auto fit = detail::holt_run(x, alpha, beta);
                if (fit.sse < best.sse) best = fit;
            }
    }
    std::vector<double> out(static_cast<std::size_t>(horizon));
    for (int h = 1; h <= horizon; ++h) {
        double value = best.level + static_cast<double>(h) * best.trend;
        if (seasonal) {
            const auto pl = static_cast<std::size_t>(period);
            value += best.seasonal[(static_cast<std::size_t>(h - 1)) % pl];
        }
        out[static_cast<std::size_t>(h - 1)] = value;
    }
    return out;
}

struct ArFit {
    std::vector<double> phi;  // phi[0] multiplies lag 1
    double mean = 0.0;
    int order = 0;
    double aicc = std::numeric_limits<double>::max();
};

/// AR(p) by least squares on the mean-centered series; p picked by
/// corrected AIC over 1..p_max. Near-singular normal equations fall back to
/// a small ridge.
inline ArFit fit_ar(const std::vector<double>& x, int p_max = 7) {
    const auto k = static_cast<int>(x.size());
    if (k < 4) throw std::invalid_argument("fit_ar: series too short");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(k);
    std::vector<double> z(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) z[t] = x[t] - mean;

    p_max = std::min(p_max, (k - 3) / 2);
    p_max = std::max(p_max, 1);

    std::vector<double> best_phi;
    double best_aicc = std::numeric_limits<double>::max();
    for (int p = 1; p <= p_max; ++p) {
        const int n_eff = k - p;
        if (n_eff < p + 3) break;
        // Normal equations A phi = rhs.
        std::vector<double> a(static_cast<std::size_t>(p) * static_cast<std::size_t>(p), 0.0);
        std::vector<double> rhs(static_cast<std::size_t>(p), 0.0);
        for (int t = p; t < k; ++t)
            for (int i = 0; i < p; ++i) {
                rhs[static_cast<std::size_t>(i)] +=
                    z[static_cast<std::size_t>(t - 1 - i)] * z[static_cast<std::size_t>(t)];
                for (int j = 0; j < p; ++j)
                    a[static_cast<std::size_t>(i * p + j)] +=
                        z[static_cast<std::size_t>(t - 1 - i)] * z[static_cast<std::size_t>(t - 1 - j)];
            }
        // Gaussian elimination with partial pivoting; ridge retry if singular.
        auto solve = [&](double ridge) -> std::vector<double> {
            std::vector<double> m_a = a;
            std::vector<double> m_rhs = rhs;
            for (int i = 0; i < p; ++i) m_a[static_cast<std::size_t>(i * p + i)] += ridge;
            for (int col = 0; col < p; ++col) {
                int pivot = col;
                for (int r = col + 1; r < p; ++r)
                    if (std::abs(m_a[static_cast<std::size_t>(r * p + col)]) >
                        std::abs(m_a[static_cast<std::size_t>(pivot * p + col)]))
                        pivot = r;
                if (std::abs(m_a[static_cast<std::size_t>(pivot * p + col)]) < 1e-12) return {};
                if (pivot != col) {
                    for (int cc = 0; cc < p; ++cc)
                        std::swap(m_a[static_cast<std::size_t>(col * p + cc)],
                                  m_a[static_cast<std::size_t>(pivot * p + cc)]);
                    std::swap(m_rhs[static_cast<std::size_t>(col)], m_rhs[static_cast<std::size_t>(pivot)]);
                }
                for (int r = col + 1; r < p; ++r) {
                    const double factor = m_a[static_cast<std::size_t>(r * p + col)] /
                                          m_a[static_cast<std::size_t>(col * p + col)];
                    for (int cc = col; cc < p; ++cc)
                        m_a[static_cast<std::size_t>(r * p + cc)] -=
                            factor * m_a[static_cast<std::size_t>(col * p + cc)];
                    m_rhs[static_cast<std::size_t>(r)] -= factor * m_rhs[static_cast<std::size_t>(col)];
                }
            }
            std::vector<double> phi(static_cast<std::size_t>(p));
            for (int r = p - 1; r >= 0; --r) {
                double acc = m_rhs[static_cast<std::size_t>(r)];
                for (int cc = r + 1; cc < p; ++cc)
                    acc -= m_a[static_cast<std::size_t>(r * p + cc)] * phi[static_cast<std::size_t>(cc)];
                phi[static_cast<std::size_t>(r)] = acc / m_a[static_cast<std::size_t>(r * p + r)];
            }
            return phi;
        };
        auto phi = solve(0.0);
        if (phi.empty()) phi = solve(1e-6);
        if (phi.empty()) continue;

        double rss = 0.0;
        for (int t = p; t < k; ++t) {
            double pred = 0.0;
            for (int i = 0; i < p; ++i)
                pred += phi[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(t - 1 - i)];
            const double e = z[static_cast<std::size_t>(t)] - pred;
            rss += e * e;
        }
        const double n = static_cast<double>(n_eff);
        const double kk = static_cast<double>(p + 1);
        const double sigma2 = std::max(rss / n, 1e-12);
        const double aicc = n * std::log(sigma2) + 2.0 * kk + 2.0 * kk * (kk + 1.0) / (n - kk - 1.0);
        if (aicc < best_aicc) {
            best_aicc = aicc;
            best_phi = std::move(phi);
        }
    }
    ArFit fit;
    fit.mean = mean;
    fit.phi = std::move(best_phi);
    fit.order = static_cast<int>(fit.phi.size());
    fit.aicc = best_aicc;
    return fit;
}

/// Iterated multi-step AR forecast; falls back to naive when no order fits.
inline std::vector<double> forecast_ar(const std::vector<double>& x, int horizon, int p_max = 7) {
    const auto fit = fit_ar(x, p_max);
    if (fit.phi.empty()) return forecast_naive(x, horizon);

    std::vector<double> extended(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) extended[t] = x[t] - fit.mean;
    extended.reserve(x.size() + static_cast<std::size_t>(horizon));
    for (int h = 0; h < horizon; ++h) {
        double pred = 0.0;
        for (int i = 0; i < fit.order; ++i)
            pred += fit.phi[static_cast<std::size_t>(i)] *
                    extended[extended.size() - 1 - static_cast<std::size_t>(i)];
        extended.push_back(pred);
    }
    std::vector<double> out(static_cast<std::size_t>(horizon));
    for (int h = 0; h < horizon; ++h)
        out[static_cast<std::size_t>(h)] = extended[x.size() + static_cast<std::size_t>(h)] + fit.mean;
    return out;
}

/// One fitted baseline: family tag, per-item parameters, forecasts.
struct BenchmarkFit {
    BenchmarkFamily family = BenchmarkFamily::naive;
    std::string model_tag;
    std::vector<double> parameters;
    std::vector<double> forecasts;
};

}  // namespace demandcast
