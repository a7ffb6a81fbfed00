#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "demandcast/rng.hpp"

namespace demandcast {

struct SearchDimension {
    std::string name;
    double min_value = 0.0;
    double max_value = 1.0;
    bool integer = false;
    bool log_scale = false;
};

struct SearchSpace {
    std::vector<SearchDimension> dims;

    /// The six LSTM hyperparameter dimensions. The learning-rate dimension
    /// is dropped for optimizers that take no rate (COCOB).
    static SearchSpace lstm_grid(bool include_learning_rate) {
        SearchSpace space;
        space.dims.push_back({"cell_dim", 50, 100, true, false});
        space.dims.push_back({"minibatch_size", 60, 1500, true, false});
        if (include_learning_rate)
            space.dims.push_back({"learning_rate", 1e-6, 1e-3, false, true});
        space.dims.push_back({"max_epochs", 5, 20, true, false});
        space.dims.push_back({"gaussian_noise_std", 1e-4, 8e-4, false, false});
        space.dims.push_back({"l2_weight", 1e-4, 8e-4, false, false});
        return space;
    }

    std::size_t size() const { return dims.size(); }

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < dims.size(); ++i)
            if (dims[i].name == name) return static_cast<int>(i);
        return -1;
    }

    std::vector<std::string> validate() const {
        std::vector<std::string> violations;
        for (const auto& d : dims) {
            if (!(d.min_value < d.max_value))
                violations.push_back(d.name + ": min must be < max");
            if (d.log_scale && d.min_value <= 0.0)
                violations.push_back(d.name + ": log-scale dimension needs min > 0");
        }
        return violations;
    }

    /// Natural units -> unit cube (log dims via their logarithm).
    std::vector<double> to_unit(const std::vector<double>& x) const {
        std::vector<double> u(dims.size());
        for (std::size_t i = 0; i < dims.size(); ++i) {
            const auto& d = dims[i];
            u[i] = d.log_scale ? (std::log(x[i]) - std::log(d.min_value)) /
                                     (std::log(d.max_value) - std::log(d.min_value))
                               : (x[i] - d.min_value) / (d.max_value - d.min_value);
        }
        return u;
    }

    /// Unit cube -> natural units, clipped to bounds, integers rounded.
    std::vector<double> from_unit(const std::vector<double>& u) const {
        std::vector<double> x(dims.size());
        for (std::size_t i = 0; i < dims.size(); ++i) {
            const auto& d = dims[i];
            const double v = std::clamp(u[i], 0.0, 1.0);
            double value = d.log_scale
                               ? std::exp(std::log(d.min_value) +
                                          v * (std::log(d.max_value) - std::log(d.min_value)))
                               : d.min_value + v * (d.max_value - d.min_value);
            if (d.integer) value = std::round(value);
            x[i] = std::clamp(value, d.min_value, d.max_value);
        }
        return x;
    }
};

struct Trial {
    std::vector<double> point;  // natural units as evaluated
    double objective = std::numeric_limits<double>::quiet_NaN();
    bool failed = false;
    double seconds = 0.0;
};

struct HpoResult {
    std::vector<Trial> history;
    std::size_t best_index = 0;

    const Trial& best() const { return history[best_index]; }
};

class HpoError : public std::runtime_error {
public:
    HpoError(const std::string& what, std::vector<Trial> history)
        : std::runtime_error(what), history(std::move(history)) {}
    std::vector<Trial> history;
};

// ---------------------------------------------------------------------------
// Gaussian-process surrogate (squared-exponential kernel, per-dim scales)
// ---------------------------------------------------------------------------

namespace detail {

class GaussianProcess {
public:
    /// Fits to unit-cube inputs / standardized targets with the given
    /// per-dim length scales and nugget noise.
    GaussianProcess(std::vector<std::vector<double>> x, std::vector<double> y,
                    std::vector<double> length_scales, double noise)
        : x_(std::move(x)), length_scales_(std::move(length_scales)), noise_(noise) {
        const std::size_t n = x_.size();
        y_mean_ = 0.0;
        for (double v : y) y_mean_ += v;
        y_mean_ /= static_cast<double>(n);
        double var = 0.0;
        for (double v : y) var += (v - y_mean_) * (v - y_mean_);
        y_sd_ = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 1.0;
        if (y_sd_ <= 0.0) y_sd_ = 1.0;
        y_.resize(n);
        for (std::size_t i = 0; i < n; ++i) y_[i] = (y[i] - y_mean_) / y_sd_;

        chol_.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                chol_[i * n + j] = kernel(x_[i], x_[j]) + (i == j ? noise_ : 0.0);
        factorize();
        alpha_ = solve(y_);
    }

    double log_marginal_likelihood() const {
        const std::size_t n = x_.size();
        double fit = 0.0;
        for (std::size_t i = 0; i < n; ++i) fit += y_[i] * alpha_[i];
        double logdet = 0.0;
        for (std::size_t i = 0; i < n; ++i) logdet += std::log(chol_[i * n + i]);
        return -0.5 * fit - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
    }

    /// Posterior mean (de-standardized) and latent variance at u.
    std::pair<double, double> predict(const std::vector<double>& u) const {
        const std::size_t n = x_.size();
        std::vector<double> k(n);
        for (std::size_t i = 0; i < n; ++i) k[i] = kernel(u, x_[i]);
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += k[i] * alpha_[i];
        auto v = solve_lower(k);
        double reduction = 0.0;
        for (double value : v) reduction += value * value;
        const double variance = std::max(0.0, 1.0 - reduction);
        return {y_mean_ + y_sd_ * mean, variance * y_sd_ * y_sd_};
    }

private:
    double kernel(const std::vector<double>& a, const std::vector<double>& b) const {
        double q = 0.0;
        for (std::size_t d = 0; d < length_scales_.size(); ++d) {
            const double diff = (a[d] - b[d]) / length_scales_[d];
            q += diff * diff;
        }
        return std::exp(-0.5 * q);
    }

    void factorize() {
        const std::size_t n = x_.size();
        for (std::size_t j = 0; j < n; ++j) {
            double diag = chol_[j * n + j];
            for (std::size_t k = 0; k < j; ++k) diag -= chol_[j * n + k] * chol_[j * n + k];
            if (diag <= 0.0) diag = 1e-12;
            chol_[j * n + j] = std::sqrt(diag);
            for (std::size_t i = j + 1; i < n; ++i) {
                double acc = chol_[i * n + j];
                for (std::size_t k = 0; k < j; ++k) acc -= chol_[i * n + k] * chol_[j * n + k];
                chol_[i * n + j] = acc / chol_[j * n + j];
            }
        }
    }

    std::vector<double> solve_lower(const std::vector<double>& rhs) const {
        const std::size_t n = x_.size();
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = rhs[i];
            for (std::size_t k = 0; k < i; ++k) acc -= chol_[i * n + k] * v[k];
            v[i] = acc / chol_[i * n + i];
        }
        return v;
    }

    std::vector<double> solve(const std::vector<double>& rhs) const {
        const std::size_t n = x_.size();
        auto v = solve_lower(rhs);
        std::vector<double> out(n);
        for (std::size_t ii = n; ii-- > 0;) {
            double acc = v[ii];
            for (std::size_t k = ii + 1; k < n; ++k) acc -= chol_[k * n + ii] * out[k];
            out[ii] = acc / chol_[ii * n + ii];
        }
        return out;
    }

    std::vector<std::vector<double>> x_;
    std::vector<double> y_;
    std::vector<double> length_scales_;
    double noise_;
    double y_mean_ = 0.0, y_sd_ = 1.0;
    std::vector<double> chol_;
    std::vector<double> alpha_;
};

/// Coordinate ascent over a log-spaced candidate grid, two sweeps; enough
/// resolution for an acquisition surrogate.
inline std::vector<double> fit_length_scales(const std::vector<std::vector<double>>& x,
                                             const std::vector<double>& y, double noise) {
    const std::size_t dim = x[0].size();
    static constexpr double kCandidates[] = {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0};
    std::vector<double> scales(dim, 0.5);
    double best_lml = GaussianProcess(x, y, scales, noise).log_marginal_likelihood();
    for (int sweep = 0; sweep < 2; ++sweep)
        for (std::size_t d = 0; d < dim; ++d)
            for (double candidate : kCandidates) {
                if (candidate == scales[d]) continue;
                auto trial = scales;
                trial[d] = candidate;
                const double lml = GaussianProcess(x, y, trial, noise).log_marginal_likelihood();
                if (lml > best_lml) {
                    best_lml = lml;
                    scales[d] = candidate;
                }
            }
    return scales;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

/// Expected improvement for minimization.
inline double expected_improvement(double mean, double variance, double best, double xi = 0.01) {
    const double sd = std::sqrt(std::max(variance, 0.0));
    const double improvement = best - mean - xi;
    if (sd < 1e-12) return std::max(improvement, 0.0);
    const double z = improvement / sd;
    return improvement * normal_cdf(z) + sd * normal_pdf(z);
}

/// Halton point with a seeded Cranley-Patterson rotation.
inline std::vector<double> halton_point(int index, std::size_t dim,
                                        const std::vector<double>& rotation) {
    static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
    std::vector<double> u(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        const int base = kPrimes[d % (sizeof(kPrimes) / sizeof(kPrimes[0]))];
        double f = 1.0, value = 0.0;
        int i = index + 1;
        while (i > 0) {
            f /= base;
            value += f * (i % base);
            i /= base;
        }
        u[d] = value + rotation[d];
        u[d] -= std::floor(u[d]);
    }
    return u;
}

}  // namespace detail

struct BayesOptions {
    int initial_trials = 5;
    int acquisition_candidates = 4096;
    double gp_noise = 1e-6;
    double xi = 0.01;
};

/// GP-EI Bayesian optimization (minimization). Seeded quasi-random start,
/// then one expected-improvement proposal per completed trial. Deterministic
/// for a fixed (space, objective, budget, seed).
inline HpoResult bayes_optimize(const SearchSpace& space,
                                const std::function<double(const std::vector<double>&)>& objective,
                                int budget, std::uint64_t seed, const BayesOptions& opt = {}) {
    if (budget < opt.initial_trials)
        throw std::invalid_argument("bayes_optimize: budget must be >= " +
                                    std::to_string(opt.initial_trials));
    auto violations = space.validate();
    if (!violations.empty())
        throw std::invalid_argument("bayes_optimize: invalid space: " + violations.front());

    const std::size_t dim = space.size();
    std::mt19937_64 rng(derive_seed(seed, 0xba7e5ULL));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> rotation(dim);
    for (auto& r : rotation) r = u01(rng);

    HpoResult result;
    auto evaluate = [&](const std::vector<double>& unit) {
        Trial trial;
        trial.point = space.from_unit(unit);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            trial.objective = objective(trial.point);
            trial.failed = !std::isfinite(trial.objective);
        } catch (const std::exception&) {
            trial.failed = true;
        }
        trial.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(std::move(trial));
    };

    for (int i = 0; i < opt.initial_trials && i < budget; ++i)
        evaluate(detail::halton_point(i, dim, rotation));

    while (static_cast<int>(result.history.size()) < budget) {
        // Conditioning set: completed trials in unit space.
        std::vector<std::vector<double>> x;
        std::vector<double> y;
        for (const auto& t : result.history)
            if (!t.failed) {
                x.push_back(space.to_unit(t.point));
                y.push_back(t.objective);
            }
        if (x.empty()) {
            // Nothing to model yet; keep quasi-random sampling.
            evaluate(detail::halton_point(static_cast<int>(result.history.size()), dim, rotation));
            continue;
        }
        const auto scales = detail::fit_length_scales(x, y, opt.gp_noise);
        detail::GaussianProcess gp(x, y, scales, opt.gp_noise);
        const double best = *std::min_element(y.begin(), y.end());

        std::vector<double> best_candidate(dim, 0.5);
        double best_ei = -1.0;
        for (int c = 0; c < opt.acquisition_candidates; ++c) {
            std::vector<double> candidate(dim);
            for (auto& v : candidate) v = u01(rng);
            auto [mean, variance] = gp.predict(candidate);
            const double ei = detail::expected_improvement(mean, variance, best, opt.xi);
            if (ei > best_ei) {
                best_ei = ei;
                best_candidate = candidate;
            }
        }
        evaluate(best_candidate);
    }

    bool any_ok = false;
    double best_objective = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < result.history.size(); ++i) {
        const auto& t = result.history[i];
        if (!t.failed && t.objective < best_objective) {
            best_objective = t.objective;
            result.best_index = i;
            any_ok = true;
        }
    }
    if (!any_ok) throw HpoError("bayes_optimize: all trials failed", std::move(result.history));
    return result;
}

/// Trial history export: trial,<dim names...>,objective,seconds.
inline void write_trials_csv(const SearchSpace& space, const HpoResult& result,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trials file: " + path);
    out << "trial";
    for (const auto& d : space.dims) out << ',' << d.name;
    out << ",objective,seconds\n";
    char buf[32];
    for (std::size_t i = 0; i < result.history.size(); ++i) {
        const auto& t = result.history[i];
        out << i;
        for (double v : t.point) {
            std::snprintf(buf, sizeof(buf), "%.10g", v);
            out << ',' << buf;
        }
        if (t.failed)
            out << ",failed";
        else {
            std::snprintf(buf, sizeof(buf), "%.10g", t.objective);
            out << ',' << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.3f", t.seconds);
        out << ',' << buf << '\n';
    }
}

}  // namespace demandcast
