#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace demandcast {

/// Bias-corrected Adam. State persists across minibatches within one
/// training trial.
class AdamState {
public:
    explicit AdamState(std::size_t dim, double beta1 = 0.9, double beta2 = 0.999,
                       double epsilon = 1e-8)
        : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(dim, 0.0), v_(dim, 0.0) {}

    void step(std::span<double> params, std::span<const double> grads, double lr) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw std::invalid_argument("adam_step: parameter/gradient size mismatch");
        ++step_count_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
        for (std::size_t i = 0; i < m_.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
            const double m_hat = m_[i] / bc1;
            const double v_hat = v_[i] / bc2;
            params[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon_);
        }
    }

    long step_count() const { return step_count_; }

private:
    double beta1_, beta2_, epsilon_;
    long step_count_ = 0;
    std::vector<double> m_, v_;
};

/// COCOB-Backprop: per-coordinate continuous coin betting. Takes no
/// learning rate by construction; the bet fraction adapts from the running
/// gradient-magnitude bound and accumulated reward.
class CocobState {
public:
    explicit CocobState(std::span<const double> initial_params, double alpha = 100.0,
                        double l_scale = 1e-8)
        : alpha_(alpha),
          initial_(initial_params.begin(), initial_params.end()),
          max_grad_(initial_params.size(), l_scale),
          grad_sum_(initial_params.size(), 0.0),
          abs_grad_sum_(initial_params.size(), 0.0),
          reward_(initial_params.size(), 0.0) {
        if (l_scale <= 0.0) throw std::invalid_argument("cocob: l_scale must be > 0");
    }

    void step(std::span<double> params, std::span<const double> grads) {
        if (params.size() != initial_.size() || grads.size() != initial_.size())
            throw std::invalid_argument("cocob_step: parameter/gradient size mismatch");
        for (std::size_t i = 0; i < initial_.size(); ++i) {
            const double g = grads[i];
            max_grad_[i] = std::max(max_grad_[i], std::abs(g));
            abs_grad_sum_[i] += std::abs(g);
            reward_[i] = std::max(reward_[i] - (params[i] - initial_[i]) * g, 0.0);
            grad_sum_[i] += g;
            const double denom =
                max_grad_[i] * std::max(abs_grad_sum_[i] + max_grad_[i], alpha_ * max_grad_[i]);
            params[i] = initial_[i] - grad_sum_[i] / denom * (max_grad_[i] + reward_[i]);
        }
    }

private:
    double alpha_;
    std::vector<double> initial_;
    std::vector<double> max_grad_;      // running bound on |g|
    std::vector<double> grad_sum_;      // cumulative gradients
    std::vector<double> abs_grad_sum_;  // cumulative |g|
    std::vector<double> reward_;        // wealth accumulated so far
};

/// Clips in place by global L2 norm; returns the pre-clip norm.
inline double clip_by_global_norm(std::span<double> grads, double max_norm) {
    double sq = 0.0;
    for (double g : grads) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (double& g : grads) g *= scale;
    }
    return norm;
}

}  // namespace demandcast
