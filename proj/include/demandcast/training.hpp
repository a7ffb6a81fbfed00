#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "demandcast/lstm.hpp"
#include "demandcast/optimizers.hpp"
#include "demandcast/rng.hpp"
#include "demandcast/windowing.hpp"

namespace demandcast {

enum class OptimizerKind { adam, cocob };

inline const char* to_string(Scheme s) { return s == Scheme::LS1 ? "LS1" : "LS2"; }
inline const char* to_string(OptimizerKind o) {
    return o == OptimizerKind::adam ? "adam" : "cocob";
}

/// Hyperparameter bounds; the defaults are the search-grid limits the
/// training configuration is validated against.
struct TrainConfigBounds {
    int cell_dim_min = 50, cell_dim_max = 100;
    int minibatch_min = 60, minibatch_max = 1500;
    double lr_min = 1e-6, lr_max = 1e-3;
    int epochs_min = 5, epochs_max = 20;
    double noise_min = 1e-4, noise_max = 8e-4;
    double l2_min = 1e-4, l2_max = 8e-4;
};

struct TrainConfig {
    int cell_dim = 50;
    int minibatch_size = 60;
    double learning_rate = 1e-3;
    int max_epochs = 5;
    double gaussian_noise_std = 1e-4;
    double l2_weight = 1e-4;
    Scheme scheme = Scheme::LS1;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::uint64_t rng_seed = 1;
    /// BPTT truncation: a training sequence is a chronological run of
    /// consecutive windows from one item, at most this many steps.
    int bptt_steps = 8;
    double clip_norm = 1.0;
};

inline std::vector<std::string> validate_train_config(const TrainConfig& cfg,
                                                      const TrainConfigBounds& b = {}) {
    std::vector<std::string> violations;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) violations.push_back(msg);
    };
    check(cfg.cell_dim >= b.cell_dim_min && cfg.cell_dim <= b.cell_dim_max,
          "cell_dim outside [" + std::to_string(b.cell_dim_min) + "," +
              std::to_string(b.cell_dim_max) + "]");
    check(cfg.minibatch_size >= b.minibatch_min && cfg.minibatch_size <= b.minibatch_max,
          "minibatch_size outside bounds");
    if (cfg.optimizer == OptimizerKind::adam)
        check(cfg.learning_rate >= b.lr_min && cfg.learning_rate <= b.lr_max,
              "learning_rate outside bounds");
    check(cfg.max_epochs >= b.epochs_min && cfg.max_epochs <= b.epochs_max,
          "max_epochs outside bounds");
    check(cfg.gaussian_noise_std >= b.noise_min && cfg.gaussian_noise_std <= b.noise_max,
          "gaussian_noise_std outside bounds");
    check(cfg.l2_weight >= b.l2_min && cfg.l2_weight <= b.l2_max, "l2_weight outside bounds");
    check(cfg.bptt_steps >= 1, "bptt_steps must be >= 1");
    return violations;
}

struct EpochTrace {
    double train_loss = 0.0;       // mean per-sequence data loss, as presented (with noise)
    double l2_penalty = 0.0;       // l2_weight * ||w||^2 at epoch end
    double validation_loss = 0.0;  // clean MSE on the reserved windows
};

struct TrainResult {
    LstmParams params;  // parameters from the best validation epoch
    std::vector<EpochTrace> trace;
    int best_epoch = -1;
};

namespace detail {

struct SequenceRef {
    std::size_t first_pair;
    int length;
};

/// Chronological runs of consecutive windows per item, chopped to the BPTT
/// truncation length. train_pairs are grouped by item with ascending
/// origins, so a single scan suffices.
inline std::vector<SequenceRef> build_sequences(const std::vector<WindowPair>& pairs,
                                                int bptt_steps) {
    std::vector<SequenceRef> seqs;
    std::size_t i = 0;
    while (i < pairs.size()) {
        std::size_t j = i + 1;
        while (j < pairs.size() && pairs[j].item_id == pairs[j - 1].item_id &&
               pairs[j].origin_index == pairs[j - 1].origin_index + 1)
            ++j;
        for (std::size_t s = i; s < j; s += static_cast<std::size_t>(bptt_steps))
            seqs.push_back({s, static_cast<int>(
                                   std::min<std::size_t>(static_cast<std::size_t>(bptt_steps), j - s))});
        i = j;
    }
    return seqs;
}

/// Flattened per-step LSTM input: the n locally-normalized sales values
/// followed by the n x P feature block.
inline std::vector<double> assemble_step_input(const WindowPair& pair) {
    std::vector<double> x;
    x.reserve(pair.input.size() + pair.features.size());
    x.insert(x.end(), pair.input.begin(), pair.input.end());
    x.insert(x.end(), pair.features.begin(), pair.features.end());
    return x;
}

}  // namespace detail

inline int lstm_input_dim(const TrainingSet& data) {
    return data.input_window + data.input_window * data.feature_dim;
}

/// Minibatched BPTT training. Deterministic for a fixed config: shuffling
/// and noise come from one per-epoch derived stream and batches reduce in
/// order. Gaussian noise perturbs only the sales entries of each step input
/// and only during training. Returns the parameters of the epoch with the
/// lowest validation loss.
inline TrainResult train_epochs(const TrainingSet& data, const TrainConfig& cfg,
                                const TrainConfigBounds& bounds = {}) {
    if (data.train_pairs.empty())
        throw std::invalid_argument("train_epochs: empty training set");
    auto violations = validate_train_config(cfg, bounds);
    if (!violations.empty())
        throw std::invalid_argument("train_epochs: invalid config: " + violations.front());

    const int n = data.input_window;
    const int m = data.output_window;
    const int d = lstm_input_dim(data);
    const LstmDims dims{cfg.cell_dim, d, m};
    LstmParams params = LstmParams::glorot(dims, cfg.rng_seed);

    AdamState adam(params.size());
    CocobState cocob(params.flat());

    auto sequences = detail::build_sequences(data.train_pairs, cfg.bptt_steps);
    std::vector<std::size_t> order(sequences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    result.params = params;
    double best_validation = std::numeric_limits<double>::max();

    std::vector<double> grads(params.size());
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::mt19937_64 rng(derive_seed(cfg.rng_seed, 0xe90c0000ULL + static_cast<std::uint64_t>(epoch)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        fisher_yates(order, rng);

        double epoch_data_loss = 0.0;
        std::size_t epoch_steps = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.minibatch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch_size));
            const auto batch = static_cast<double>(stop - start);
            std::fill(grads.begin(), grads.end(), 0.0);

            for (std::size_t s = start; s < stop; ++s) {
                const auto& seq = sequences[order[s]];
                std::vector<std::vector<double>> inputs(static_cast<std::size_t>(seq.length));
                std::vector<std::vector<double>> targets(static_cast<std::size_t>(seq.length));
                for (int t = 0; t < seq.length; ++t) {
                    const auto& pair = data.train_pairs[seq.first_pair + static_cast<std::size_t>(t)];
                    auto x = detail::assemble_step_input(pair);
                    if (cfg.gaussian_noise_std > 0.0)
                        for (int j = 0; j < n; ++j)
                            x[static_cast<std::size_t>(j)] += cfg.gaussian_noise_std * gauss(rng);
                    inputs[static_cast<std::size_t>(t)] = std::move(x);
                    targets[static_cast<std::size_t>(t)] = pair.targets;
                }
                auto cache = lstm_forward(params, inputs, LstmState::zero(cfg.cell_dim));
                const double data_loss = sequence_data_loss(cache, targets, cfg.scheme);
                if (!std::isfinite(data_loss))
                    throw std::runtime_error("train_epochs: loss diverged (NaN/inf) at epoch " +
                                             std::to_string(epoch));
                epoch_data_loss += data_loss;
                ++epoch_steps;
                auto seq_grads = lstm_backward(params, cache, targets, cfg.scheme, 0.0);
                for (std::size_t i = 0; i < grads.size(); ++i)
                    grads[i] += seq_grads[i] / batch;
            }
            params.add_l2_gradient(grads, cfg.l2_weight);
            clip_by_global_norm(grads, cfg.clip_norm);
            if (cfg.optimizer == OptimizerKind::adam)
                adam.step(params.flat(), grads, cfg.learning_rate);
            else
                cocob.step(params.flat(), grads);
        }

        EpochTrace trace;
        trace.train_loss =
            epoch_data_loss / static_cast<double>(std::max<std::size_t>(1, epoch_steps));
        trace.l2_penalty = cfg.l2_weight * params.l2_norm_sq();

        double validation = 0.0;
        for (const auto& pair : data.validation_pairs) {
            std::vector<std::vector<double>> inputs{detail::assemble_step_input(pair)};
            auto cache = lstm_forward(params, inputs, LstmState::zero(cfg.cell_dim));
            validation += step_mse(cache.output(0), pair.targets);
        }
        if (!data.validation_pairs.empty())
            validation /= static_cast<double>(data.validation_pairs.size());
        if (!std::isfinite(validation))
            throw std::runtime_error("train_epochs: validation loss diverged at epoch " +
                                     std::to_string(epoch));
        trace.validation_loss = validation;
        result.trace.push_back(trace);

        if (validation < best_validation) {
            best_validation = validation;
            result.params = params;
            result.best_epoch = epoch;
        }
    }
    return result;
}

}  // namespace demandcast
