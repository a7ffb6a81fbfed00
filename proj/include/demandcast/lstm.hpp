#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "demandcast/rng.hpp"

namespace demandcast {

enum class Gate { input = 0, forget = 1, cell = 2, output = 3 };
enum class Peephole { input = 0, forget = 1, output = 2 };

struct LstmDims {
    int cell_dim = 0;    // p
    int input_dim = 0;   // d: flattened window (sales + exogenous features)
    int output_dim = 0;  // m: projected output window

    bool operator==(const LstmDims&) const = default;
};

/// All weights of the peephole LSTM plus the output projection, held in one
/// flat buffer so optimizers, checkpoints and gradient checks can treat the
/// model as a single parameter vector.
///
/// Layout: for each gate (input, forget, cell, output): W (p x d), U (p x p),
/// b (p); then the three peephole vectors (p each); then V (m x p, no bias).
class LstmParams {
public:
    LstmParams() = default;

    explicit LstmParams(LstmDims dims) : dims_(dims) {
        if (dims.cell_dim < 1 || dims.input_dim < 1 || dims.output_dim < 1)
            throw std::invalid_argument("LstmParams: dimensions must be positive");
        data_.assign(total_size(dims), 0.0);
    }

    /// Glorot-uniform weights, zero biases except the forget-gate bias at
    /// +1, zero peepholes.
    static LstmParams glorot(LstmDims dims, std::uint64_t seed) {
        LstmParams params(dims);
        std::mt19937_64 rng(derive_seed(seed, 0x1e57u));
        auto fill = [&](double* w, std::size_t count, int fan_in, int fan_out) {
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            std::uniform_real_distribution<double> u(-limit, limit);
            for (std::size_t i = 0; i < count; ++i) w[i] = u(rng);
        };
        const auto p = static_cast<std::size_t>(dims.cell_dim);
        const auto d = static_cast<std::size_t>(dims.input_dim);
        const auto m = static_cast<std::size_t>(dims.output_dim);
        for (int g = 0; g < 4; ++g) {
            fill(params.W(static_cast<Gate>(g)), p * d, dims.input_dim, dims.cell_dim);
            fill(params.U(static_cast<Gate>(g)), p * p, dims.cell_dim, dims.cell_dim);
        }
        for (std::size_t i = 0; i < p; ++i) params.b(Gate::forget)[i] = 1.0;
        fill(params.V(), m * p, dims.cell_dim, dims.output_dim);
        return params;
    }

    const LstmDims& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }
    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    double* W(Gate g) { return data_.data() + gate_base(g); }
    const double* W(Gate g) const { return data_.data() + gate_base(g); }
    double* U(Gate g) { return data_.data() + gate_base(g) + pd(); }
    const double* U(Gate g) const { return data_.data() + gate_base(g) + pd(); }
    double* b(Gate g) { return data_.data() + gate_base(g) + pd() + pp(); }
    const double* b(Gate g) const { return data_.data() + gate_base(g) + pd() + pp(); }
    double* peephole(Peephole which) { return data_.data() + peep_base(which); }
    const double* peephole(Peephole which) const { return data_.data() + peep_base(which); }
    double* V() { return data_.data() + v_base(); }
    const double* V() const { return data_.data() + v_base(); }

    /// Squared L2 norm of every weight except the four gate biases.
    double l2_norm_sq() const {
        double sum = 0.0;
        const auto p = static_cast<std::size_t>(dims_.cell_dim);
        for (int g = 0; g < 4; ++g) {
            const std::size_t base = gate_base(static_cast<Gate>(g));
            for (std::size_t i = 0; i < pd() + pp(); ++i)
                sum += data_[base + i] * data_[base + i];
        }
        for (std::size_t i = peep_base(Peephole::input); i < peep_base(Peephole::input) + 3 * p; ++i)
            sum += data_[i] * data_[i];
        for (std::size_t i = v_base(); i < data_.size(); ++i) sum += data_[i] * data_[i];
        return sum;
    }

    /// Adds d(l2_weight * ||w||^2)/dw to `grads` (biases excluded).
    void add_l2_gradient(std::span<double> grads, double l2_weight) const {
        const auto p = static_cast<std::size_t>(dims_.cell_dim);
        for (int g = 0; g < 4; ++g) {
            const std::size_t base = gate_base(static_cast<Gate>(g));
            for (std::size_t i = 0; i < pd() + pp(); ++i)
                grads[base + i] += 2.0 * l2_weight * data_[base + i];
        }
        for (std::size_t i = peep_base(Peephole::input); i < peep_base(Peephole::input) + 3 * p; ++i)
            grads[i] += 2.0 * l2_weight * data_[i];
        for (std::size_t i = v_base(); i < data_.size(); ++i)
            grads[i] += 2.0 * l2_weight * data_[i];
    }

    static std::size_t total_size(LstmDims dims) {
        const auto p = static_cast<std::size_t>(dims.cell_dim);
        const auto d = static_cast<std::size_t>(dims.input_dim);
        const auto m = static_cast<std::size_t>(dims.output_dim);
        return 4 * (p * d + p * p + p) + 3 * p + m * p;
    }

    // --- checkpoint I/O (flat binary: magic, dims, row-major f64) ---

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
        const char magic[8] = {'D', 'C', 'L', 'S', 'T', 'M', '0', '1'};
        out.write(magic, sizeof(magic));
        const std::int32_t header[3] = {dims_.cell_dim, dims_.input_dim, dims_.output_dim};
        out.write(reinterpret_cast<const char*>(header), sizeof(header));
        out.write(reinterpret_cast<const char*>(data_.data()),
                  static_cast<std::streamsize>(data_.size() * sizeof(double)));
        if (!out) throw std::runtime_error("short write on checkpoint: " + path);
    }

    static LstmParams load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
        char magic[8];
        in.read(magic, sizeof(magic));
        if (!in || std::memcmp(magic, "DCLSTM01", 8) != 0)
            throw std::runtime_error("not a model checkpoint: " + path);
        std::int32_t header[3];
        in.read(reinterpret_cast<char*>(header), sizeof(header));
        if (!in) throw std::runtime_error("truncated checkpoint header: " + path);
        LstmParams params(LstmDims{header[0], header[1], header[2]});
        in.read(reinterpret_cast<char*>(params.data_.data()),
                static_cast<std::streamsize>(params.data_.size() * sizeof(double)));
        if (!in) throw std::runtime_error("truncated checkpoint payload: " + path);
        return params;
    }

private:
    std::size_t pd() const {
        return static_cast<std::size_t>(dims_.cell_dim) * static_cast<std::size_t>(dims_.input_dim);
    }
    std::size_t pp() const {
        return static_cast<std::size_t>(dims_.cell_dim) * static_cast<std::size_t>(dims_.cell_dim);
    }
    std::size_t gate_stride() const { return pd() + pp() + static_cast<std::size_t>(dims_.cell_dim); }
    std::size_t gate_base(Gate g) const { return static_cast<std::size_t>(g) * gate_stride(); }
    std::size_t peep_base(Peephole which) const {
        return 4 * gate_stride() +
               static_cast<std::size_t>(which) * static_cast<std::size_t>(dims_.cell_dim);
    }
    std::size_t v_base() const {
        return 4 * gate_stride() + 3 * static_cast<std::size_t>(dims_.cell_dim);
    }

    LstmDims dims_;
    std::vector<double> data_;
};

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;

    static LstmState zero(int cell_dim) {
        LstmState s;
        s.h.assign(static_cast<std::size_t>(cell_dim), 0.0);
        s.c.assign(static_cast<std::size_t>(cell_dim), 0.0);
        return s;
    }
};

/// Everything the backward pass needs, laid out step-major.
struct ForwardCache {
    LstmDims dims;
    int steps = 0;
    std::vector<double> x;       // T x d
    std::vector<double> gate_i;  // T x p
    std::vector<double> gate_f;
    std::vector<double> gate_g;  // candidate tanh activation
    std::vector<double> gate_o;
    std::vector<double> c;
    std::vector<double> tanh_c;
    std::vector<double> h;
    std::vector<double> y;  // T x m
    std::vector<double> h0, c0;

    std::span<const double> output(int t) const {
        return {y.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(dims.output_dim),
                static_cast<std::size_t>(dims.output_dim)};
    }

    LstmState final_state() const {
        LstmState s;
        const auto p = static_cast<std::size_t>(dims.cell_dim);
        const auto base = static_cast<std::size_t>(steps - 1) * p;
        s.h.assign(h.begin() + static_cast<std::ptrdiff_t>(base),
                   h.begin() + static_cast<std::ptrdiff_t>(base + p));
        s.c.assign(c.begin() + static_cast<std::ptrdiff_t>(base),
                   c.begin() + static_cast<std::ptrdiff_t>(base + p));
        return s;
    }
};

namespace detail {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// y += A x with A (rows x cols) row-major.
inline void matvec_add(const double* a, const double* x, double* y, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        const double* row = a + static_cast<std::size_t>(i) * static_cast<std::size_t>(cols);
        double acc = 0.0;
        for (int j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[i] += acc;
    }
}

/// y += A^T x with A (rows x cols) row-major, x of length rows.
inline void matvec_transpose_add(const double* a, const double* x, double* y, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        const double* row = a + static_cast<std::size_t>(i) * static_cast<std::size_t>(cols);
        const double xi = x[i];
        for (int j = 0; j < cols; ++j) y[j] += row[j] * xi;
    }
}

/// A += u v^T accumulated into row-major A (|u| x |v|).
inline void outer_add(double* a, const double* u, const double* v, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        double* row = a + static_cast<std::size_t>(i) * static_cast<std::size_t>(cols);
        const double ui = u[i];
        for (int j = 0; j < cols; ++j) row[j] += ui * v[j];
    }
}

}  // namespace detail

/// Unrolled forward pass. Gate equations:
///   i_t = sigmoid(W_i x_t + U_i h_{t-1} + p_i . c_{t-1} + b_i)
///   f_t = sigmoid(W_f x_t + U_f h_{t-1} + p_f . c_{t-1} + b_f)
///   c_t = f_t . c_{t-1} + i_t . tanh(W_c x_t + U_c h_{t-1} + b_c)
///   o_t = sigmoid(W_o x_t + U_o h_{t-1} + p_o . c_t + b_o)
///   h_t = o_t . tanh(c_t),   y_t = V h_t
inline ForwardCache lstm_forward(const LstmParams& params,
                                 const std::vector<std::vector<double>>& inputs,
                                 const LstmState& init) {
    const LstmDims dims = params.dims();
    const int p = dims.cell_dim, d = dims.input_dim, m = dims.output_dim;
    const int steps = static_cast<int>(inputs.size());
    if (steps == 0) throw std::invalid_argument("lstm_forward: empty input sequence");
    for (int t = 0; t < steps; ++t)
        if (static_cast<int>(inputs[static_cast<std::size_t>(t)].size()) != d)
            throw std::invalid_argument("lstm_forward: input x_" + std::to_string(t) +
                                        " has dimension " +
                                        std::to_string(inputs[static_cast<std::size_t>(t)].size()) +
                                        ", expected d=" + std::to_string(d));
    if (static_cast<int>(init.h.size()) != p || static_cast<int>(init.c.size()) != p)
        throw std::invalid_argument("lstm_forward: initial state has wrong cell dimension");

    ForwardCache cache;
    cache.dims = dims;
    cache.steps = steps;
    const auto sp = static_cast<std::size_t>(p);
    const auto sd = static_cast<std::size_t>(d);
    const auto sm = static_cast<std::size_t>(m);
    const auto st = static_cast<std::size_t>(steps);
    cache.x.resize(st * sd);
    cache.gate_i.resize(st * sp);
    cache.gate_f.resize(st * sp);
    cache.gate_g.resize(st * sp);
    cache.gate_o.resize(st * sp);
    cache.c.resize(st * sp);
    cache.tanh_c.resize(st * sp);
    cache.h.resize(st * sp);
    cache.y.resize(st * sm);
    cache.h0 = init.h;
    cache.c0 = init.c;

    std::vector<double> a_i(sp), a_f(sp), a_g(sp), a_o(sp);
    const double* h_prev = cache.h0.data();
    const double* c_prev = cache.c0.data();
    for (int t = 0; t < steps; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        const double* x = inputs[ut].data();
        std::copy(inputs[ut].begin(), inputs[ut].end(), cache.x.begin() + static_cast<std::ptrdiff_t>(ut * sd));

        for (int g = 0; g < 4; ++g) {
            const Gate gate = static_cast<Gate>(g);
            double* acc = (g == 0 ? a_i : g == 1 ? a_f : g == 2 ? a_g : a_o).data();
            std::copy(params.b(gate), params.b(gate) + p, acc);
            detail::matvec_add(params.W(gate), x, acc, p, d);
            detail::matvec_add(params.U(gate), h_prev, acc, p, p);
        }
        double* i_t = cache.gate_i.data() + ut * sp;
        double* f_t = cache.gate_f.data() + ut * sp;
        double* g_t = cache.gate_g.data() + ut * sp;
        double* o_t = cache.gate_o.data() + ut * sp;
        double* c_t = cache.c.data() + ut * sp;
        double* tc_t = cache.tanh_c.data() + ut * sp;
        double* h_t = cache.h.data() + ut * sp;

        const double* peep_i = params.peephole(Peephole::input);
        const double* peep_f = params.peephole(Peephole::forget);
        const double* peep_o = params.peephole(Peephole::output);
        for (int j = 0; j < p; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            i_t[uj] = detail::sigmoid(a_i[uj] + peep_i[uj] * c_prev[j]);
            f_t[uj] = detail::sigmoid(a_f[uj] + peep_f[uj] * c_prev[j]);
            g_t[uj] = std::tanh(a_g[uj]);
            c_t[uj] = f_t[uj] * c_prev[j] + i_t[uj] * g_t[uj];
            o_t[uj] = detail::sigmoid(a_o[uj] + peep_o[uj] * c_t[uj]);
            tc_t[uj] = std::tanh(c_t[uj]);
            h_t[uj] = o_t[uj] * tc_t[uj];
        }
        double* y_t = cache.y.data() + ut * sm;
        std::fill(y_t, y_t + m, 0.0);
        detail::matvec_add(params.V(), h_t, y_t, m, p);

        h_prev = h_t;
        c_prev = c_t;
    }
    return cache;
}

enum class Scheme { LS1, LS2 };

/// Per-step squared error averaged over the output window.
inline double step_mse(std::span<const double> predicted, std::span<const double> target) {
    if (predicted.size() != target.size())
        throw std::invalid_argument("step_mse: prediction/target length mismatch");
    double sum = 0.0;
    for (std::size_t j = 0; j < predicted.size(); ++j) {
        const double e = predicted[j] - target[j];
        sum += e * e;
    }
    return sum / static_cast<double>(predicted.size());
}

/// LS1 accumulates the error of every unrolled step; LS2 keeps only the
/// final step's error. Data term only; add l2_weight * l2_norm_sq()
/// separately when regularizing.
inline double sequence_data_loss(const ForwardCache& cache,
                                 const std::vector<std::vector<double>>& targets, Scheme scheme) {
    if (static_cast<int>(targets.size()) != cache.steps)
        throw std::invalid_argument("sequence_data_loss: target count mismatch");
    if (scheme == Scheme::LS2)
        return step_mse(cache.output(cache.steps - 1), targets[static_cast<std::size_t>(cache.steps - 1)]);
    double total = 0.0;
    for (int t = 0; t < cache.steps; ++t)
        total += step_mse(cache.output(t), targets[static_cast<std::size_t>(t)]);
    return total;
}

inline double sequence_loss(const ForwardCache& cache,
                            const std::vector<std::vector<double>>& targets, Scheme scheme,
                            double l2_weight, const LstmParams& params) {
    return sequence_data_loss(cache, targets, scheme) + l2_weight * params.l2_norm_sq();
}

/// Exact BPTT gradient of the weighted loss
///   sum_t step_weights[t] * (1/m) ||y_t - yhat_t||^2 + l2_weight * ||w||^2.
/// The peephole paths are differentiated in full: p_o couples the output
/// gate to c_t, p_i and p_f couple the next step's gates to c_t.
inline std::vector<double> lstm_backward(const LstmParams& params, const ForwardCache& cache,
                                         const std::vector<std::vector<double>>& targets,
                                         const std::vector<double>& step_weights,
                                         double l2_weight = 0.0) {
    const LstmDims dims = params.dims();
    const int p = dims.cell_dim, d = dims.input_dim, m = dims.output_dim;
    if (static_cast<int>(targets.size()) != cache.steps ||
        static_cast<int>(step_weights.size()) != cache.steps)
        throw std::invalid_argument("lstm_backward: target/weight count mismatch");

    std::vector<double> grads(params.size(), 0.0);

    // Gradient block views mirroring the parameter layout.
    auto goff = [&](const double* block) {
        return static_cast<std::size_t>(block - params.flat().data());
    };
    auto gW = [&](Gate g) { return grads.data() + goff(params.W(g)); };
    auto gU = [&](Gate g) { return grads.data() + goff(params.U(g)); };
    auto gb = [&](Gate g) { return grads.data() + goff(params.b(g)); };
    auto gPeep = [&](Peephole w) { return grads.data() + goff(params.peephole(w)); };
    double* gV = grads.data() + goff(params.V());

    const auto sp = static_cast<std::size_t>(p);
    const auto sd = static_cast<std::size_t>(d);
    const auto sm = static_cast<std::size_t>(m);

    std::vector<double> dy(sm), dh(sp), dc_next(sp), dh_next(sp);
    std::vector<double> da_i(sp), da_f(sp), da_g(sp), da_o(sp), dc(sp);
    const double* peep_i = params.peephole(Peephole::input);
    const double* peep_f = params.peephole(Peephole::forget);
    const double* peep_o = params.peephole(Peephole::output);

    for (int t = cache.steps - 1; t >= 0; --t) {
        const auto ut = static_cast<std::size_t>(t);
        const double* x = cache.x.data() + ut * sd;
        const double* i_t = cache.gate_i.data() + ut * sp;
        const double* f_t = cache.gate_f.data() + ut * sp;
        const double* g_t = cache.gate_g.data() + ut * sp;
        const double* o_t = cache.gate_o.data() + ut * sp;
        const double* c_t = cache.c.data() + ut * sp;
        const double* tc_t = cache.tanh_c.data() + ut * sp;
        const double* h_t = cache.h.data() + ut * sp;
        const double* h_prev = t > 0 ? cache.h.data() + (ut - 1) * sp : cache.h0.data();
        const double* c_prev = t > 0 ? cache.c.data() + (ut - 1) * sp : cache.c0.data();
        const double* y_t = cache.y.data() + ut * sm;
        const double* target = targets[ut].data();

        const double w_t = step_weights[ut];
        for (int j = 0; j < m; ++j)
            dy[static_cast<std::size_t>(j)] =
                w_t * 2.0 / static_cast<double>(m) * (y_t[j] - target[j]);

        // Projection layer.
        detail::outer_add(gV, dy.data(), h_t, m, p);
        std::copy(dh_next.begin(), dh_next.end(), dh.begin());
        detail::matvec_transpose_add(params.V(), dy.data(), dh.data(), m, p);

        for (int j = 0; j < p; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const double do_j = dh[uj] * tc_t[uj];
            da_o[uj] = do_j * o_t[uj] * (1.0 - o_t[uj]);
            dc[uj] = dh[uj] * o_t[uj] * (1.0 - tc_t[uj] * tc_t[uj]) + dc_next[uj] +
                     da_o[uj] * peep_o[uj];
            const double di = dc[uj] * g_t[uj];
            const double df = dc[uj] * c_prev[j];
            const double dg = dc[uj] * i_t[uj];
            da_i[uj] = di * i_t[uj] * (1.0 - i_t[uj]);
            da_f[uj] = df * f_t[uj] * (1.0 - f_t[uj]);
            da_g[uj] = dg * (1.0 - g_t[uj] * g_t[uj]);
        }

        detail::outer_add(gW(Gate::input), da_i.data(), x, p, d);
        detail::outer_add(gW(Gate::forget), da_f.data(), x, p, d);
        detail::outer_add(gW(Gate::cell), da_g.data(), x, p, d);
        detail::outer_add(gW(Gate::output), da_o.data(), x, p, d);
        detail::outer_add(gU(Gate::input), da_i.data(), h_prev, p, p);
        detail::outer_add(gU(Gate::forget), da_f.data(), h_prev, p, p);
        detail::outer_add(gU(Gate::cell), da_g.data(), h_prev, p, p);
        detail::outer_add(gU(Gate::output), da_o.data(), h_prev, p, p);
        for (int j = 0; j < p; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            gb(Gate::input)[j] += da_i[uj];
            gb(Gate::forget)[j] += da_f[uj];
            gb(Gate::cell)[j] += da_g[uj];
            gb(Gate::output)[j] += da_o[uj];
            gPeep(Peephole::input)[j] += da_i[uj] * c_prev[j];
            gPeep(Peephole::forget)[j] += da_f[uj] * c_prev[j];
            gPeep(Peephole::output)[j] += da_o[uj] * c_t[j];
        }

        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        detail::matvec_transpose_add(params.U(Gate::input), da_i.data(), dh_next.data(), p, p);
        detail::matvec_transpose_add(params.U(Gate::forget), da_f.data(), dh_next.data(), p, p);
        detail::matvec_transpose_add(params.U(Gate::cell), da_g.data(), dh_next.data(), p, p);
        detail::matvec_transpose_add(params.U(Gate::output), da_o.data(), dh_next.data(), p, p);
        for (int j = 0; j < p; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            dc_next[uj] = dc[uj] * f_t[uj] + da_i[uj] * peep_i[uj] + da_f[uj] * peep_f[uj];
        }
    }

    if (l2_weight != 0.0) params.add_l2_gradient(grads, l2_weight);
    return grads;
}

inline std::vector<double> lstm_backward(const LstmParams& params, const ForwardCache& cache,
                                         const std::vector<std::vector<double>>& targets,
                                         Scheme scheme, double l2_weight = 0.0) {
    std::vector<double> weights(static_cast<std::size_t>(cache.steps), 0.0);
    if (scheme == Scheme::LS1)
        std::fill(weights.begin(), weights.end(), 1.0);
    else
        weights.back() = 1.0;
    return lstm_backward(params, cache, targets, weights, l2_weight);
}

}  // namespace demandcast
