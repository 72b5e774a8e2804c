#include "bpad/lstm.hpp"

#include <cmath>
#include <stdexcept>

#include "bpad/rng.hpp"

namespace bpad {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void uniform_fill(Tensor2& t, double bound, Rng& rng) {
    for (double& v : t.data) {
        v = (2.0 * rng.next_uniform() - 1.0) * bound;
    }
}

} // namespace

LstmLayerParams LstmLayerParams::zeros(std::size_t input_dim,
                                       std::size_t hidden_dim) {
    LstmLayerParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.w = Tensor2(input_dim, 4 * hidden_dim);
    p.u = Tensor2(hidden_dim, 4 * hidden_dim);
    p.b = Tensor2(1, 4 * hidden_dim);
    return p;
}

LstmLayerParams LstmLayerParams::init(std::size_t input_dim,
                                      std::size_t hidden_dim, Rng& rng) {
    LstmLayerParams p = zeros(input_dim, hidden_dim);
    // Draw order is part of the reproducibility contract; keep it fixed.
    uniform_fill(p.w, 1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
    uniform_fill(p.u, 1.0 / std::sqrt(static_cast<double>(hidden_dim)), rng);
    for (std::size_t j = 0; j < hidden_dim; ++j) {
        p.b.data[hidden_dim + j] = 1.0; // forget-gate block
    }
    return p;
}

void LstmLayerParams::visit(
    const std::function<void(const std::string&, Tensor2&)>& fn) {
    fn("w", w);
    fn("u", u);
    fn("b", b);
}

void LstmLayerParams::visit(
    const std::function<void(const std::string&, const Tensor2&)>& fn) const {
    const_cast<LstmLayerParams*>(this)->visit(
        [&](const std::string& name, Tensor2& t) {
            fn(name, static_cast<const Tensor2&>(t));
        });
}

void lstm_cell_forward(const LstmLayerParams& params, const Tensor2& x_t,
                       const Tensor2& h_prev, const Tensor2& c_prev,
                       Tensor2& h_t, Tensor2& c_t, Tensor2& gates) {
    if (x_t.cols != params.input_dim) {
        throw std::invalid_argument("lstm_cell_forward: input dim mismatch");
    }
    const std::size_t batch = x_t.rows;
    const std::size_t hidden = params.hidden_dim;
    const bool has_state = h_prev.count() != 0;
    if (has_state && (h_prev.rows != batch || h_prev.cols != hidden)) {
        throw std::invalid_argument("lstm_cell_forward: state shape mismatch");
    }

    gates = Tensor2(batch, 4 * hidden);
    matmul(x_t, params.w, gates);
    if (has_state) matmul(h_prev, params.u, gates, /*accumulate=*/true);
    add_bias_rows(gates, params.b);

    h_t = Tensor2(batch, hidden);
    c_t = Tensor2(batch, hidden);
    for (std::size_t r = 0; r < batch; ++r) {
        double* a = gates.data.data() + r * 4 * hidden;
        double* hv = h_t.data.data() + r * hidden;
        double* cv = c_t.data.data() + r * hidden;
        const double* cp = has_state ? c_prev.data.data() + r * hidden : nullptr;
        for (std::size_t j = 0; j < hidden; ++j) {
            const double iv = sigmoid(a[j]);
            const double fv = sigmoid(a[hidden + j]);
            const double gv = std::tanh(a[2 * hidden + j]);
            const double ov = sigmoid(a[3 * hidden + j]);
            a[j] = iv;
            a[hidden + j] = fv;
            a[2 * hidden + j] = gv;
            a[3 * hidden + j] = ov;
            const double c_new = fv * (cp ? cp[j] : 0.0) + iv * gv;
            cv[j] = c_new;
            hv[j] = ov * std::tanh(c_new);
        }
    }
    h_t.check_finite("lstm hidden state");
}

LstmLayerCache lstm_layer_forward(const LstmLayerParams& params,
                                  const std::vector<Tensor2>& inputs) {
    if (inputs.empty()) {
        throw std::invalid_argument("lstm_layer_forward: empty sequence");
    }
    const std::size_t steps = inputs.size();
    LstmLayerCache cache;
    cache.gates.resize(steps);
    cache.cell.resize(steps);
    cache.hidden.resize(steps);

    Tensor2 empty;
    for (std::size_t t = 0; t < steps; ++t) {
        const Tensor2& h_prev = t == 0 ? empty : cache.hidden[t - 1];
        const Tensor2& c_prev = t == 0 ? empty : cache.cell[t - 1];
        lstm_cell_forward(params, inputs[t], h_prev, c_prev, cache.hidden[t],
                          cache.cell[t], cache.gates[t]);
    }
    return cache;
}

std::vector<Tensor2> lstm_layer_backward(const LstmLayerParams& params,
                                         const std::vector<Tensor2>& inputs,
                                         const LstmLayerCache& cache,
                                         const std::vector<Tensor2>& d_hidden,
                                         LstmLayerParams& grads) {
    const std::size_t steps = inputs.size();
    if (cache.hidden.size() != steps || d_hidden.size() != steps) {
        throw std::invalid_argument("lstm_layer_backward: cache/grad length mismatch");
    }
    const std::size_t batch = inputs[0].rows;
    const std::size_t hidden = params.hidden_dim;

    std::vector<Tensor2> d_inputs(steps);
    Tensor2 dh_next(batch, hidden); // dL/dh_t flowing from step t+1
    Tensor2 dc_next(batch, hidden); // dL/dc_t flowing from step t+1
    Tensor2 da(batch, 4 * hidden);  // pre-activation gradients, [i|f|g|o]

    for (std::size_t t = steps; t-- > 0;) {
        const bool first = t == 0;
        for (std::size_t r = 0; r < batch; ++r) {
            const double* g = cache.gates[t].data.data() + r * 4 * hidden;
            const double* ct = cache.cell[t].data.data() + r * hidden;
            const double* cprev =
                first ? nullptr : cache.cell[t - 1].data.data() + r * hidden;
            const double* dh_up = d_hidden[t].data.data() + r * hidden;
            double* dhn = dh_next.data.data() + r * hidden;
            double* dcn = dc_next.data.data() + r * hidden;
            double* dav = da.data.data() + r * 4 * hidden;
            for (std::size_t j = 0; j < hidden; ++j) {
                const double gi = g[j];
                const double gf = g[hidden + j];
                const double gg = g[2 * hidden + j];
                const double go = g[3 * hidden + j];
                const double dh = dhn[j] + dh_up[j];
                const double tanh_c = std::tanh(ct[j]);
                const double dc = dcn[j] + dh * go * (1.0 - tanh_c * tanh_c);
                dav[j] = dc * gg * gi * (1.0 - gi);
                dav[hidden + j] = dc * (cprev ? cprev[j] : 0.0) * gf * (1.0 - gf);
                dav[2 * hidden + j] = dc * gi * (1.0 - gg * gg);
                dav[3 * hidden + j] = dh * tanh_c * go * (1.0 - go);
                dcn[j] = dc * gf;
            }
        }

        // Parameter gradients.
        matmul_at(inputs[t], da, grads.w, true);
        if (!first) {
            matmul_at(cache.hidden[t - 1], da, grads.u, true);
        }
        for (std::size_t j = 0; j < 4 * hidden; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < batch; ++r) {
                s += da(r, j);
            }
            grads.b.data[j] += s;
        }

        // Input gradient and recurrent hidden gradient.
        d_inputs[t] = Tensor2(batch, params.input_dim);
        matmul_bt(da, params.w, d_inputs[t], true);
        if (!first) {
            dh_next.fill(0.0);
            matmul_bt(da, params.u, dh_next, true);
        }
    }
    return d_inputs;
}

} // namespace bpad
