// LSTM layer built from scratch: batched forward pass with cached
// activations and the matching analytic backward pass (BPTT). Standard
// formulation, no peepholes:
//   i = sigmoid(x W_i + h U_i + b_i)        f = sigmoid(x W_f + h U_f + b_f)
//   g = tanh   (x W_g + h U_g + b_g)        o = sigmoid(x W_o + h U_o + b_o)
//   c_t = f .* c_{t-1} + i .* g             h_t = o .* tanh(c_t)
// The four gates are stored fused along the column axis in the order
// [i | f | g | o], so one (B, in) x (in, 4H) gemm plus one
// (B, H) x (H, 4H) gemm produce all pre-activations for a timestep.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bpad/tensor.hpp"

namespace bpad {

class Rng;

struct LstmLayerParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    Tensor2 w; // (input_dim, 4*hidden), gate blocks [i | f | g | o]
    Tensor2 u; // (hidden,    4*hidden)
    Tensor2 b; // (1,         4*hidden)

    static LstmLayerParams zeros(std::size_t input_dim, std::size_t hidden_dim);
    // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights; forget-gate bias
    // starts at 1.0, the other biases at 0.
    static LstmLayerParams init(std::size_t input_dim, std::size_t hidden_dim,
                                Rng& rng);

    // Visits every tensor with a stable short name ("w", "u", "b").
    void visit(const std::function<void(const std::string&, Tensor2&)>& fn);
    void visit(const std::function<void(const std::string&, const Tensor2&)>& fn) const;
};

// Activations retained by the forward pass for BPTT. Index t holds the
// state after consuming input t; hidden[t] is the layer output at t.
struct LstmLayerCache {
    std::vector<Tensor2> gates;  // (B, 4H), post-activation, blocks [i|f|g|o]
    std::vector<Tensor2> cell;   // c_t, (B, H)
    std::vector<Tensor2> hidden; // h_t, (B, H)
};

// One step for a batch of rows; initial states may be empty (= zero).
// Outputs are written into h_t / c_t; `gates` receives the post-activation
// gate values needed by the backward pass.
void lstm_cell_forward(const LstmLayerParams& params, const Tensor2& x_t,
                       const Tensor2& h_prev, const Tensor2& c_prev,
                       Tensor2& h_t, Tensor2& c_t, Tensor2& gates);

// Unrolled left-to-right application over `inputs` (one (B, input_dim)
// tensor per timestep), starting from zero states.
LstmLayerCache lstm_layer_forward(const LstmLayerParams& params,
                                  const std::vector<Tensor2>& inputs);

// BPTT. d_hidden[t] carries every upstream gradient reaching h_t (from the
// layer above and/or the loss); gradients on the initial zero states are
// discarded. Parameter gradients are accumulated into `grads`; the return
// value is d_inputs[t].
std::vector<Tensor2> lstm_layer_backward(const LstmLayerParams& params,
                                         const std::vector<Tensor2>& inputs,
                                         const LstmLayerCache& cache,
                                         const std::vector<Tensor2>& d_hidden,
                                         LstmLayerParams& grads);

} // namespace bpad
