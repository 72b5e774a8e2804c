#include "bpad/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace bpad {

AdamState AdamState::init(const AdamConfig& cfg,
                          const std::vector<const Tensor2*>& params) {
    AdamState state;
    state.cfg = cfg;
    state.first_moment.reserve(params.size());
    state.second_moment.reserve(params.size());
    for (const Tensor2* p : params) {
        state.first_moment.emplace_back(p->rows, p->cols);
        state.second_moment.emplace_back(p->rows, p->cols);
    }
    return state;
}

void adam_step(const std::vector<Tensor2*>& params,
               const std::vector<const Tensor2*>& grads, AdamState& state) {
    if (params.size() != grads.size() ||
        params.size() != state.first_moment.size()) {
        throw std::invalid_argument("adam_step: parameter count mismatch");
    }
    ++state.step;
    const AdamConfig& c = state.cfg;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor2& p = *params[k];
        const Tensor2& g = *grads[k];
        Tensor2& m = state.first_moment[k];
        Tensor2& v = state.second_moment[k];
        if (!p.same_shape(g) || !p.same_shape(m)) {
            throw std::invalid_argument("adam_step: shape mismatch");
        }
        for (std::size_t n = 0; n < p.count(); ++n) {
            const double gv = g.data[n];
            m.data[n] = c.beta1 * m.data[n] + (1.0 - c.beta1) * gv;
            v.data[n] = c.beta2 * v.data[n] + (1.0 - c.beta2) * gv * gv;
            const double m_hat = m.data[n] / bc1;
            const double v_hat = v.data[n] / bc2;
            p.data[n] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

} // namespace bpad
