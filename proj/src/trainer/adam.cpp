#include "mixscape/errors.hpp"
#include "mixscape/trainer.hpp"

#include <cmath>

namespace mixscape {

OptimState make_optim_state(std::span<Tensor* const> params)
{
    OptimState s;
    for (const Tensor* p : params) {
        s.first_moment.push_back(Tensor::zeros(p->shape()));
        s.second_moment.push_back(Tensor::zeros(p->shape()));
    }
    return s;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, OptimState& state, double lr,
               double weight_decay)
{
    if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
        params.size() != state.second_moment.size())
        throw ContractError("adam_step: parameter, gradient and moment counts differ");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i]->shape() != grads[i].shape() || params[i]->shape() != state.first_moment[i].shape() ||
            params[i]->shape() != state.second_moment[i].shape())
            throw ContractError("adam_step: shape mismatch at parameter " + std::to_string(i) + ": " +
                                shape_string(params[i]->shape()) + " vs gradient " + shape_string(grads[i].shape()));

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i]->data();
        const auto g = grads[i].data();
        auto m = state.first_moment[i].data();
        auto v = state.second_moment[i].data();
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double gk = g[k] + weight_decay * p[k];
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p[k] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

} // namespace mixscape
