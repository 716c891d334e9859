#include "hesplit/nn/optim.h"

#include <cmath>

namespace hesplit::nn {

namespace {

void check_grad_shapes(const LayerParams& p, const Gradients& g) {
    if (p.weight.shape() != g.weight.shape()) throw DimensionError("weight gradient shape mismatch", "weight");
    if (p.bias.shape() != g.bias.shape()) throw DimensionError("bias gradient shape mismatch", "bias");
}

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, float correction1, float correction2,
                 const AdamConfig& cfg) {
    if (m.shape() != param.shape()) m = Tensor(param.shape());
    if (v.shape() != param.shape()) v = Tensor(param.shape());
    for (std::size_t i = 0; i < param.size(); ++i) {
        const float g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0f - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0f - cfg.beta2) * g * g;
        const float m_hat = m[i] / correction1;
        const float v_hat = v[i] / correction2;
        param[i] -= cfg.eta * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

}  // namespace

void adam_step(LayerParams& params, const Gradients& grads, const AdamConfig& cfg) {
    check_grad_shapes(params, grads);
    auto& s = params.adam;
    ++s.step;
    const auto t = static_cast<double>(s.step);
    const auto correction1 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg.beta1), t));
    const auto correction2 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg.beta2), t));
    adam_update(params.weight, grads.weight, s.m_weight, s.v_weight, correction1, correction2, cfg);
    adam_update(params.bias, grads.bias, s.m_bias, s.v_bias, correction1, correction2, cfg);
}

void sgd_step(LayerParams& params, const Gradients& grads, float eta) {
    check_grad_shapes(params, grads);
    for (std::size_t i = 0; i < params.weight.size(); ++i) params.weight[i] -= eta * grads.weight[i];
    for (std::size_t i = 0; i < params.bias.size(); ++i) params.bias[i] -= eta * grads.bias[i];
}

}  // namespace hesplit::nn
