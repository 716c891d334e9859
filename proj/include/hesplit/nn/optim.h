#pragma once

#include <cstdint>

#include "hesplit/nn/tensor.h"

namespace hesplit::nn {

struct AdamConfig {
    float eta = 0.001f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

struct AdamState {
    Tensor m_weight, v_weight, m_bias, v_bias;
    std::uint64_t step = 0;
};

// Weights, biases and the optimizer state that travels with them.
struct LayerParams {
    Tensor weight;
    Tensor bias;
    AdamState adam;
};

struct Gradients {
    Tensor weight;
    Tensor bias;
};

// Bias-corrected Adam, in place. Moment buffers are created on first use.
void adam_step(LayerParams& params, const Gradients& grads, const AdamConfig& cfg);

// w <- w - eta * dJ/dw, b <- b - eta * dJ/db
void sgd_step(LayerParams& params, const Gradients& grads, float eta);

}  // namespace hesplit::nn
