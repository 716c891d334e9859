#pragma once

// Pure forward/backward kernels. Instantiated for float (training) and
// double (finite-difference oracles).

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hesplit/nn/tensor.h"

namespace hesplit::nn {

template <typename T>
struct ParamGrads {
    BasicTensor<T> input;
    BasicTensor<T> weight;
    BasicTensor<T> bias;
};

// x: [n, C, T], weight: [C', C, m], bias: [C'] -> [n, C', T'] with
// T' = (T + 2*padding - m) / stride + 1. Cross-correlation, no kernel flip.
template <typename T>
BasicTensor<T> conv1d_forward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                              const BasicTensor<T>& bias, std::size_t stride, std::size_t padding);

template <typename T>
ParamGrads<T> conv1d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x,
                              const BasicTensor<T>& weight, std::size_t stride, std::size_t padding);

template <typename T>
BasicTensor<T> leaky_relu_forward(const BasicTensor<T>& x, T slope);

template <typename T>
BasicTensor<T> leaky_relu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x, T slope);

template <typename T>
struct PoolResult {
    BasicTensor<T> output;
    std::vector<std::uint32_t> argmax;  // flat input index per output element
};

// Windowed max over the last axis of [n, C, T]. Ties go to the first index.
template <typename T>
PoolResult<T> maxpool1d_forward(const BasicTensor<T>& x, std::size_t width, std::size_t stride);

template <typename T>
BasicTensor<T> maxpool1d_backward(const BasicTensor<T>& grad_out, const std::vector<std::uint32_t>& argmax,
                                  const Shape& input_shape);

// a: [n, in], weight: [out, in], bias: [out] -> [n, out]
template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& a, const BasicTensor<T>& weight, const BasicTensor<T>& bias);

// dJ/dW = grad_out^T . a
template <typename T>
BasicTensor<T> linear_weight_grad(const BasicTensor<T>& grad_out, const BasicTensor<T>& a);

// dJ/db = batch-sum of grad_out
template <typename T>
BasicTensor<T> linear_bias_grad(const BasicTensor<T>& grad_out);

// dJ/da = grad_out . W
template <typename T>
BasicTensor<T> linear_input_grad(const BasicTensor<T>& grad_out, const BasicTensor<T>& weight);

template <typename T>
struct SoftmaxLoss {
    BasicTensor<T> probs;  // [n, classes]
    T loss;                // mean over the batch of -log p[label]
    BasicTensor<T> grad;   // (probs - onehot) / n
};

template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const BasicTensor<T>& logits, const std::vector<int>& labels);

}  // namespace hesplit::nn
