#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "hesplit/nn/ops.h"
#include "hesplit/nn/optim.h"
#include "hesplit/nn/tensor.h"

namespace hesplit::nn {

// Stateful wrappers around the kernels in ops.h. Each layer caches what its
// backward pass needs; calling backward without a prior forward is an error.

class Conv1d {
public:
    Conv1d(LayerParams params, std::size_t stride, std::size_t padding);

    Tensor forward(const Tensor& x);
    // Returns dJ/dx and stores dJ/dw, dJ/db in grads().
    Tensor backward(const Tensor& grad_out);

    LayerParams& params() noexcept { return params_; }
    const LayerParams& params() const noexcept { return params_; }
    const Gradients& grads() const noexcept { return grads_; }
    std::size_t stride() const noexcept { return stride_; }
    std::size_t padding() const noexcept { return padding_; }

private:
    LayerParams params_;
    Gradients grads_;
    std::size_t stride_;
    std::size_t padding_;
    std::optional<Tensor> input_;
};

class LeakyRelu {
public:
    explicit LeakyRelu(float slope) : slope_(slope) {}

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);
    float slope() const noexcept { return slope_; }

private:
    float slope_;
    std::optional<Tensor> input_;
};

class MaxPool1d {
public:
    MaxPool1d(std::size_t width, std::size_t stride) : width_(width), stride_(stride) {}

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);
    std::size_t width() const noexcept { return width_; }
    std::size_t stride() const noexcept { return stride_; }

private:
    std::size_t width_;
    std::size_t stride_;
    std::optional<Shape> input_shape_;
    std::vector<std::uint32_t> argmax_;
};

// [n, C, T] <-> [n, C*T]
class Flatten {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

private:
    std::optional<Shape> input_shape_;
};

class Linear {
public:
    explicit Linear(LayerParams params);

    Tensor forward(const Tensor& a);
    // Stores dJ/dw, dJ/db and returns dJ/da computed with the current
    // (pre-update) weights.
    Tensor backward(const Tensor& grad_out);

    LayerParams& params() noexcept { return params_; }
    const LayerParams& params() const noexcept { return params_; }
    const Gradients& grads() const noexcept { return grads_; }

private:
    LayerParams params_;
    Gradients grads_;
    std::optional<Tensor> input_;
};

using Layer = std::variant<Conv1d, LeakyRelu, MaxPool1d, Flatten>;

// Ordered stack of client-side layers, run front to back.
class Sequential {
public:
    Sequential() = default;
    explicit Sequential(std::vector<Layer> layers) : layers_(std::move(layers)) {}

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

    // Adam on every parameterized layer using the gradients from the last backward.
    void adam_step(const AdamConfig& cfg);

    std::vector<Layer>& layers() noexcept { return layers_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Conv1d*> conv_layers();
    std::vector<const Conv1d*> conv_layers() const;

private:
    std::vector<Layer> layers_;
};

}  // namespace hesplit::nn
