#include "hesplit/nn/layers.h"

namespace hesplit::nn {

namespace {

template <typename T>
const T& cached(const std::optional<T>& c, const char* layer) {
    if (!c) throw InvalidStateError(std::string(layer) + " backward called without a cached forward input");
    return *c;
}

}  // namespace

Conv1d::Conv1d(LayerParams params, std::size_t stride, std::size_t padding)
    : params_(std::move(params)), stride_(stride), padding_(padding) {
    require_rank(params_.weight, 3, "conv1d weight");
    if (params_.bias.rank() != 1 || params_.bias.dim(0) != params_.weight.dim(0)) {
        throw DimensionError("conv1d bias must be [out_channels]", "bias");
    }
}

Tensor Conv1d::forward(const Tensor& x) {
    Tensor y = conv1d_forward(x, params_.weight, params_.bias, stride_, padding_);
    input_ = x;
    return y;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
    const Tensor& x = cached(input_, "conv1d");
    auto g = conv1d_backward(grad_out, x, params_.weight, stride_, padding_);
    grads_.weight = std::move(g.weight);
    grads_.bias = std::move(g.bias);
    return std::move(g.input);
}

Tensor LeakyRelu::forward(const Tensor& x) {
    input_ = x;
    return leaky_relu_forward(x, slope_);
}

Tensor LeakyRelu::backward(const Tensor& grad_out) {
    return leaky_relu_backward(grad_out, cached(input_, "leaky_relu"), slope_);
}

Tensor MaxPool1d::forward(const Tensor& x) {
    auto r = maxpool1d_forward(x, width_, stride_);
    input_shape_ = x.shape();
    argmax_ = std::move(r.argmax);
    return std::move(r.output);
}

Tensor MaxPool1d::backward(const Tensor& grad_out) {
    return maxpool1d_backward(grad_out, argmax_, cached(input_shape_, "maxpool1d"));
}

Tensor Flatten::forward(const Tensor& x) {
    input_shape_ = x.shape();
    return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

Tensor Flatten::backward(const Tensor& grad_out) {
    return grad_out.reshaped(cached(input_shape_, "flatten"));
}

Linear::Linear(LayerParams params) : params_(std::move(params)) {
    require_rank(params_.weight, 2, "linear weight");
    if (params_.bias.rank() != 1 || params_.bias.dim(0) != params_.weight.dim(0)) {
        throw DimensionError("linear bias must be [out_features]", "bias");
    }
}

Tensor Linear::forward(const Tensor& a) {
    Tensor y = linear_forward(a, params_.weight, params_.bias);
    input_ = a;
    return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
    const Tensor& a = cached(input_, "linear");
    grads_.weight = linear_weight_grad(grad_out, a);
    grads_.bias = linear_bias_grad(grad_out);
    return linear_input_grad(grad_out, params_.weight);
}

Tensor Sequential::forward(const Tensor& x) {
    Tensor h = x;
    for (auto& layer : layers_) {
        h = std::visit([&](auto& l) { return l.forward(h); }, layer);
    }
    return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = std::visit([&](auto& l) { return l.backward(g); }, *it);
    }
    return g;
}

void Sequential::adam_step(const AdamConfig& cfg) {
    for (Conv1d* conv : conv_layers()) nn::adam_step(conv->params(), conv->grads(), cfg);
}

std::vector<Conv1d*> Sequential::conv_layers() {
    std::vector<Conv1d*> out;
    for (auto& layer : layers_) {
        if (auto* c = std::get_if<Conv1d>(&layer)) out.push_back(c);
    }
    return out;
}

std::vector<const Conv1d*> Sequential::conv_layers() const {
    std::vector<const Conv1d*> out;
    for (const auto& layer : layers_) {
        if (const auto* c = std::get_if<Conv1d>(&layer)) out.push_back(c);
    }
    return out;
}

}  // namespace hesplit::nn
