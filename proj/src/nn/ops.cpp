#include "hesplit/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace hesplit::nn {

namespace {

std::size_t conv_out_len(std::size_t len, std::size_t kernel, std::size_t stride, std::size_t padding) {
    if (stride == 0) throw DimensionError("conv1d stride must be positive", "stride");
    if (kernel > len + 2 * padding) {
        throw DimensionError("kernel size " + std::to_string(kernel) + " exceeds padded length " +
                                 std::to_string(len + 2 * padding),
                             "time");
    }
    return (len + 2 * padding - kernel) / stride + 1;
}

template <typename T>
void check_conv_shapes(const BasicTensor<T>& x, const BasicTensor<T>& weight) {
    require_rank(x, 3, "conv1d input");
    require_rank(weight, 3, "conv1d weight");
    if (x.dim(1) != weight.dim(1)) {
        throw DimensionError("conv1d input has " + std::to_string(x.dim(1)) + " channels, weight expects " +
                                 std::to_string(weight.dim(1)),
                             "channel");
    }
}

}  // namespace

template <typename T>
BasicTensor<T> conv1d_forward(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                              std::size_t stride, std::size_t padding) {
    check_conv_shapes(x, weight);
    const std::size_t n = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::size_t cout = weight.dim(0), m = weight.dim(2);
    if (bias.rank() != 1 || bias.dim(0) != cout) throw DimensionError("conv1d bias must be [out_channels]", "bias");
    const std::size_t out_len = conv_out_len(len, m, stride, padding);

    BasicTensor<T> y({n, cout, out_len});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t co = 0; co < cout; ++co) {
            for (std::size_t t = 0; t < out_len; ++t) {
                T acc = bias[co];
                for (std::size_t ci = 0; ci < cin; ++ci) {
                    for (std::size_t k = 0; k < m; ++k) {
                        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * stride + k) -
                                                   static_cast<std::ptrdiff_t>(padding);
                        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) continue;
                        acc += weight.at(co, ci, k) * x.at(b, ci, static_cast<std::size_t>(pos));
                    }
                }
                y.at(b, co, t) = acc;
            }
        }
    }
    return y;
}

template <typename T>
ParamGrads<T> conv1d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x, const BasicTensor<T>& weight,
                              std::size_t stride, std::size_t padding) {
    check_conv_shapes(x, weight);
    const std::size_t n = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::size_t cout = weight.dim(0), m = weight.dim(2);
    const std::size_t out_len = conv_out_len(len, m, stride, padding);
    if (grad_out.shape() != Shape{n, cout, out_len}) {
        throw DimensionError("conv1d grad_out " + shape_string(grad_out.shape()) + " does not match output " +
                                 shape_string({n, cout, out_len}),
                             "grad_out");
    }

    ParamGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weight.shape()), BasicTensor<T>({cout})};
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t co = 0; co < cout; ++co) {
            for (std::size_t t = 0; t < out_len; ++t) {
                const T go = grad_out.at(b, co, t);
                g.bias[co] += go;
                for (std::size_t ci = 0; ci < cin; ++ci) {
                    for (std::size_t k = 0; k < m; ++k) {
                        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * stride + k) -
                                                   static_cast<std::ptrdiff_t>(padding);
                        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) continue;
                        const auto p = static_cast<std::size_t>(pos);
                        g.weight.at(co, ci, k) += go * x.at(b, ci, p);
                        g.input.at(b, ci, p) += go * weight.at(co, ci, k);
                    }
                }
            }
        }
    }
    return g;
}

template <typename T>
BasicTensor<T> leaky_relu_forward(const BasicTensor<T>& x, T slope) {
    BasicTensor<T> y = x;
    for (auto& v : y.data()) {
        if (v < T{0}) v *= slope;
    }
    return y;
}

template <typename T>
BasicTensor<T> leaky_relu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x, T slope) {
    if (grad_out.shape() != x.shape()) throw DimensionError("leaky_relu grad shape mismatch", "grad_out");
    BasicTensor<T> g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] < T{0}) g[i] *= slope;
    }
    return g;
}

template <typename T>
PoolResult<T> maxpool1d_forward(const BasicTensor<T>& x, std::size_t width, std::size_t stride) {
    require_rank(x, 3, "maxpool1d input");
    if (width == 0 || stride == 0) throw DimensionError("maxpool1d width and stride must be positive", "width");
    const std::size_t n = x.dim(0), c = x.dim(1), len = x.dim(2);
    if (width > len) {
        throw DimensionError("maxpool1d window " + std::to_string(width) + " exceeds input length " +
                                 std::to_string(len),
                             "time");
    }
    const std::size_t out_len = (len - width) / stride + 1;
    PoolResult<T> r{BasicTensor<T>({n, c, out_len}), std::vector<std::uint32_t>(n * c * out_len)};
    for (std::size_t row = 0; row < n * c; ++row) {
        const std::size_t base = row * len;
        for (std::size_t t = 0; t < out_len; ++t) {
            std::size_t best = base + t * stride;
            for (std::size_t k = 1; k < width; ++k) {
                const std::size_t idx = base + t * stride + k;
                if (x[idx] > x[best]) best = idx;
            }
            r.output[row * out_len + t] = x[best];
            r.argmax[row * out_len + t] = static_cast<std::uint32_t>(best);
        }
    }
    return r;
}

template <typename T>
BasicTensor<T> maxpool1d_backward(const BasicTensor<T>& grad_out, const std::vector<std::uint32_t>& argmax,
                                  const Shape& input_shape) {
    if (grad_out.size() != argmax.size()) throw DimensionError("maxpool1d grad does not match cache", "grad_out");
    BasicTensor<T> g(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_out[i];
    return g;
}

template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& a, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
    require_rank(a, 2, "linear input");
    require_rank(weight, 2, "linear weight");
    const std::size_t n = a.dim(0), in = a.dim(1), out = weight.dim(0);
    if (weight.dim(1) != in) {
        throw DimensionError("linear input has " + std::to_string(in) + " features, weight expects " +
                                 std::to_string(weight.dim(1)),
                             "feature");
    }
    if (bias.rank() != 1 || bias.dim(0) != out) throw DimensionError("linear bias must be [out_features]", "bias");
    BasicTensor<T> y({n, out});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t j = 0; j < out; ++j) {
            T acc = bias[j];
            for (std::size_t i = 0; i < in; ++i) acc += a.at(b, i) * weight.at(j, i);
            y.at(b, j) = acc;
        }
    }
    return y;
}

template <typename T>
BasicTensor<T> linear_weight_grad(const BasicTensor<T>& grad_out, const BasicTensor<T>& a) {
    require_rank(grad_out, 2, "linear grad_out");
    require_rank(a, 2, "linear input");
    if (grad_out.dim(0) != a.dim(0)) throw DimensionError("linear grad batch mismatch", "batch");
    const std::size_t n = a.dim(0), in = a.dim(1), out = grad_out.dim(1);
    BasicTensor<T> gw({out, in});
    for (std::size_t j = 0; j < out; ++j) {
        for (std::size_t i = 0; i < in; ++i) {
            T acc{0};
            for (std::size_t b = 0; b < n; ++b) acc += grad_out.at(b, j) * a.at(b, i);
            gw.at(j, i) = acc;
        }
    }
    return gw;
}

template <typename T>
BasicTensor<T> linear_bias_grad(const BasicTensor<T>& grad_out) {
    require_rank(grad_out, 2, "linear grad_out");
    BasicTensor<T> gb({grad_out.dim(1)});
    for (std::size_t b = 0; b < grad_out.dim(0); ++b) {
        for (std::size_t j = 0; j < grad_out.dim(1); ++j) gb[j] += grad_out.at(b, j);
    }
    return gb;
}

template <typename T>
BasicTensor<T> linear_input_grad(const BasicTensor<T>& grad_out, const BasicTensor<T>& weight) {
    require_rank(grad_out, 2, "linear grad_out");
    require_rank(weight, 2, "linear weight");
    if (grad_out.dim(1) != weight.dim(0)) throw DimensionError("linear grad_out width mismatch", "feature");
    const std::size_t n = grad_out.dim(0), out = weight.dim(0), in = weight.dim(1);
    BasicTensor<T> ga({n, in});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t i = 0; i < in; ++i) {
            T acc{0};
            for (std::size_t j = 0; j < out; ++j) acc += grad_out.at(b, j) * weight.at(j, i);
            ga.at(b, i) = acc;
        }
    }
    return ga;
}

template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const BasicTensor<T>& logits, const std::vector<int>& labels) {
    require_rank(logits, 2, "softmax logits");
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    if (labels.size() != n) throw DimensionError("label count does not match batch", "batch");
    SoftmaxLoss<T> r{BasicTensor<T>(logits.shape()), T{0}, BasicTensor<T>(logits.shape())};
    const T inv_n = T{1} / static_cast<T>(n);
    for (std::size_t b = 0; b < n; ++b) {
        const int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= k) {
            throw ValueError("label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
        }
        T mx = logits.at(b, 0);
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, logits.at(b, j));
        T sum{0};
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(logits.at(b, j) - mx);
        const T log_sum = std::log(sum);
        for (std::size_t j = 0; j < k; ++j) {
            const T p = std::exp(logits.at(b, j) - mx) / sum;
            r.probs.at(b, j) = p;
            r.grad.at(b, j) = (p - (static_cast<std::size_t>(y) == j ? T{1} : T{0})) * inv_n;
        }
        r.loss += log_sum - (logits.at(b, static_cast<std::size_t>(y)) - mx);
    }
    r.loss *= inv_n;
    return r;
}

#define HESPLIT_INSTANTIATE(T)                                                                                   \
    template BasicTensor<T> conv1d_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                           std::size_t, std::size_t);                                          \
    template ParamGrads<T> conv1d_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                           std::size_t, std::size_t);                                          \
    template BasicTensor<T> leaky_relu_forward(const BasicTensor<T>&, T);                                       \
    template BasicTensor<T> leaky_relu_backward(const BasicTensor<T>&, const BasicTensor<T>&, T);               \
    template PoolResult<T> maxpool1d_forward(const BasicTensor<T>&, std::size_t, std::size_t);                  \
    template BasicTensor<T> maxpool1d_backward(const BasicTensor<T>&, const std::vector<std::uint32_t>&,        \
                                               const Shape&);                                                   \
    template BasicTensor<T> linear_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
    template BasicTensor<T> linear_weight_grad(const BasicTensor<T>&, const BasicTensor<T>&);                   \
    template BasicTensor<T> linear_bias_grad(const BasicTensor<T>&);                                            \
    template BasicTensor<T> linear_input_grad(const BasicTensor<T>&, const BasicTensor<T>&);                    \
    template SoftmaxLoss<T> softmax_cross_entropy(const BasicTensor<T>&, const std::vector<int>&);

HESPLIT_INSTANTIATE(float)
HESPLIT_INSTANTIATE(double)

#undef HESPLIT_INSTANTIATE

}  // namespace hesplit::nn
