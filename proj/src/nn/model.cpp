#include "hesplit/nn/model.h"

#include <cmath>
#include <random>

#include "hesplit/nn/tensor_io.h"

namespace hesplit::nn {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'H', 'E'};

// Portable [0,1) from mt19937's fully specified output sequence.
float unit_float(std::mt19937& rng) { return static_cast<float>(rng() >> 8) * 0x1.0p-24f; }

Tensor uniform_tensor(Shape shape, float bound, std::mt19937& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = (2.0f * unit_float(rng) - 1.0f) * bound;
    return t;
}

}  // namespace

void ModelSpec::validate() const {
    if (layers.empty()) throw ValueError("model has no layers");
    if (split_index >= layers.size()) throw ValueError("split index past the last layer");
    std::size_t channels = input_channels, length = input_length, features = 0;
    bool flat = false;
    std::size_t linears_after_split = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const std::string where = "layer " + std::to_string(i);
        switch (l.kind) {
            case LayerKind::conv1d:
                if (flat) throw ValueError(where + ": conv1d after flatten");
                if (i > split_index) throw ValueError(where + ": conv1d on the server side");
                if (l.in_channels != channels) throw DimensionError(where + ": conv1d in_channels mismatch", "channel");
                if (l.kernel == 0 || l.kernel > length + 2 * l.padding || l.stride == 0) {
                    throw DimensionError(where + ": conv1d kernel does not fit", "time");
                }
                length = (length + 2 * l.padding - l.kernel) / l.stride + 1;
                channels = l.out_channels;
                break;
            case LayerKind::leaky_relu:
                break;
            case LayerKind::maxpool1d:
                if (flat) throw ValueError(where + ": maxpool after flatten");
                if (l.width == 0 || l.width > length || l.stride == 0) {
                    throw DimensionError(where + ": pool window does not fit", "time");
                }
                length = (length - l.width) / l.stride + 1;
                break;
            case LayerKind::flatten:
                flat = true;
                features = channels * length;
                break;
            case LayerKind::linear:
                if (i <= split_index) throw ValueError(where + ": linear on the client side");
                if (!flat) throw ValueError(where + ": linear before flatten");
                if (l.in_features != features) throw DimensionError(where + ": linear in_features mismatch", "feature");
                features = l.out_features;
                ++linears_after_split;
                break;
            case LayerKind::softmax:
                if (i != layers.size() - 1) throw ValueError(where + ": softmax must be last");
                break;
        }
    }
    if (layers[split_index].kind != LayerKind::flatten) throw ValueError("split layer must flatten the activation");
    if (linears_after_split != 1) throw ValueError("exactly one linear layer must follow the split");
    if (layers.back().kind != LayerKind::softmax) throw ValueError("model must end in softmax");
}

std::size_t ModelSpec::split_features() const { return head().in_features; }
std::size_t ModelSpec::classes() const { return head().out_features; }

const LayerDesc& ModelSpec::head() const {
    for (std::size_t i = split_index + 1; i < layers.size(); ++i) {
        if (layers[i].kind == LayerKind::linear) return layers[i];
    }
    throw ValueError("model has no linear head");
}

ModelSpec m1_spec() {
    ModelSpec s;
    s.input_channels = 1;
    s.input_length = 128;
    auto conv = [](std::size_t in, std::size_t out) {
        LayerDesc d{LayerKind::conv1d};
        d.in_channels = in;
        d.out_channels = out;
        d.kernel = 5;
        d.stride = 1;
        d.padding = 2;
        return d;
    };
    LayerDesc act{LayerKind::leaky_relu};
    act.slope = kLeakySlope;
    LayerDesc pool{LayerKind::maxpool1d};
    pool.width = 2;
    pool.stride = 2;
    LayerDesc head{LayerKind::linear};
    head.in_features = 256;
    head.out_features = 5;
    s.layers = {conv(1, 8), act, pool, conv(8, 8), act, pool, LayerDesc{LayerKind::flatten}, head,
                LayerDesc{LayerKind::softmax}};
    s.split_index = 6;
    s.validate();
    return s;
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::mt19937 rng(seq);
    ModelParams p;
    for (const auto& l : spec.layers) {
        if (l.kind == LayerKind::conv1d) {
            const float bound = 1.0f / std::sqrt(static_cast<float>(l.in_channels * l.kernel));
            LayerParams lp;
            lp.weight = uniform_tensor({l.out_channels, l.in_channels, l.kernel}, bound, rng);
            lp.bias = uniform_tensor({l.out_channels}, bound, rng);
            p.conv.push_back(std::move(lp));
        } else if (l.kind == LayerKind::linear) {
            const float bound = 1.0f / std::sqrt(static_cast<float>(l.in_features));
            p.linear.weight = uniform_tensor({l.out_features, l.in_features}, bound, rng);
            p.linear.bias = uniform_tensor({l.out_features}, bound, rng);
        }
    }
    return p;
}

ModelParams zero_params(const ModelSpec& spec) {
    ModelParams p = init_params(spec, 0);
    for (auto& c : p.conv) {
        c.weight.fill(0.0f);
        c.bias.fill(0.0f);
    }
    p.linear.weight.fill(0.0f);
    p.linear.bias.fill(0.0f);
    return p;
}

Sequential build_client(const ModelSpec& spec, std::vector<LayerParams> conv_params) {
    std::vector<Layer> layers;
    std::size_t next_conv = 0;
    for (std::size_t i = 0; i <= spec.split_index; ++i) {
        const auto& l = spec.layers[i];
        switch (l.kind) {
            case LayerKind::conv1d: {
                if (next_conv >= conv_params.size()) throw ValueError("not enough conv parameters for the model");
                auto& lp = conv_params[next_conv++];
                if (lp.weight.shape() != Shape{l.out_channels, l.in_channels, l.kernel}) {
                    throw DimensionError("conv weight shape " + shape_string(lp.weight.shape()) +
                                             " does not match the model",
                                         "weight");
                }
                layers.emplace_back(Conv1d(std::move(lp), l.stride, l.padding));
                break;
            }
            case LayerKind::leaky_relu:
                layers.emplace_back(LeakyRelu(l.slope));
                break;
            case LayerKind::maxpool1d:
                layers.emplace_back(MaxPool1d(l.width, l.stride));
                break;
            case LayerKind::flatten:
                layers.emplace_back(Flatten{});
                break;
            default:
                throw ValueError("unexpected layer on the client side");
        }
    }
    if (next_conv != conv_params.size()) throw ValueError("too many conv parameters for the model");
    return Sequential(std::move(layers));
}

LocalModel::LocalModel(const ModelSpec& spec, ModelParams params)
    : client_(build_client(spec, std::move(params.conv))), head_(std::move(params.linear)) {
    const auto& h = spec.head();
    if (head_.params().weight.shape() != Shape{h.out_features, h.in_features}) {
        throw DimensionError("linear weight shape does not match the model", "weight");
    }
}

Tensor LocalModel::forward(const Tensor& x) { return head_.forward(client_.forward(x)); }

std::vector<int> LocalModel::predict(const Tensor& x) { return argmax_rows(forward(x)); }

ModelParams LocalModel::params() const {
    ModelParams p;
    for (const Conv1d* c : client_.conv_layers()) p.conv.push_back(c->params());
    p.linear = head_.params();
    return p;
}

std::vector<int> argmax_rows(const Tensor& logits) {
    require_rank(logits, 2, "argmax input");
    std::vector<int> out(logits.dim(0));
    for (std::size_t b = 0; b < logits.dim(0); ++b) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.dim(1); ++j) {
            if (logits.at(b, j) > logits.at(b, best)) best = j;
        }
        out[b] = static_cast<int>(best);
    }
    return out;
}

Bytes encode_checkpoint(const std::vector<LayerParams>& layers) {
    ByteWriter w;
    for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
    w.u8(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(layers.size()));
    for (const auto& l : layers) {
        write_tensor(w, l.weight);
        write_tensor(w, l.bias);
    }
    return std::move(w).take();
}

std::vector<LayerParams> decode_checkpoint(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    for (char c : kMagic) {
        if (r.u8("checkpoint magic") != static_cast<std::uint8_t>(c)) throw ProtocolError("not an SFHE checkpoint");
    }
    const auto version = r.u8("checkpoint version");
    if (version != kCheckpointVersion) {
        throw ProtocolError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = r.u32("layer count");
    std::vector<LayerParams> layers;
    for (std::uint32_t i = 0; i < count; ++i) {
        LayerParams lp;
        lp.weight = read_tensor(r);
        lp.bias = read_tensor(r);
        layers.push_back(std::move(lp));
    }
    r.expect_end("checkpoint");
    return layers;
}

void save_checkpoint(const std::string& path, const std::vector<LayerParams>& layers) {
    write_file(path, encode_checkpoint(layers));
}

std::vector<LayerParams> load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

}  // namespace hesplit::nn
