#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hesplit/bytes.h"
#include "hesplit/nn/layers.h"

namespace hesplit::nn {

enum class LayerKind { conv1d, leaky_relu, maxpool1d, flatten, linear, softmax };

struct LayerDesc {
    LayerKind kind;
    std::size_t in_channels = 0;   // conv1d
    std::size_t out_channels = 0;  // conv1d
    std::size_t kernel = 0;        // conv1d
    std::size_t stride = 1;        // conv1d, maxpool1d
    std::size_t padding = 0;       // conv1d
    std::size_t width = 0;         // maxpool1d
    float slope = 0.0f;            // leaky_relu
    std::size_t in_features = 0;   // linear
    std::size_t out_features = 0;  // linear
};

// Layer graph with the split point. Layers [0, split_index] run on the
// client, then one Linear on the server, then Softmax back on the client.
struct ModelSpec {
    std::size_t input_channels = 1;
    std::size_t input_length = 128;
    std::vector<LayerDesc> layers;
    std::size_t split_index = 0;

    // Shape-checks the graph; raises DimensionError/ValueError on violations.
    void validate() const;
    std::size_t split_features() const;
    std::size_t classes() const;
    std::size_t depth() const noexcept { return layers.size(); }
    const LayerDesc& head() const;  // the Linear after the split
};

// Conv1D(1->8,m=5,pad=2) -> LeakyReLU -> MaxPool(2) -> Conv1D(8->8,m=5,pad=2)
// -> LeakyReLU -> MaxPool(2) -> Flatten (256) | Linear(256->5) | Softmax
ModelSpec m1_spec();

inline constexpr float kLeakySlope = 0.01f;

// Parameters of every weighted layer in graph order: the client convs, then the head.
struct ModelParams {
    std::vector<LayerParams> conv;
    LayerParams linear;
};

// Uniform in +-1/sqrt(fan_in) from a seeded mt19937; both split parties call
// this with the shared seed and keep their own part.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

// Same shapes as init_params, all zeros.
ModelParams zero_params(const ModelSpec& spec);

// Client-side stack [0, split_index] built from the spec.
Sequential build_client(const ModelSpec& spec, std::vector<LayerParams> conv_params);

// The unsplit network: client stack, linear head, softmax.
class LocalModel {
public:
    LocalModel(const ModelSpec& spec, ModelParams params);

    // [n,1,128] -> split activation [n,256]
    Tensor client_forward(const Tensor& x) { return client_.forward(x); }
    // [n,1,128] -> logits [n,5]
    Tensor forward(const Tensor& x);
    std::vector<int> predict(const Tensor& x);

    Sequential& client() noexcept { return client_; }
    Linear& head() noexcept { return head_; }
    const Sequential& client() const noexcept { return client_; }
    const Linear& head() const noexcept { return head_; }
    ModelParams params() const;

private:
    Sequential client_;
    Linear head_;
};

std::vector<int> argmax_rows(const Tensor& logits);

// "SFHE" checkpoint: magic, version byte, u32 layer count, then per layer a
// weight tensor and a bias tensor, each as u32 rank, u32 dims, f32 data.
inline constexpr std::uint8_t kCheckpointVersion = 1;
Bytes encode_checkpoint(const std::vector<LayerParams>& layers);
std::vector<LayerParams> decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::string& path, const std::vector<LayerParams>& layers);
std::vector<LayerParams> load_checkpoint(const std::string& path);

}  // namespace hesplit::nn
