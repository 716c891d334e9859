#include "hesplit/nn/tensor_io.h"

namespace hesplit::nn {

namespace {
constexpr std::uint32_t kMaxRank = 8;
}

void write_tensor(ByteWriter& w, const Tensor& t) {
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.data()) w.f32(v);
}

Tensor read_tensor(ByteReader& r) {
    const std::uint32_t rank = r.u32("tensor rank");
    if (rank == 0 || rank > kMaxRank) throw ProtocolError("tensor rank " + std::to_string(rank) + " out of range");
    Shape shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
        d = r.u32("tensor dim");
        if (d == 0) throw ProtocolError("tensor has a zero dimension");
        count *= d;
    }
    if (count > r.remaining() / 4) throw ProtocolError("tensor data truncated");
    std::vector<float> data(count);
    for (auto& v : data) v = r.f32("tensor data");
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace hesplit::nn
