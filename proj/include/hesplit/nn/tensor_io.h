#pragma once

#include "hesplit/bytes.h"
#include "hesplit/nn/tensor.h"

namespace hesplit::nn {

// u32 rank, u32 dims..., binary32 data; all little-endian.
void write_tensor(ByteWriter& w, const Tensor& t);
Tensor read_tensor(ByteReader& r);

inline std::size_t encoded_tensor_size(const Tensor& t) { return 4 + 4 * t.rank() + 4 * t.size(); }

}  // namespace hesplit::nn
