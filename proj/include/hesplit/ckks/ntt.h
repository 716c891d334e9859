#pragma once

#include <span>
#include <vector>

#include "hesplit/ckks/modarith.h"

namespace hesplit::ckks {

// Negacyclic number-theoretic transform over Z_q[X]/(X^N + 1). Forward
// output is in bit-reversed order; pointwise products of two forward
// transforms invert to the negacyclic convolution.
class NttTables {
public:
    NttTables(std::size_t n, u64 q);

    void forward(std::span<u64> a) const;
    void inverse(std::span<u64> a) const;

    std::size_t size() const noexcept { return n_; }
    u64 modulus() const noexcept { return q_; }
    // Primitive 2N-th root of unity used for the transform.
    u64 root() const noexcept { return root_; }

private:
    std::size_t n_;
    u64 q_;
    u64 root_;
    std::vector<ShoupOperand> roots_rev_;
    std::vector<ShoupOperand> inv_roots_rev_;
    ShoupOperand n_inv_;
};

}  // namespace hesplit::ckks
