#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hesplit::ckks {

// Polynomial degree, coefficient-modulus bit sizes and scale. The last chain
// entry is the special prime used only while encrypting; the rest are the
// data levels.
struct Params {
    std::size_t poly_degree = 4096;
    std::vector<int> coeff_bits{40, 20, 20};
    int scale_bits = 21;
    // Test-only: sample every error term as zero.
    bool noise_free = false;

    // Raises ParameterError on a malformed set.
    void validate() const;
    // Below the usual 128-bit parameter bounds; reported, not rejected.
    bool below_standard_security() const;
    std::size_t slots() const noexcept { return poly_degree / 2; }
    double scale() const;
    // Data levels minus one: the index of the top level.
    std::size_t max_level() const noexcept { return coeff_bits.size() - 2; }
    std::string describe() const;

    friend bool operator==(const Params&, const Params&) = default;
};

}  // namespace hesplit::ckks
