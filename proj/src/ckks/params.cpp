#include "hesplit/ckks/params.h"

#include <bit>
#include <cmath>
#include <numeric>

#include "hesplit/ckks/modarith.h"
#include "hesplit/error.h"

namespace hesplit::ckks {

void Params::validate() const {
    if (!std::has_single_bit(poly_degree)) {
        throw ParameterError("polynomial modulus degree " + std::to_string(poly_degree) + " is not a power of two");
    }
    if (poly_degree != 2048 && poly_degree != 4096 && poly_degree != 8192) {
        throw ParameterError("polynomial modulus degree must be 2048, 4096 or 8192");
    }
    if (coeff_bits.size() < 3) {
        throw ParameterError("coefficient modulus chain needs at least 3 primes, got " +
                             std::to_string(coeff_bits.size()));
    }
    const int min_bits = std::countr_zero(2 * poly_degree) + 1;
    for (int b : coeff_bits) {
        if (b < min_bits || b > 60) {
            throw ParameterError("prime size " + std::to_string(b) + " bits outside [" + std::to_string(min_bits) +
                                 ", 60]");
        }
    }
    if (scale_bits < 1 || scale_bits > 60) throw ParameterError("scale must be between 2^1 and 2^60");
    select_primes(coeff_bits, poly_degree);
}

bool Params::below_standard_security() const {
    // Largest total modulus size for 128-bit classical security with a ternary secret.
    const int max_bits = poly_degree <= 1024 ? 27 : poly_degree == 2048 ? 54 : poly_degree == 4096 ? 109 : 218;
    return std::accumulate(coeff_bits.begin(), coeff_bits.end(), 0) > max_bits;
}

double Params::scale() const { return std::ldexp(1.0, scale_bits); }

std::string Params::describe() const {
    std::string s = "(" + std::to_string(poly_degree) + ", [";
    for (std::size_t i = 0; i < coeff_bits.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(coeff_bits[i]);
    }
    return s + "], 2^" + std::to_string(scale_bits) + ")";
}

}  // namespace hesplit::ckks
