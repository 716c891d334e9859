#pragma once

#include <cstdint>
#include <vector>

namespace hesplit::ckks {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline u64 add_mod(u64 a, u64 b, u64 q) {
    const u64 s = a + b;
    return s >= q ? s - q : s;
}

inline u64 sub_mod(u64 a, u64 b, u64 q) { return a >= b ? a - b : a + q - b; }

inline u64 mul_mod(u64 a, u64 b, u64 q) { return static_cast<u64>(static_cast<u128>(a) * b % q); }

inline u64 neg_mod(u64 a, u64 q) { return a == 0 ? 0 : q - a; }

u64 pow_mod(u64 base, u64 exp, u64 q);
// q prime.
u64 inv_mod(u64 a, u64 q);

// Deterministic Miller-Rabin for 64-bit inputs.
bool is_prime(u64 n);

// Signed integer to its residue in [0, q).
inline u64 to_residue(std::int64_t v, u64 q) {
    if (v >= 0) return static_cast<u64>(v) % q;
    const u64 r = static_cast<u64>(-(v + 1)) % q;  // avoids overflow at INT64_MIN
    return q - 1 - r;
}

// Residue in [0, q) to the centred representative in (-q/2, q/2].
inline std::int64_t centered(u64 r, u64 q) {
    return r > q / 2 ? -static_cast<std::int64_t>(q - r) : static_cast<std::int64_t>(r);
}

// Multiplication by a fixed operand w with Shoup's precomputed floor(w*2^64/q).
struct ShoupOperand {
    u64 value = 0;
    u64 quotient = 0;

    ShoupOperand() = default;
    ShoupOperand(u64 w, u64 q) : value(w), quotient(static_cast<u64>((static_cast<u128>(w) << 64) / q)) {}
};

inline u64 mul_shoup(u64 x, const ShoupOperand& w, u64 q) {
    const u64 hi = static_cast<u64>((static_cast<u128>(x) * w.quotient) >> 64);
    const u64 r = x * w.value - hi * q;
    return r >= q ? r - q : r;
}

// Smallest primes p = 1 (mod 2N) with exactly `bits` bits, one per entry,
// all distinct. Raises ParameterError when a size has no unused prime left.
std::vector<u64> select_primes(const std::vector<int>& bits, std::size_t poly_degree);

}  // namespace hesplit::ckks
