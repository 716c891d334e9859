#include "hesplit/ckks/ntt.h"

#include <bit>

#include "hesplit/error.h"

namespace hesplit::ckks {

namespace {

std::size_t bit_reverse(std::size_t x, int bits) {
    std::size_t r = 0;
    for (int i = 0; i < bits; ++i) r |= ((x >> i) & 1) << (bits - 1 - i);
    return r;
}

u64 find_root(std::size_t n, u64 q) {
    const u64 order = 2 * static_cast<u64>(n);
    if ((q - 1) % order != 0) throw ParameterError("modulus is not 1 mod 2N");
    // c = x^((q-1)/2N) has order dividing 2N; c^N = -1 pins it to exactly 2N.
    for (u64 x = 2; x < q; ++x) {
        const u64 c = pow_mod(x, (q - 1) / order, q);
        if (pow_mod(c, n, q) == q - 1) return c;
    }
    throw ParameterError("no primitive 2N-th root of unity");
}

}  // namespace

NttTables::NttTables(std::size_t n, u64 q) : n_(n), q_(q), root_(find_root(n, q)) {
    const int log_n = std::countr_zero(n);
    const u64 inv_root = inv_mod(root_, q);
    roots_rev_.resize(n);
    inv_roots_rev_.resize(n);
    u64 p = 1, ip = 1;
    std::vector<u64> pow(n), ipow(n);
    for (std::size_t i = 0; i < n; ++i) {
        pow[i] = p;
        ipow[i] = ip;
        p = mul_mod(p, root_, q);
        ip = mul_mod(ip, inv_root, q);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = bit_reverse(i, log_n);
        roots_rev_[i] = ShoupOperand(pow[r], q);
        inv_roots_rev_[i] = ShoupOperand(ipow[r], q);
    }
    n_inv_ = ShoupOperand(inv_mod(static_cast<u64>(n), q), q);
}

namespace {

// Shoup product without the final correction: result in [0, 2q).
inline u64 mul_shoup_lazy(u64 x, const ShoupOperand& w, u64 q) {
    const u64 hi = static_cast<u64>((static_cast<u128>(x) * w.quotient) >> 64);
    return x * w.value - hi * q;
}

}  // namespace

// Butterflies keep values in [0, 4q) and reduce once at the end; moduli are
// at most 60 bits so nothing overflows.
void NttTables::forward(std::span<u64> a) const {
    const u64 q = q_, two_q = 2 * q_;
    u64* x = a.data();
    std::size_t t = n_;
    for (std::size_t m = 1; m < n_; m <<= 1) {
        t >>= 1;
        for (std::size_t i = 0; i < m; ++i) {
            const ShoupOperand s = roots_rev_[m + i];
            u64* lo = x + 2 * i * t;
            u64* hi = lo + t;
            for (std::size_t j = 0; j < t; ++j) {
                u64 u = lo[j];
                if (u >= two_q) u -= two_q;
                const u64 v = mul_shoup_lazy(hi[j], s, q);
                lo[j] = u + v;
                hi[j] = u - v + two_q;
            }
        }
    }
    for (std::size_t j = 0; j < n_; ++j) {
        u64 v = x[j];
        if (v >= two_q) v -= two_q;
        x[j] = v >= q ? v - q : v;
    }
}

void NttTables::inverse(std::span<u64> a) const {
    const u64 q = q_, two_q = 2 * q_;
    u64* x = a.data();
    std::size_t t = 1;
    for (std::size_t m = n_; m > 1; m >>= 1) {
        const std::size_t h = m >> 1;
        for (std::size_t i = 0; i < h; ++i) {
            const ShoupOperand s = inv_roots_rev_[h + i];
            u64* lo = x + 2 * i * t;
            u64* hi = lo + t;
            for (std::size_t j = 0; j < t; ++j) {
                const u64 u = lo[j], v = hi[j];
                u64 sum = u + v;
                if (sum >= two_q) sum -= two_q;
                lo[j] = sum;
                hi[j] = mul_shoup_lazy(u - v + two_q, s, q);
            }
        }
        t <<= 1;
    }
    for (std::size_t j = 0; j < n_; ++j) {
        const u64 v = mul_shoup_lazy(x[j], n_inv_, q);
        x[j] = v >= q ? v - q : v;
    }
}

}  // namespace hesplit::ckks
