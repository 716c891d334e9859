#include "hesplit/ckks/modarith.h"

#include <algorithm>
#include <string>

#include "hesplit/error.h"

namespace hesplit::ckks {

u64 pow_mod(u64 base, u64 exp, u64 q) {
    u64 result = 1 % q;
    base %= q;
    while (exp) {
        if (exp & 1) result = mul_mod(result, base, q);
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    return result;
}

u64 inv_mod(u64 a, u64 q) {
    if (a % q == 0) throw ValueError("zero has no modular inverse");
    return pow_mod(a, q - 2, q);
}

bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        u64 x = pow_mod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = mul_mod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

std::vector<u64> select_primes(const std::vector<int>& bits, std::size_t poly_degree) {
    const u64 step = 2 * static_cast<u64>(poly_degree);
    std::vector<u64> primes;
    for (int b : bits) {
        const u64 lo = u64{1} << (b - 1), hi = u64{1} << b;
        u64 candidate = (lo / step) * step + 1;
        if (candidate < lo) candidate += step;
        bool found = false;
        for (; candidate < hi; candidate += step) {
            if (is_prime(candidate) && std::find(primes.begin(), primes.end(), candidate) == primes.end()) {
                found = true;
                break;
            }
        }
        if (!found) {
            throw ParameterError("no unused " + std::to_string(b) + "-bit prime = 1 mod " + std::to_string(step));
        }
        primes.push_back(candidate);
    }
    return primes;
}

}  // namespace hesplit::ckks
