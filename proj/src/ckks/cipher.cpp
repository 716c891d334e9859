#include "hesplit/ckks/cipher.h"

#include <bit>
#include <cmath>

#include "hesplit/error.h"
#include "sampler.h"

namespace hesplit::ckks {

namespace {

using Rows = std::vector<std::vector<u64>>;

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Replaces rows[0..k-1] by round(c / q_k) where q_k = moduli[k] is the last row's prime.
void divide_round_last(Rows& rows, const std::vector<u64>& moduli) {
    const std::size_t k = rows.size() - 1;
    const u64 qk = moduli[k];
    const u64 half = qk >> 1;
    const auto& last = rows[k];
    for (std::size_t i = 0; i < k; ++i) {
        const u64 q = moduli[i];
        const ShoupOperand inv(inv_mod(qk % q, q), q);
        const u64 half_q = half % q;
        auto& row = rows[i];
        for (std::size_t c = 0; c < row.size(); ++c) {
            const u64 t = add_mod(last[c], half, qk) % q;  // (c_k + q_k/2) mod q_k, lifted to q
            const u64 v = sub_mod(add_mod(row[c], half_q, q), t, q);
            row[c] = mul_shoup(v, inv, q);
        }
    }
    rows.pop_back();
}

std::vector<u64> level_primes(const ContextData& ctx, std::size_t level) {
    return {ctx.primes().begin(), ctx.primes().begin() + static_cast<std::ptrdiff_t>(level) + 1};
}

void check_level(const ContextData& ctx, std::size_t level, std::size_t rows, const char* what) {
    if (level > ctx.max_level()) throw LevelError(std::string(what) + " level beyond the modulus chain");
    if (rows != level + 1) throw LevelError(std::string(what) + " has " + std::to_string(rows) + " rows for level " +
                                            std::to_string(level));
}

void check_same_level(const Ciphertext& a, std::size_t level) {
    if (a.level != level) {
        throw LevelError("operand levels differ: " + std::to_string(a.level) + " vs " + std::to_string(level));
    }
}

void check_same_scale(double a, double b) {
    if (std::abs(a - b) > 1e-9 * std::max(a, b)) throw ValueError("operand scales differ");
}

u64 residue_of(__int128 v, u64 q) {
    const bool neg = v < 0;
    const auto mag = static_cast<unsigned __int128>(neg ? -v : v);
    const u64 r = static_cast<u64>(mag % q);
    return neg ? neg_mod(r, q) : r;
}

// Rounds `x` to an integer and checks it fits q_0 * ... * q_level.
__int128 scaled_integer(long double x, long double half_modulus) {
    if (!std::isfinite(x)) throw PrecisionError("encoded value is not finite");
    const long double r = roundl(x);
    const long double mag = fabsl(r);
    if (mag >= half_modulus || mag >= 0x1.0p126L) throw PrecisionError("scaled value exceeds the coefficient modulus");
    const long double hi = floorl(mag * 0x1.0p-64L);
    const long double lo = mag - hi * 0x1.0p64L;
    const auto m = (static_cast<__int128>(static_cast<u64>(hi)) << 64) | static_cast<u64>(lo);
    return r < 0 ? -m : m;
}

long double half_modulus(const ContextData& ctx, std::size_t level) {
    long double q = 0.5L;
    for (std::size_t i = 0; i <= level; ++i) q *= static_cast<long double>(ctx.primes()[i]);
    return q;
}

// Balanced mixed-radix reconstruction of the centred lift, one value per coefficient.
std::vector<long double> crt_lift(const ContextData& ctx, const RnsPoly& poly) {
    const std::size_t k = poly.prime_count();
    const std::size_t n = ctx.poly_degree();
    const auto& q = ctx.primes();
    // radix[i][j] = q_0 * ... * q_{j-1} mod q_i for j <= i
    std::vector<std::vector<u64>> radix(k);
    std::vector<u64> radix_inv(k);
    for (std::size_t i = 0; i < k; ++i) {
        radix[i].resize(i + 1);
        u64 p = 1 % q[i];
        for (std::size_t j = 0; j <= i; ++j) {
            radix[i][j] = p;
            if (j < i) p = mul_mod(p, q[j] % q[i], q[i]);
        }
        radix_inv[i] = i == 0 ? 1 : inv_mod(radix[i][i], q[i]);
    }
    std::vector<long double> out(n);
    std::vector<std::int64_t> digits(k);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < k; ++i) {
            u64 partial = 0;
            for (std::size_t j = 0; j < i; ++j) {
                partial = add_mod(partial, mul_mod(to_residue(digits[j], q[i]), radix[i][j], q[i]), q[i]);
            }
            const u64 d = mul_mod(sub_mod(poly.rows[i][c], partial, q[i]), radix_inv[i], q[i]);
            digits[i] = centered(d, q[i]);
        }
        long double v = static_cast<long double>(digits[k - 1]);
        for (std::size_t i = k - 1; i-- > 0;) v = v * static_cast<long double>(q[i]) + static_cast<long double>(digits[i]);
        out[c] = v;
    }
    return out;
}

// a * b for coefficient-form rows, via the NTT of prime i.
std::vector<u64> multiply_row(const NttTables& ntt, std::vector<u64> a, std::vector<u64> b_ntt) {
    const u64 q = ntt.modulus();
    ntt.forward(a);
    for (std::size_t c = 0; c < a.size(); ++c) a[c] = mul_mod(a[c], b_ntt[c], q);
    ntt.inverse(a);
    return a;
}

}  // namespace

std::size_t CipherVector::level() const {
    if (features.empty()) throw ValueError("empty cipher vector");
    return features.front().level;
}

double CipherVector::scale() const {
    if (features.empty()) throw ValueError("empty cipher vector");
    return features.front().scale;
}

std::size_t CipherVector::slots() const {
    if (features.empty()) throw ValueError("empty cipher vector");
    return features.front().slots;
}

void CipherVector::check_uniform() const {
    for (const auto& ct : features) {
        if (ct.level != level()) throw LevelError("cipher vector members at different levels");
        if (ct.scale != scale()) throw LevelError("cipher vector members at different scales");
        if (ct.slots != slots()) throw ValueError("cipher vector members with different slot counts");
    }
}

Plaintext encode(const ContextData& ctx, std::span<const double> values, double scale, std::size_t level) {
    if (level > ctx.max_level()) throw LevelError("encode level beyond the modulus chain");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ValueError("scale must be positive");
    const auto coeffs = ctx.encoder().to_coefficients(values);
    const long double bound = half_modulus(ctx, level);
    Plaintext pt;
    pt.level = level;
    pt.scale = scale;
    pt.poly.rows.assign(level + 1, std::vector<u64>(ctx.poly_degree()));
    for (std::size_t c = 0; c < coeffs.size(); ++c) {
        const __int128 v = scaled_integer(static_cast<long double>(coeffs[c]) * scale, bound);
        for (std::size_t i = 0; i <= level; ++i) pt.poly.rows[i][c] = residue_of(v, ctx.primes()[i]);
    }
    return pt;
}

Plaintext encode_constant(const ContextData& ctx, double value, double scale, std::size_t level) {
    if (level > ctx.max_level()) throw LevelError("encode level beyond the modulus chain");
    const __int128 v = scaled_integer(static_cast<long double>(value) * scale, half_modulus(ctx, level));
    Plaintext pt;
    pt.level = level;
    pt.scale = scale;
    pt.poly.rows.assign(level + 1, std::vector<u64>(ctx.poly_degree(), 0));
    for (std::size_t i = 0; i <= level; ++i) pt.poly.rows[i][0] = residue_of(v, ctx.primes()[i]);
    return pt;
}

std::vector<double> decode(const ContextData& ctx, const Plaintext& pt, std::size_t count) {
    check_level(ctx, pt.level, pt.poly.prime_count(), "plaintext");
    const auto lifted = crt_lift(ctx, pt.poly);
    std::vector<double> coeffs(lifted.size());
    for (std::size_t c = 0; c < lifted.size(); ++c) coeffs[c] = static_cast<double>(lifted[c] / pt.scale);
    return ctx.encoder().to_slots(coeffs, count);
}

Ciphertext Encryptor::encrypt(std::span<const double> values) {
    const auto& ctx = pub_.data();
    return encrypt(encode(ctx, values, ctx.scale(), ctx.max_level()), values.size());
}

Ciphertext Encryptor::encrypt(const Plaintext& pt, std::size_t slots) {
    const auto& ctx = pub_.data();
    check_level(ctx, pt.level, pt.poly.prime_count(), "plaintext");
    if (slots > ctx.encoder().slots()) throw ValueError("slot count exceeds capacity");
    const std::size_t n = ctx.poly_degree();
    const bool exact = ctx.params().noise_free;
    Sampler sampler(mix(seed_ ^ mix(counter_++)));
    const auto u = sampler.ternary(n);
    const auto e0 = exact ? std::vector<std::int64_t>(n, 0) : sampler.gaussian(n);
    const auto e1 = exact ? std::vector<std::int64_t>(n, 0) : sampler.gaussian(n);

    // Prime indices: the data primes of the level, then the special prime when noise is on.
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i <= pt.level; ++i) idx.push_back(i);
    if (!exact) idx.push_back(ctx.primes().size() - 1);

    Rows c0, c1;
    std::vector<u64> moduli;
    for (std::size_t i : idx) {
        const u64 q = ctx.primes()[i];
        const auto& ntt = ctx.ntt(i);
        std::vector<u64> un(n);
        for (std::size_t c = 0; c < n; ++c) un[c] = to_residue(u[c], q);
        ntt.forward(un);
        std::vector<u64> r0(n), r1(n);
        for (std::size_t c = 0; c < n; ++c) {
            r0[c] = mul_shoup(un[c], pub_.pk_b_shoup_[i][c], q);
            r1[c] = mul_shoup(un[c], pub_.pk_a_shoup_[i][c], q);
        }
        ntt.inverse(r0);
        ntt.inverse(r1);
        for (std::size_t c = 0; c < n; ++c) {
            r0[c] = add_mod(r0[c], to_residue(e0[c], q), q);
            r1[c] = add_mod(r1[c], to_residue(e1[c], q), q);
        }
        c0.push_back(std::move(r0));
        c1.push_back(std::move(r1));
        moduli.push_back(q);
    }
    if (!exact) {
        divide_round_last(c0, moduli);
        divide_round_last(c1, moduli);
    }
    for (std::size_t i = 0; i <= pt.level; ++i) {
        const u64 q = ctx.primes()[i];
        for (std::size_t c = 0; c < n; ++c) c0[i][c] = add_mod(c0[i][c], pt.poly.rows[i][c], q);
    }
    Ciphertext ct;
    ct.c0.rows = std::move(c0);
    ct.c1.rows = std::move(c1);
    ct.level = pt.level;
    ct.scale = pt.scale;
    ct.slots = slots;
    return ct;
}

CipherVector Encryptor::encrypt_columns(const Tensor& x) {
    nn::require_rank(x, 2, "encrypt_columns");
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (rows > pub_.data().encoder().slots()) throw DimensionError("batch exceeds slot capacity", "batch");
    CipherVector cv;
    cv.features.reserve(cols);
    std::vector<double> column(rows);
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t r = 0; r < rows; ++r) column[r] = x.at(r, j);
        cv.features.push_back(encrypt(column));
    }
    return cv;
}

Plaintext Decryptor::decrypt(const Ciphertext& ct) const {
    const auto& ctx = pri_.data();
    check_level(ctx, ct.level, ct.c0.prime_count(), "ciphertext");
    check_level(ctx, ct.level, ct.c1.prime_count(), "ciphertext");
    Plaintext pt;
    pt.level = ct.level;
    pt.scale = ct.scale;
    for (std::size_t i = 0; i <= ct.level; ++i) {
        const u64 q = ctx.primes()[i];
        auto row = multiply_row(ctx.ntt(i), ct.c1.rows[i], pri_.secret_key().s.rows[i]);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = add_mod(row[c], ct.c0.rows[i][c], q);
        pt.poly.rows.push_back(std::move(row));
    }
    return pt;
}

std::vector<double> Decryptor::decrypt_values(const Ciphertext& ct) const {
    return decode(pri_.data(), decrypt(ct), ct.slots);
}

Tensor Decryptor::decrypt_columns(const CipherVector& cv) const {
    cv.check_uniform();
    const std::size_t rows = cv.slots(), cols = cv.size();
    if (rows == 0) throw ValueError("cipher vector holds no slots");
    Tensor out({rows, cols});
    for (std::size_t j = 0; j < cols; ++j) {
        const auto v = decrypt_values(cv.features[j]);
        for (std::size_t r = 0; r < rows; ++r) out.at(r, j) = static_cast<float>(v[r]);
    }
    return out;
}

Ciphertext multiply_scalar(const ContextData& ctx, const Ciphertext& ct, double c) {
    check_level(ctx, ct.level, ct.c0.prime_count(), "ciphertext");
    const double delta = ctx.scale();
    const __int128 v = scaled_integer(static_cast<long double>(c) * delta, 0x1.0p62L);
    Ciphertext out = ct;
    for (std::size_t i = 0; i <= ct.level; ++i) {
        const u64 q = ctx.primes()[i];
        const ShoupOperand w(residue_of(v, q), q);
        for (auto* poly : {&out.c0, &out.c1}) {
            for (auto& x : poly->rows[i]) x = mul_shoup(x, w, q);
        }
    }
    out.scale = ct.scale * delta;
    return out;
}

Ciphertext multiply_plain(const ContextData& ctx, const Ciphertext& ct, const Plaintext& pt) {
    check_level(ctx, ct.level, ct.c0.prime_count(), "ciphertext");
    check_same_level(ct, pt.level);
    Ciphertext out = ct;
    for (std::size_t i = 0; i <= ct.level; ++i) {
        auto m = pt.poly.rows[i];
        ctx.ntt(i).forward(m);
        out.c0.rows[i] = multiply_row(ctx.ntt(i), ct.c0.rows[i], m);
        out.c1.rows[i] = multiply_row(ctx.ntt(i), ct.c1.rows[i], m);
    }
    out.scale = ct.scale * pt.scale;
    return out;
}

Ciphertext add(const ContextData& ctx, const Ciphertext& a, const Ciphertext& b) {
    check_level(ctx, a.level, a.c0.prime_count(), "ciphertext");
    check_same_level(b, a.level);
    check_same_scale(a.scale, b.scale);
    Ciphertext out = a;
    for (std::size_t i = 0; i <= a.level; ++i) {
        const u64 q = ctx.primes()[i];
        for (std::size_t c = 0; c < ctx.poly_degree(); ++c) {
            out.c0.rows[i][c] = add_mod(a.c0.rows[i][c], b.c0.rows[i][c], q);
            out.c1.rows[i][c] = add_mod(a.c1.rows[i][c], b.c1.rows[i][c], q);
        }
    }
    out.slots = std::max(a.slots, b.slots);
    return out;
}

Ciphertext add_plain(const ContextData& ctx, const Ciphertext& ct, const Plaintext& pt) {
    check_level(ctx, ct.level, ct.c0.prime_count(), "ciphertext");
    check_same_level(ct, pt.level);
    check_same_scale(ct.scale, pt.scale);
    Ciphertext out = ct;
    for (std::size_t i = 0; i <= ct.level; ++i) {
        const u64 q = ctx.primes()[i];
        for (std::size_t c = 0; c < ctx.poly_degree(); ++c) {
            out.c0.rows[i][c] = add_mod(out.c0.rows[i][c], pt.poly.rows[i][c], q);
        }
    }
    return out;
}

Ciphertext rescale(const ContextData& ctx, const Ciphertext& ct) {
    check_level(ctx, ct.level, ct.c0.prime_count(), "ciphertext");
    if (ct.level == 0) throw LevelError("modulus chain exhausted: cannot rescale at level 0");
    const auto moduli = level_primes(ctx, ct.level);
    Ciphertext out = ct;
    divide_round_last(out.c0.rows, moduli);
    divide_round_last(out.c1.rows, moduli);
    out.level = ct.level - 1;
    out.scale = ct.scale / static_cast<double>(moduli.back());
    return out;
}

CipherVector encrypted_linear(const ContextData& ctx, const CipherVector& in, const Tensor& w, const Tensor& b) {
    nn::require_rank(w, 2, "encrypted_linear weight");
    nn::require_rank(b, 1, "encrypted_linear bias");
    if (in.size() != w.dim(1)) throw DimensionError("input features do not match weight columns", "in_features");
    if (b.dim(0) != w.dim(0)) throw DimensionError("bias length does not match weight rows", "out_features");
    in.check_uniform();
    const std::size_t level = in.level();
    for (const auto& ct : in.features) check_level(ctx, ct.level, ct.c0.prime_count(), "ciphertext");
    if (level == 0) throw LevelError("encrypted linear needs one level; input is at level 0");

    const std::size_t n = ctx.poly_degree();
    const std::size_t outs = w.dim(0), ins = w.dim(1);
    const double delta = ctx.scale();
    CipherVector out;
    out.features.reserve(outs);
    for (std::size_t j = 0; j < outs; ++j) {
        Ciphertext acc;
        acc.level = level;
        acc.scale = in.scale() * delta;
        acc.slots = in.slots();
        acc.c0.rows.assign(level + 1, std::vector<u64>(n, 0));
        acc.c1.rows.assign(level + 1, std::vector<u64>(n, 0));
        for (std::size_t i = 0; i < ins; ++i) {
            const __int128 v = scaled_integer(static_cast<long double>(w.at(j, i)) * delta, 0x1.0p62L);
            if (v == 0) continue;
            const auto& ct = in.features[i];
            for (std::size_t p = 0; p <= level; ++p) {
                const u64 q = ctx.primes()[p];
                const ShoupOperand s(residue_of(v, q), q);
                const u64* x0 = ct.c0.rows[p].data();
                const u64* x1 = ct.c1.rows[p].data();
                u64* y0 = acc.c0.rows[p].data();
                u64* y1 = acc.c1.rows[p].data();
                for (std::size_t c = 0; c < n; ++c) {
                    y0[c] = add_mod(y0[c], mul_shoup(x0[c], s, q), q);
                    y1[c] = add_mod(y1[c], mul_shoup(x1[c], s, q), q);
                }
            }
        }
        auto res = rescale(ctx, acc);
        out.features.push_back(add_plain(ctx, res, encode_constant(ctx, b[j], res.scale, res.level)));
    }
    return out;
}

std::size_t ciphertext_bytes(const ContextData& ctx, std::size_t level) {
    return 4 * 8 + 2 * (level + 1) * ctx.poly_degree() * 8;
}

void write_ciphertext(ByteWriter& w, const Ciphertext& ct) {
    w.u64(ct.c0.rows.empty() ? 0 : ct.c0.rows.front().size());
    w.u64(ct.level);
    w.u64(std::bit_cast<std::uint64_t>(ct.scale));
    w.u64(ct.slots);
    for (const auto* poly : {&ct.c0, &ct.c1}) {
        for (const auto& row : poly->rows) w.u64s(row);
    }
}

Ciphertext read_ciphertext(ByteReader& r, const ContextData& ctx) {
    const u64 n = r.u64("ciphertext degree");
    if (n != ctx.poly_degree()) throw ProtocolError("ciphertext degree does not match the context");
    Ciphertext ct;
    ct.level = r.u64("ciphertext level");
    if (ct.level > ctx.max_level()) throw ProtocolError("ciphertext level beyond the modulus chain");
    ct.scale = std::bit_cast<double>(r.u64("ciphertext scale"));
    if (!std::isfinite(ct.scale) || !(ct.scale > 0.0)) throw ProtocolError("ciphertext scale is not positive");
    ct.slots = r.u64("ciphertext slots");
    if (ct.slots > ctx.encoder().slots()) throw ProtocolError("ciphertext slot count exceeds capacity");
    if (r.remaining() < 2 * (ct.level + 1) * n * 8) throw ProtocolError("truncated input while reading ciphertext");
    for (auto* poly : {&ct.c0, &ct.c1}) {
        poly->rows.assign(ct.level + 1, std::vector<u64>(n));
        for (std::size_t i = 0; i <= ct.level; ++i) {
            const u64 q = ctx.primes()[i];
            r.u64s(poly->rows[i], "ciphertext coefficients");
            for (u64 v : poly->rows[i]) {
                if (v >= q) throw ProtocolError("ciphertext coefficient not reduced");
            }
        }
    }
    return ct;
}

Bytes serialize(const CipherVector& cv) {
    std::size_t size = 4;
    for (const auto& ct : cv.features) {
        size += 32;
        for (const auto& row : ct.c0.rows) size += 16 * row.size();
    }
    ByteWriter w(size);
    w.u32(static_cast<std::uint32_t>(cv.size()));
    for (const auto& ct : cv.features) write_ciphertext(w, ct);
    return std::move(w).take();
}

CipherVector deserialize_cipher_vector(std::span<const std::uint8_t> bytes, const ContextData& ctx) {
    ByteReader r(bytes);
    const auto count = r.u32("cipher vector size");
    CipherVector cv;
    if (count > r.remaining() / ciphertext_bytes(ctx, 0)) throw ProtocolError("cipher vector count exceeds payload");
    cv.features.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) cv.features.push_back(read_ciphertext(r, ctx));
    r.expect_end("cipher vector");
    if (!cv.features.empty()) {
        try {
            cv.check_uniform();
        } catch (const Error& e) {
            throw ProtocolError(e.what());
        }
    }
    return cv;
}

}  // namespace hesplit::ckks
