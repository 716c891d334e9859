#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <string_view>
#include <unordered_set>

#include "hesplit/ckks/cipher.h"
#include "hesplit/error.h"

using namespace hesplit;
using namespace hesplit::ckks;

namespace {

Params make_params(std::size_t n, std::vector<int> bits, int scale_bits) {
    Params p;
    p.poly_degree = n;
    p.coeff_bits = std::move(bits);
    p.scale_bits = scale_bits;
    return p;
}

const KeyPair& keys_4096() {
    static const KeyPair k = keygen(make_params(4096, {40, 20, 20}, 21), 11);
    return k;
}

const KeyPair& keys_8192() {
    static const KeyPair k = keygen(make_params(8192, {60, 40, 40, 60}, 40), 12);
    return k;
}

std::vector<double> uniform(std::size_t n, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

bool trial_division_prime(u64 n) {
    if (n < 2) return false;
    for (u64 d = 2; d * d <= n; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

// Any `w`-byte window of `needle` occurring anywhere in `hay`.
bool shares_window(const Bytes& hay, const Bytes& needle, std::size_t w) {
    std::unordered_set<std::string_view> windows;
    const auto* nd = reinterpret_cast<const char*>(needle.data());
    for (std::size_t i = 0; i + w <= needle.size(); ++i) windows.emplace(nd + i, w);
    const auto* hd = reinterpret_cast<const char*>(hay.data());
    for (std::size_t i = 0; i + w <= hay.size(); ++i) {
        if (windows.count(std::string_view(hd + i, w))) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("modular helpers") {
    const u64 q = 1099511678977ULL;  // 40-bit prime = 1 mod 8192
    CHECK(is_prime(q));
    CHECK(mul_mod(inv_mod(12345, q), 12345, q) == 1);
    CHECK(pow_mod(3, q - 1, q) == 1);
    CHECK(to_residue(-1, q) == q - 1);
    CHECK(centered(q - 1, q) == -1);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const u64 a = rng() % q, b = rng() % q;
        CHECK(mul_shoup(a, ShoupOperand(b, q), q) == mul_mod(a, b, q));
    }
    for (u64 n : {2ULL, 3ULL, 97ULL, 65537ULL, 262147ULL}) CHECK(is_prime(n) == trial_division_prime(n));
    for (u64 n : {1ULL, 91ULL, 65535ULL, 262143ULL, 561ULL}) CHECK_FALSE(is_prime(n));
}

TEST_CASE("prime selection picks the smallest eligible primes") {
    const auto primes = select_primes({18, 18, 18}, 2048);
    REQUIRE(primes.size() == 3);
    std::vector<u64> expect;
    for (u64 p = (1ULL << 17) + 1; p < (1ULL << 18) && expect.size() < 3; p += 1) {
        if (p % 4096 == 1 && trial_division_prime(p)) expect.push_back(p);
    }
    CHECK(primes == expect);
    for (const auto& [bits, n] : std::vector<std::pair<std::vector<int>, std::size_t>>{
             {{40, 20, 20}, 4096}, {{60, 40, 40, 60}, 8192}}) {
        const auto ps = select_primes(bits, n);
        std::unordered_set<u64> seen(ps.begin(), ps.end());
        CHECK(seen.size() == ps.size());
        for (std::size_t i = 0; i < ps.size(); ++i) {
            CHECK(ps[i] % (2 * n) == 1);
            CHECK(std::bit_width(ps[i]) == bits[i]);
            CHECK(is_prime(ps[i]));
        }
    }
}

TEST_CASE("ntt products equal schoolbook negacyclic convolution") {
    const std::size_t n = 64;
    const u64 q = select_primes({20}, n).front();
    NttTables ntt(n, q);
    CHECK(pow_mod(ntt.root(), n, q) == q - 1);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<u64> a(n), b(n), ref(n, 0);
        for (auto& x : a) x = rng() % q;
        for (auto& x : b) x = rng() % q;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const u64 p = mul_mod(a[i], b[j], q);
                const std::size_t k = (i + j) % n;
                ref[k] = (i + j < n) ? add_mod(ref[k], p, q) : sub_mod(ref[k], p, q);
            }
        }
        auto fa = a, fb = b;
        ntt.forward(fa);
        ntt.forward(fb);
        for (std::size_t i = 0; i < n; ++i) fa[i] = mul_mod(fa[i], fb[i], q);
        ntt.inverse(fa);
        CHECK(fa == ref);
        auto round_trip = a;
        ntt.forward(round_trip);
        ntt.inverse(round_trip);
        CHECK(round_trip == a);
    }
}

TEST_CASE("slot encoder matches direct evaluation at the rotation-group roots") {
    const std::size_t n = 32;
    SlotEncoder enc(n);
    const auto values = uniform(n / 2, -1, 1, 3);
    const auto coeffs = enc.to_coefficients(values);
    REQUIRE(coeffs.size() == n);
    std::size_t g = 1;
    for (std::size_t j = 0; j < n / 2; ++j) {
        const std::complex<double> root = std::polar(1.0, M_PI * static_cast<double>(g) / static_cast<double>(n));
        std::complex<double> acc = 0, p = 1;
        for (std::size_t k = 0; k < n; ++k) {
            acc += coeffs[k] * p;
            p *= root;
        }
        CHECK(acc.real() == doctest::Approx(values[j]).epsilon(1e-12));
        CHECK(std::abs(acc.imag()) < 1e-12);
        g = g * 5 % (2 * n);
    }
    const auto back = enc.to_slots(coeffs, n / 2);
    CHECK(max_abs_diff(back, values) < 1e-12);
    CHECK_THROWS_AS(enc.to_coefficients(std::vector<double>(n / 2 + 1)), ValueError);
}

TEST_CASE("parameter validation") {
    CHECK(keys_4096().pub.data().encoder().slots() == 2048);
    CHECK(keys_4096().pub.params().max_level() == 1);
    CHECK_THROWS_AS(keygen(make_params(3000, {40, 20, 20}, 21), 1), ParameterError);
    CHECK_THROWS_AS(keygen(make_params(4096, {40, 20}, 21), 1), ParameterError);
    CHECK_THROWS_AS(keygen(make_params(1024, {30, 20, 20}, 21), 1), ParameterError);
    CHECK_THROWS_AS(keygen(make_params(4096, {40, 61, 20}, 21), 1), ParameterError);
    CHECK_FALSE(make_params(4096, {40, 20, 20}, 21).below_standard_security());
    CHECK(make_params(2048, {30, 30, 30}, 21).below_standard_security());
}

TEST_CASE("keygen is deterministic in the seed") {
    const auto p = make_params(2048, {18, 18, 18}, 16);
    const auto a = keygen(p, 99), b = keygen(p, 99), c = keygen(p, 100);
    CHECK(a.pri.serialize() == b.pri.serialize());
    CHECK(a.pub.serialize() == b.pub.serialize());
    CHECK(a.pri.serialize() != c.pri.serialize());
    CHECK(a.pub.params() == a.pri.params());
}

TEST_CASE("context serialization") {
    const auto& k = keys_4096();
    const auto pub_bytes = k.pub.serialize();
    REQUIRE(pub_bytes.size() > 6);
    CHECK(std::string(pub_bytes.begin(), pub_bytes.begin() + 4) == "CKKS");
    const auto pub = PublicContext::deserialize(pub_bytes);
    CHECK(pub.public_key() == k.pub.public_key());
    CHECK(pub.params() == k.pub.params());
    const auto pri = PrivateContext::deserialize(k.pri.serialize());
    CHECK(pri.secret_key() == k.pri.secret_key());
    CHECK_THROWS_AS(PrivateContext::deserialize(pub_bytes), MissingKeyError);
    auto bad = pub_bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(PublicContext::deserialize(bad), ProtocolError);
    CHECK_THROWS_AS(PublicContext::deserialize(std::span(pub_bytes).first(pub_bytes.size() - 1)), ProtocolError);
}

TEST_CASE("public context carries no secret-key bytes") {
    for (const auto* k : {&keys_4096(), &keys_8192()}) {
        const auto sk = k->pri.serialize_secret_key();
        CHECK(shares_window(k->pri.serialize(), sk, 32));  // the scan does find the key where it is
        CHECK_FALSE(shares_window(k->pub.serialize(), sk, 32));
    }
}

TEST_CASE("encode and decode") {
    const auto& ctx = keys_8192().pub.data();
    const std::vector<double> zeros(ctx.encoder().slots(), 0.0);
    CHECK(decode(ctx, encode(ctx, zeros, std::ldexp(1.0, 40), ctx.max_level()), zeros.size()) == zeros);

    const auto v = uniform(ctx.encoder().slots(), -1, 1, 21);
    const auto back = decode(ctx, encode(ctx, v, std::ldexp(1.0, 40), ctx.max_level()), v.size());
    CHECK(max_abs_diff(back, v) <= std::ldexp(1.0, -20));

    const auto& small = keys_4096().pub.data();
    const auto w = uniform(small.encoder().slots(), -1, 1, 22);
    const double e16 = max_abs_diff(decode(small, encode(small, w, std::ldexp(1.0, 16), 1), w.size()), w);
    const double e21 = max_abs_diff(decode(small, encode(small, w, std::ldexp(1.0, 21), 1), w.size()), w);
    CHECK(e16 >= 10 * e21);

    // 2^21 * 1e15 overflows a 60-bit modulus
    CHECK_THROWS_AS(encode(small, std::vector<double>{1e15}, std::ldexp(1.0, 21), 1), PrecisionError);
    CHECK_THROWS_AS(encode(small, std::vector<double>(small.encoder().slots() + 1), 2.0, 1), ValueError);
}

TEST_CASE("encrypt and decrypt") {
    const auto& k = keys_8192();
    Encryptor enc(k.pub, 1);
    Decryptor dec(k.pri);
    const std::vector<double> zeros(64, 0.0);
    const auto z = dec.decrypt_values(enc.encrypt(zeros));
    CHECK(max_abs_diff(z, zeros) <= 1e-6);

    const auto v = uniform(300, -1, 1, 4);
    const auto c1 = enc.encrypt(v), c2 = enc.encrypt(v);
    CHECK(c1.level == k.pub.params().max_level());
    CHECK(c1 != c2);
    const auto d1 = dec.decrypt_values(c1), d2 = dec.decrypt_values(c2);
    CHECK(max_abs_diff(d1, v) <= 1e-6);
    CHECK(max_abs_diff(d2, v) <= 1e-6);

    CHECK_THROWS_AS(Decryptor(PrivateContext::deserialize(k.pub.serialize())), MissingKeyError);
}

TEST_CASE("noise-free mode decrypts to the encoding") {
    auto p = make_params(2048, {30, 20, 20}, 20);
    p.noise_free = true;
    const auto k = keygen(p, 3);
    Encryptor enc(k.pub, 1);
    Decryptor dec(k.pri);
    const auto v = uniform(100, -1, 1, 9);
    const auto& ctx = k.pub.data();
    const auto pt = encode(ctx, v, ctx.scale(), ctx.max_level());
    CHECK(dec.decrypt(enc.encrypt(pt, v.size())).poly == pt.poly);
}

TEST_CASE("multiply, add and rescale") {
    const auto& k = keys_8192();
    const auto& ctx = k.pub.data();
    Encryptor enc(k.pub, 2);
    Decryptor dec(k.pri);
    const auto v = uniform(128, -1, 1, 5);
    const auto ct = enc.encrypt(v);

    const auto zero = rescale(ctx, multiply_scalar(ctx, ct, 0.0));
    CHECK(max_abs_diff(dec.decrypt_values(zero), std::vector<double>(v.size(), 0.0)) <= 1e-6);

    const auto times_one = multiply_scalar(ctx, ct, 1.0);
    CHECK(times_one.scale == ct.scale * ctx.scale());
    const auto one = rescale(ctx, times_one);
    CHECK(one.level == ct.level - 1);
    CHECK(max_abs_diff(dec.decrypt_values(one), v) <= 1e-6);

    const auto pt = encode(ctx, v, ctx.scale(), ct.level);
    const auto sq = rescale(ctx, multiply_plain(ctx, ct, pt));
    std::vector<double> v2(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) v2[i] = v[i] * v[i];
    CHECK(max_abs_diff(dec.decrypt_values(sq), v2) <= 1e-6);

    const auto sum = add_plain(ctx, add(ctx, ct, ct), pt);
    std::vector<double> v3(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) v3[i] = 3 * v[i];
    CHECK(max_abs_diff(dec.decrypt_values(sum), v3) <= 1e-6);

    CHECK_THROWS_AS(add(ctx, ct, one), LevelError);
    CHECK_THROWS_AS(add_plain(ctx, one, pt), LevelError);
}

TEST_CASE("weighted sum matches plaintext linear algebra") {
    const auto& k = keys_8192();
    const auto& ctx = k.pub.data();
    Encryptor enc(k.pub, 3);
    Decryptor dec(k.pri);
    const std::size_t feats = 16, slots = 8;
    const auto w = uniform(feats, -1, 1, 6);
    const double bias = 0.25;
    std::vector<std::vector<double>> cols;
    std::vector<double> ref(slots, bias);
    Ciphertext acc;
    for (std::size_t j = 0; j < feats; ++j) {
        cols.push_back(uniform(slots, -1, 1, 100 + j));
        for (std::size_t s = 0; s < slots; ++s) ref[s] += w[j] * cols[j][s];
        auto term = multiply_scalar(ctx, enc.encrypt(cols[j]), w[j]);
        acc = j == 0 ? term : add(ctx, acc, term);
    }
    acc = rescale(ctx, acc);
    acc = add_plain(ctx, acc, encode_constant(ctx, bias, acc.scale, acc.level));
    CHECK(max_abs_diff(dec.decrypt_values(acc), ref) <= 1e-3);
}

TEST_CASE("level budget") {
    const auto& k = keys_4096();
    const auto& ctx = k.pub.data();
    Encryptor enc(k.pub, 4);
    Decryptor dec(k.pri);
    const auto v = uniform(64, -1, 1, 8);
    const auto ct = enc.encrypt(v);
    CHECK(ct.level == 1);
    const auto once = rescale(ctx, multiply_scalar(ctx, ct, 1.0));
    CHECK(once.level == 0);
    CHECK_THROWS_AS(rescale(ctx, once), LevelError);
    CHECK_THROWS_AS(encrypted_linear(ctx, CipherVector{{once}}, nn::Tensor({1, 1}, 1.0f), nn::Tensor({1})), LevelError);

    // Rescale drift: dropped prime has 20 bits, scale 2^21.
    const double bound = std::ldexp(1.0, -(20 - 21));
    const auto direct = dec.decrypt_values(ct);
    CHECK(max_abs_diff(dec.decrypt_values(once), direct) <= bound);
    CHECK(max_abs_diff(dec.decrypt_values(once), v) <= 5e-3);
}

TEST_CASE("approximate homomorphism bound") {
    // Pinned per parameter set: worst |dec(c * enc(v)) - c*v| over the trials.
    struct Case {
        const KeyPair* keys;
        double bound;
    };
    for (const auto& [keys, bound] : {Case{&keys_4096(), 5e-3}, Case{&keys_8192(), 1e-8}}) {
        const auto& ctx = keys->pub.data();
        Encryptor enc(keys->pub, 5);
        Decryptor dec(keys->pri);
        double worst = 0;
        for (int t = 0; t < 5; ++t) {
            const auto v = uniform(256, -1, 1, 30 + t);
            const double c = uniform(1, -2, 2, 60 + t)[0];
            const auto out = dec.decrypt_values(rescale(ctx, multiply_scalar(ctx, enc.encrypt(v), c)));
            std::vector<double> ref(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) ref[i] = c * v[i];
            worst = std::max(worst, max_abs_diff(out, ref));
        }
        MESSAGE(ctx.params().describe() << " worst error " << worst);
        CHECK(worst <= bound);
    }
}

TEST_CASE("encrypted linear layer") {
    const auto& k = keys_4096();
    const auto& ctx = k.pub.data();
    Encryptor enc(k.pub, 6);
    Decryptor dec(k.pri);
    const std::size_t n = 4, in = 256, out = 5;
    const auto a = uniform(n * in, -1, 1, 40);
    nn::Tensor x({n, in});
    for (std::size_t i = 0; i < a.size(); ++i) x[i] = static_cast<float>(a[i]);
    const auto cx = enc.encrypt_columns(x);
    CHECK(cx.size() == in);
    CHECK(cx.slots() == n);

    SUBCASE("zero weights give the bias") {
        const auto y = dec.decrypt_columns(encrypted_linear(ctx, cx, nn::Tensor({out, in}), nn::Tensor({out}, 0.375f)));
        for (float v : y.values()) CHECK(std::abs(v - 0.375) <= 1e-2);
    }
    SUBCASE("one-hot rows select features") {
        nn::Tensor w({out, in});
        nn::Tensor b({out}, {0.1f, -0.2f, 0.3f, 0.0f, 0.5f});
        for (std::size_t j = 0; j < out; ++j) w.at(j, 7 * j + 3) = 1.0f;
        const auto cy = encrypted_linear(ctx, cx, w, b);
        CHECK(cy.level() == cx.level() - 1);
        const auto y = dec.decrypt_columns(cy);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < out; ++j) CHECK(std::abs(y.at(r, j) - (x.at(r, 7 * j + 3) + b[j])) <= 1e-2);
        }
    }
    SUBCASE("random weights match the plaintext layer") {
        double worst = 0;
        for (int t = 0; t < 10; ++t) {
            const auto wv = uniform(out * in, -0.1, 0.1, 50 + t);
            const auto bv = uniform(out, -0.1, 0.1, 80 + t);
            const auto av = uniform(n * in, -1, 1, 90 + t);
            nn::Tensor w({out, in}), b({out}), xt({n, in});
            for (std::size_t i = 0; i < wv.size(); ++i) w[i] = static_cast<float>(wv[i]);
            for (std::size_t i = 0; i < bv.size(); ++i) b[i] = static_cast<float>(bv[i]);
            for (std::size_t i = 0; i < av.size(); ++i) xt[i] = static_cast<float>(av[i]);
            const auto y = dec.decrypt_columns(encrypted_linear(ctx, enc.encrypt_columns(xt), w, b));
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t j = 0; j < out; ++j) {
                    double ref = b[j];
                    for (std::size_t i = 0; i < in; ++i) ref += static_cast<double>(w.at(j, i)) * xt.at(r, i);
                    worst = std::max(worst, std::abs(y.at(r, j) - ref));
                }
            }
        }
        CHECK(worst <= 1e-2);
    }
    SUBCASE("shape errors") {
        CHECK_THROWS_AS(encrypted_linear(ctx, cx, nn::Tensor({out, in + 1}), nn::Tensor({out})), DimensionError);
        CHECK_THROWS_AS(encrypted_linear(ctx, cx, nn::Tensor({out, in}), nn::Tensor({out + 1})), DimensionError);
    }
}

TEST_CASE("ciphertext serialization roundtrip") {
    const auto& k = keys_4096();
    const auto& ctx = k.pub.data();
    Encryptor enc(k.pub, 7);
    Decryptor dec(k.pri);
    nn::Tensor x({3, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1f * static_cast<float>(i);
    const auto cv = enc.encrypt_columns(x);
    const auto bytes = serialize(cv);
    CHECK(bytes.size() == 4 + 4 * ciphertext_bytes(ctx, cv.level()));
    const auto back = deserialize_cipher_vector(bytes, ctx);
    CHECK(back == cv);
    for (std::size_t j = 0; j < cv.size(); ++j) CHECK(dec.decrypt(back.features[j]).poly == dec.decrypt(cv.features[j]).poly);
    CHECK_THROWS_AS(deserialize_cipher_vector(std::span(bytes).first(bytes.size() - 8), ctx), ProtocolError);
    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(deserialize_cipher_vector(extra, ctx), ProtocolError);
    CHECK_THROWS_AS(deserialize_cipher_vector(bytes, keys_8192().pub.data()), ProtocolError);
}
