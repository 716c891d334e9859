#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hesplit/bytes.h"
#include "hesplit/ckks/context.h"
#include "hesplit/nn/tensor.h"

namespace hesplit::ckks {

using nn::Tensor;

// Encoded message at a level: rows for q_0..q_level, coefficient form.
struct Plaintext {
    RnsPoly poly;
    std::size_t level = 0;
    double scale = 1.0;
};

// (c0, c1) with c0 + c1*s = m + e. Coefficient form, rows for q_0..q_level.
struct Ciphertext {
    RnsPoly c0;
    RnsPoly c1;
    std::size_t level = 0;
    double scale = 1.0;
    std::size_t slots = 0;  // occupied slots

    friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

// One ciphertext per feature; slot k of every member holds batch sample k.
struct CipherVector {
    std::vector<Ciphertext> features;

    std::size_t size() const noexcept { return features.size(); }
    std::size_t level() const;
    double scale() const;
    std::size_t slots() const;
    // Raises LevelError when members disagree on level or scale.
    void check_uniform() const;

    friend bool operator==(const CipherVector&, const CipherVector&) = default;
};

// Raises PrecisionError if a scaled coefficient does not fit the modulus at `level`.
Plaintext encode(const ContextData& ctx, std::span<const double> values, double scale, std::size_t level);
// Constant polynomial c*scale; every slot holds c.
Plaintext encode_constant(const ContextData& ctx, double value, double scale, std::size_t level);
std::vector<double> decode(const ContextData& ctx, const Plaintext& pt, std::size_t count);

class Encryptor {
public:
    Encryptor(PublicContext pub, std::uint64_t seed) : pub_(std::move(pub)), seed_(seed) {}

    Ciphertext encrypt(std::span<const double> values);
    Ciphertext encrypt(const Plaintext& pt, std::size_t slots);
    // Column j of `x` [n, F] becomes feature j; n slots used.
    CipherVector encrypt_columns(const Tensor& x);

private:
    PublicContext pub_;
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

class Decryptor {
public:
    explicit Decryptor(PrivateContext pri) : pri_(std::move(pri)) {}

    Plaintext decrypt(const Ciphertext& ct) const;
    std::vector<double> decrypt_values(const Ciphertext& ct) const;
    // Back to a [slots, features] tensor.
    Tensor decrypt_columns(const CipherVector& cv) const;

private:
    PrivateContext pri_;
};

// Scale becomes ct.scale * Delta.
Ciphertext multiply_scalar(const ContextData& ctx, const Ciphertext& ct, double c);
Ciphertext multiply_plain(const ContextData& ctx, const Ciphertext& ct, const Plaintext& pt);
Ciphertext add(const ContextData& ctx, const Ciphertext& a, const Ciphertext& b);
Ciphertext add_plain(const ContextData& ctx, const Ciphertext& ct, const Plaintext& pt);
// Divides by q_level and drops it. Raises LevelError at level 0.
Ciphertext rescale(const ContextData& ctx, const Ciphertext& ct);

// out_j = sum_i w[j][i] * in_i + b[j], rescaled once. w is [out, in], b is [out].
CipherVector encrypted_linear(const ContextData& ctx, const CipherVector& in, const Tensor& w, const Tensor& b);

void write_ciphertext(ByteWriter& w, const Ciphertext& ct);
Ciphertext read_ciphertext(ByteReader& r, const ContextData& ctx);
Bytes serialize(const CipherVector& cv);
CipherVector deserialize_cipher_vector(std::span<const std::uint8_t> bytes, const ContextData& ctx);
std::size_t ciphertext_bytes(const ContextData& ctx, std::size_t level);

}  // namespace hesplit::ckks
