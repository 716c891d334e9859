#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "hesplit/bytes.h"
#include "hesplit/ckks/encoder.h"
#include "hesplit/ckks/ntt.h"
#include "hesplit/ckks/params.h"

namespace hesplit::ckks {

// Residues of one polynomial, one row of N coefficients per prime
// q_0..q_k. Coefficient form unless a function says otherwise.
struct RnsPoly {
    std::vector<std::vector<u64>> rows;

    std::size_t prime_count() const noexcept { return rows.size(); }
    friend bool operator==(const RnsPoly&, const RnsPoly&) = default;
};

// Immutable per-parameter-set tables shared by every context and ciphertext.
class ContextData {
public:
    explicit ContextData(Params params);

    const Params& params() const noexcept { return params_; }
    std::size_t poly_degree() const noexcept { return params_.poly_degree; }
    // Data primes q_0..q_L followed by the special prime.
    const std::vector<u64>& primes() const noexcept { return primes_; }
    std::size_t data_prime_count() const noexcept { return primes_.size() - 1; }
    std::size_t max_level() const noexcept { return primes_.size() - 2; }
    u64 special_prime() const noexcept { return primes_.back(); }
    const NttTables& ntt(std::size_t i) const { return ntt_.at(i); }
    const SlotEncoder& encoder() const noexcept { return encoder_; }
    double scale() const noexcept { return params_.scale(); }
    // log2 of q_0 * ... * q_level.
    double modulus_bits(std::size_t level) const;

private:
    Params params_;
    std::vector<u64> primes_;
    std::vector<NttTables> ntt_;
    SlotEncoder encoder_;
};

using ContextPtr = std::shared_ptr<const ContextData>;

// b = -a*s + e, a uniform, over all primes including the special one. Stored
// in NTT form.
struct PublicKey {
    RnsPoly b;
    RnsPoly a;
    friend bool operator==(const PublicKey&, const PublicKey&) = default;
};

// Ternary secret, NTT form over all primes.
struct SecretKey {
    RnsPoly s;
    friend bool operator==(const SecretKey&, const SecretKey&) = default;
};

inline constexpr std::uint8_t kContextVersion = 1;

// Parameters and the public key. This is what the server holds; it has no
// way to reach a secret key.
class PublicContext {
public:
    PublicContext(ContextPtr data, PublicKey pk);

    const ContextData& data() const noexcept { return *data_; }
    const ContextPtr& data_ptr() const noexcept { return data_; }
    const Params& params() const noexcept { return data_->params(); }
    const PublicKey& public_key() const noexcept { return pk_; }

    // "CKKS", version, flags (0), params, public key polynomials.
    Bytes serialize() const;
    static PublicContext deserialize(std::span<const std::uint8_t> bytes);

private:
    ContextPtr data_;
    PublicKey pk_;
    std::vector<std::vector<ShoupOperand>> pk_b_shoup_, pk_a_shoup_;
    friend class Encryptor;
};

// Public context plus the secret key; stays with the client.
class PrivateContext {
public:
    PrivateContext(PublicContext pub, SecretKey sk) : pub_(std::move(pub)), sk_(std::move(sk)) {}

    const PublicContext& public_context() const noexcept { return pub_; }
    const ContextData& data() const noexcept { return pub_.data(); }
    const Params& params() const noexcept { return pub_.params(); }
    const SecretKey& secret_key() const noexcept { return sk_; }

    // Same layout as the public context with flags = 1 and the secret key appended.
    Bytes serialize() const;
    // Raises MissingKeyError when `bytes` hold only a public context.
    static PrivateContext deserialize(std::span<const std::uint8_t> bytes);
    Bytes serialize_secret_key() const;

private:
    PublicContext pub_;
    SecretKey sk_;
};

struct KeyPair {
    PublicContext pub;
    PrivateContext pri;
};

// Deterministic in `seed`. Raises ParameterError for invalid params.
KeyPair keygen(const Params& params, std::uint64_t seed);

}  // namespace hesplit::ckks
