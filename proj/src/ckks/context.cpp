#include "hesplit/ckks/context.h"

#include <cmath>

#include "hesplit/error.h"
#include "sampler.h"

namespace hesplit::ckks {

namespace {

constexpr char kMagic[4] = {'C', 'K', 'K', 'S'};
constexpr std::uint8_t kFlagSecret = 1;

Params checked(Params p) {
    p.validate();
    return p;
}

void write_params(ByteWriter& w, const Params& p) {
    w.u64(p.poly_degree);
    w.u32(static_cast<std::uint32_t>(p.coeff_bits.size()));
    for (int b : p.coeff_bits) w.u32(static_cast<std::uint32_t>(b));
    w.u32(static_cast<std::uint32_t>(p.scale_bits));
    w.u8(p.noise_free ? 1 : 0);
}

Params read_params(ByteReader& r) {
    Params p;
    p.poly_degree = r.u64("poly degree");
    const auto chain = r.u32("chain length");
    if (chain > 64) throw ProtocolError("coefficient chain too long");
    p.coeff_bits.resize(chain);
    for (auto& b : p.coeff_bits) b = static_cast<int>(r.u32("prime bits"));
    p.scale_bits = static_cast<int>(r.u32("scale bits"));
    p.noise_free = r.u8("noise flag") != 0;
    try {
        p.validate();
    } catch (const ParameterError& e) {
        throw ProtocolError(std::string("context carries invalid parameters: ") + e.what());
    }
    return p;
}

void write_poly(ByteWriter& w, const RnsPoly& p) {
    for (const auto& row : p.rows) {
        for (u64 v : row) w.u64(v);
    }
}

RnsPoly read_poly(ByteReader& r, const ContextData& data, std::size_t prime_count) {
    RnsPoly p;
    p.rows.assign(prime_count, std::vector<u64>(data.poly_degree()));
    for (std::size_t i = 0; i < prime_count; ++i) {
        const u64 q = data.primes()[i];
        for (auto& v : p.rows[i]) {
            v = r.u64("polynomial coefficient");
            if (v >= q) throw ProtocolError("coefficient not reduced modulo its prime");
        }
    }
    return p;
}

void write_header(ByteWriter& w, std::uint8_t flags, const Params& p) {
    for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
    w.u8(kContextVersion);
    w.u8(flags);
    write_params(w, p);
}

std::uint8_t read_header(ByteReader& r) {
    for (char c : kMagic) {
        if (r.u8("context magic") != static_cast<std::uint8_t>(c)) throw ProtocolError("not a CKKS context");
    }
    const auto version = r.u8("context version");
    if (version != kContextVersion) throw ProtocolError("unsupported context version " + std::to_string(version));
    return r.u8("context flags");
}

std::vector<std::vector<ShoupOperand>> shoup_rows(const RnsPoly& p, const std::vector<u64>& primes) {
    std::vector<std::vector<ShoupOperand>> out(p.rows.size());
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        out[i].reserve(p.rows[i].size());
        for (u64 v : p.rows[i]) out[i].emplace_back(v, primes[i]);
    }
    return out;
}

}  // namespace

ContextData::ContextData(Params params)
    : params_(checked(std::move(params))),
      primes_(select_primes(params_.coeff_bits, params_.poly_degree)),
      encoder_(params_.poly_degree) {
    ntt_.reserve(primes_.size());
    for (u64 q : primes_) ntt_.emplace_back(params_.poly_degree, q);
}

double ContextData::modulus_bits(std::size_t level) const {
    double bits = 0.0;
    for (std::size_t i = 0; i <= level && i < data_prime_count(); ++i) bits += std::log2(static_cast<double>(primes_[i]));
    return bits;
}

PublicContext::PublicContext(ContextPtr data, PublicKey pk) : data_(std::move(data)), pk_(std::move(pk)) {
    if (pk_.a.prime_count() != data_->primes().size() || pk_.b.prime_count() != data_->primes().size()) {
        throw ValueError("public key does not cover the modulus chain");
    }
    pk_b_shoup_ = shoup_rows(pk_.b, data_->primes());
    pk_a_shoup_ = shoup_rows(pk_.a, data_->primes());
}

Bytes PublicContext::serialize() const {
    ByteWriter w;
    write_header(w, 0, params());
    write_poly(w, pk_.b);
    write_poly(w, pk_.a);
    return std::move(w).take();
}

PublicContext PublicContext::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto flags = read_header(r);
    auto data = std::make_shared<const ContextData>(read_params(r));
    const std::size_t k = data->primes().size();
    PublicKey pk;
    pk.b = read_poly(r, *data, k);
    pk.a = read_poly(r, *data, k);
    if (flags & kFlagSecret) read_poly(r, *data, k);  // ignore the secret part
    r.expect_end("public context");
    return PublicContext(std::move(data), std::move(pk));
}

Bytes PrivateContext::serialize() const {
    ByteWriter w;
    write_header(w, kFlagSecret, params());
    write_poly(w, pub_.public_key().b);
    write_poly(w, pub_.public_key().a);
    write_poly(w, sk_.s);
    return std::move(w).take();
}

Bytes PrivateContext::serialize_secret_key() const {
    ByteWriter w;
    write_poly(w, sk_.s);
    return std::move(w).take();
}

PrivateContext PrivateContext::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto flags = read_header(r);
    if (!(flags & kFlagSecret)) throw MissingKeyError("context holds no secret key");
    auto data = std::make_shared<const ContextData>(read_params(r));
    const std::size_t k = data->primes().size();
    PublicKey pk;
    pk.b = read_poly(r, *data, k);
    pk.a = read_poly(r, *data, k);
    SecretKey sk{read_poly(r, *data, k)};
    r.expect_end("private context");
    return PrivateContext(PublicContext(std::move(data), std::move(pk)), std::move(sk));
}

KeyPair keygen(const Params& params, std::uint64_t seed) {
    auto data = std::make_shared<const ContextData>(params);
    const std::size_t n = data->poly_degree();
    const auto& primes = data->primes();
    Sampler sampler(seed);

    const auto s = sampler.ternary(n);
    const auto e = params.noise_free ? std::vector<std::int64_t>(n, 0) : sampler.gaussian(n);

    SecretKey sk;
    PublicKey pk;
    for (std::size_t i = 0; i < primes.size(); ++i) {
        const u64 q = primes[i];
        std::vector<u64> s_row(n), e_row(n), a_row(n), b_row(n);
        for (std::size_t c = 0; c < n; ++c) {
            s_row[c] = to_residue(s[c], q);
            e_row[c] = to_residue(e[c], q);
            a_row[c] = sampler.uniform_mod(q);  // uniform, so sampled directly in NTT form
        }
        data->ntt(i).forward(s_row);
        data->ntt(i).forward(e_row);
        for (std::size_t c = 0; c < n; ++c) b_row[c] = add_mod(neg_mod(mul_mod(a_row[c], s_row[c], q), q), e_row[c], q);
        sk.s.rows.push_back(std::move(s_row));
        pk.a.rows.push_back(std::move(a_row));
        pk.b.rows.push_back(std::move(b_row));
    }
    PublicContext pub(data, std::move(pk));
    PrivateContext pri(pub, std::move(sk));
    return KeyPair{std::move(pub), std::move(pri)};
}

}  // namespace hesplit::ckks
