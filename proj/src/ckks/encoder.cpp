#include "hesplit/ckks/encoder.h"

#include <cmath>
#include <numbers>

#include "hesplit/error.h"

namespace hesplit::ckks {

namespace {

void bit_reverse_permute(std::vector<std::complex<double>>& v) {
    const std::size_t n = v.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }
}

}  // namespace

SlotEncoder::SlotEncoder(std::size_t poly_degree) : n_(poly_degree), slots_(poly_degree / 2) {
    const std::size_t m = 2 * n_;
    ksi_pows_.resize(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
        ksi_pows_[k] = {std::cos(angle), std::sin(angle)};
    }
    rot_group_.resize(slots_);
    std::size_t p = 1;
    for (std::size_t j = 0; j < slots_; ++j) {
        rot_group_[j] = p;
        p = (p * 5) % m;
    }
}

void SlotEncoder::embed(std::vector<std::complex<double>>& v) const {
    const std::size_t n = v.size(), m = 2 * n_;
    bit_reverse_permute(v);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1, quarter_m = len << 2, gap = m / quarter_m;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const std::size_t idx = (rot_group_[j] % quarter_m) * gap;
                const auto u = v[i + j];
                const auto w = v[i + j + half] * ksi_pows_[idx];
                v[i + j] = u + w;
                v[i + j + half] = u - w;
            }
        }
    }
}

void SlotEncoder::embed_inverse(std::vector<std::complex<double>>& v) const {
    const std::size_t n = v.size(), m = 2 * n_;
    for (std::size_t len = n; len >= 2; len >>= 1) {
        const std::size_t half = len >> 1, quarter_m = len << 2, gap = m / quarter_m;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const std::size_t idx = (quarter_m - (rot_group_[j] % quarter_m)) * gap;
                const auto u = v[i + j] + v[i + j + half];
                const auto w = (v[i + j] - v[i + j + half]) * ksi_pows_[idx];
                v[i + j] = u;
                v[i + j + half] = w;
            }
        }
    }
    bit_reverse_permute(v);
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : v) x *= inv;
}

std::vector<double> SlotEncoder::to_coefficients(std::span<const double> values) const {
    if (values.size() > slots_) {
        throw ValueError("vector of " + std::to_string(values.size()) + " values exceeds " + std::to_string(slots_) +
                         " slots");
    }
    std::vector<std::complex<double>> v(slots_);
    for (std::size_t i = 0; i < values.size(); ++i) v[i] = values[i];
    embed_inverse(v);
    std::vector<double> coeffs(n_);
    for (std::size_t i = 0; i < slots_; ++i) {
        coeffs[i] = v[i].real();
        coeffs[i + slots_] = v[i].imag();
    }
    return coeffs;
}

std::vector<double> SlotEncoder::to_slots(std::span<const double> coeffs, std::size_t count) const {
    if (coeffs.size() != n_) throw ValueError("coefficient vector has the wrong length");
    if (count > slots_) throw ValueError("slot count exceeds capacity");
    std::vector<std::complex<double>> v(slots_);
    for (std::size_t i = 0; i < slots_; ++i) v[i] = {coeffs[i], coeffs[i + slots_]};
    embed(v);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = v[i].real();
    return out;
}

}  // namespace hesplit::ckks
