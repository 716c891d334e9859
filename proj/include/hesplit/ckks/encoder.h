#pragma once

#include <complex>
#include <span>
#include <vector>

namespace hesplit::ckks {

// Canonical embedding for real slot vectors. Slot j holds the evaluation of
// the message polynomial at zeta^(5^j) with zeta = exp(i*pi/N), j < N/2.
class SlotEncoder {
public:
    explicit SlotEncoder(std::size_t poly_degree);

    // Unscaled real coefficients (length N) whose embedding is `values`
    // padded with zeros to N/2 slots.
    std::vector<double> to_coefficients(std::span<const double> values) const;
    // Real parts of the first `count` slots of the polynomial with the given coefficients.
    std::vector<double> to_slots(std::span<const double> coeffs, std::size_t count) const;

    std::size_t slots() const noexcept { return slots_; }
    std::size_t poly_degree() const noexcept { return n_; }

private:
    void embed(std::vector<std::complex<double>>& v) const;
    void embed_inverse(std::vector<std::complex<double>>& v) const;

    std::size_t n_;
    std::size_t slots_;
    std::vector<std::complex<double>> ksi_pows_;  // exp(2*pi*i*k/2N), k = 0..2N
    std::vector<std::size_t> rot_group_;          // 5^j mod 2N
};

}  // namespace hesplit::ckks
