#pragma once

#include <complex>
#include <vector>

namespace scdyn {

using cplx = std::complex<double>;

bool is_power_of_two(std::size_t n);

// In-place radix-2 FFT, n a power of two. sign = -1: forward (e^{-i2πjk/n}),
// sign = +1: inverse without the 1/n factor.
void fft_inplace(cplx* data, std::size_t n, int sign);

void fft(std::vector<cplx>& data, int sign);

}  // namespace scdyn
