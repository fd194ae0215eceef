#include "scdyn/fft.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace scdyn {

namespace {

// per-thread twiddle tables: w_k = exp(sign i 2 pi k / n), k < n/2
const std::vector<cplx>& twiddles(std::size_t n, int sign) {
    thread_local std::map<std::pair<std::size_t, int>, std::vector<cplx>> cache;
    auto& entry = cache[{n, sign}];
    if (entry.empty() && n >= 2) {
        entry.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double ang = sign * 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
            entry[k] = cplx(std::cos(ang), std::sin(ang));
        }
    }
    return entry;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_inplace(cplx* a, std::size_t n, int sign) {
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: n must be a power of two");
    if (n < 2) return;
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& w = twiddles(n, sign);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w[k * stride];
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

void fft(std::vector<cplx>& data, int sign) { fft_inplace(data.data(), data.size(), sign); }

}  // namespace scdyn
