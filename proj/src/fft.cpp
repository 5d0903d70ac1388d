#include "iflow/fft.hpp"

#include <cmath>
#include <unordered_map>

#include "iflow/common.hpp"

namespace iflow {

namespace {

bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Twiddle table for size n: w[j] = exp(-2 pi i j / n), j < n/2. Cached so long
// simulations do not keep re-deriving roots of unity.
const std::vector<std::complex<double>>& twiddles(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::vector<std::complex<double>>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<std::complex<double>> w(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j) {
        const double arg = -2.0 * M_PI * double(j) / double(n);
        w[j] = {std::cos(arg), std::sin(arg)};
    }
    return cache.emplace(n, std::move(w)).first->second;
}

} // namespace

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!power_of_two(n)) config_error("fft length must be a power of two, got " + std::to_string(n));
    if (n == 1) return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    const auto& w = twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t stride = n / len;
        for (std::size_t block = 0; block < n; block += len) {
            for (std::size_t j = 0; j < half; ++j) {
                std::complex<double> tw = w[j * stride];
                if (inverse) tw = std::conj(tw);
                const std::complex<double> u = a[block + j];
                const std::complex<double> v = a[block + j + half] * tw;
                a[block + j] = u + v;
                a[block + j + half] = u - v;
            }
        }
    }

    if (inverse) {
        const double scale = 1.0 / double(n);
        for (auto& x : a) x *= scale;
    }
}

void fft2_inplace(std::vector<std::complex<double>>& a, std::size_t m, bool inverse) {
    if (a.size() != m * m) config_error("fft2 expects m*m elements");
    std::vector<std::complex<double>> line(m);
    // rows
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c) line[c] = a[r * m + c];
        fft_inplace(line, inverse);
        for (std::size_t c = 0; c < m; ++c) a[r * m + c] = line[c];
    }
    // columns
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t r = 0; r < m; ++r) line[r] = a[r * m + c];
        fft_inplace(line, inverse);
        for (std::size_t r = 0; r < m; ++r) a[r * m + c] = line[r];
    }
}

} // namespace iflow
