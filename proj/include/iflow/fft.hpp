#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace iflow {

// Iterative radix-2 transform, power-of-two lengths only. The inverse is
// normalized by 1/n. Double precision throughout; the spectral solver cannot
// afford float32 rounding in long runs.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// Row-major m x m grid: rows then columns. Inverse normalized by 1/m^2.
void fft2_inplace(std::vector<std::complex<double>>& a, std::size_t m, bool inverse);

} // namespace iflow
