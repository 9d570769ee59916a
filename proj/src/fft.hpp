#pragma once

#include <complex>
#include <span>

namespace dephase::detail {

// Thin FFTW wrappers. Plans are cached per size behind a mutex; execution
// uses the new-array interface and is safe to call from parallel regions.

// out[n] = sum_k in[k] exp(+2 pi i k n / N), in has N/2+1 Hermitian half.
void inverse_real_fft(std::span<std::complex<double>> in,
                      std::span<double> out);

// out[k] = sum_n in[n] exp(-2 pi i k n / N), k = 0..N/2.
void forward_real_fft(std::span<double> in,
                      std::span<std::complex<double>> out);

}  // namespace dephase::detail
