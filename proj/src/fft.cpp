#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "dephase/error.hpp"

namespace dephase::detail {

namespace {

struct PlanCache {
  std::mutex mutex;
  std::map<std::size_t, fftw_plan> backward;
  std::map<std::size_t, fftw_plan> forward;

  ~PlanCache() {
    for (auto& [n, p] : backward) fftw_destroy_plan(p);
    for (auto& [n, p] : forward) fftw_destroy_plan(p);
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

fftw_plan plan_for(std::size_t n, bool inverse) {
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  auto& plans = inverse ? c.backward : c.forward;
  if (auto it = plans.find(n); it != plans.end()) return it->second;
  std::vector<double> real(n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
  const int len = static_cast<int>(n);
  fftw_plan p =
      inverse
          ? fftw_plan_dft_c2r_1d(len, cplx, real.data(),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED)
          : fftw_plan_dft_r2c_1d(len, real.data(), cplx,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans.emplace(n, p);
  return p;
}

}  // namespace

void inverse_real_fft(std::span<std::complex<double>> in,
                      std::span<double> out) {
  require(in.size() == out.size() / 2 + 1, "FFT buffer size mismatch");
  fftw_plan p = plan_for(out.size(), true);
  // c2r destroys its input; callers own a scratch buffer
  fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
}

void forward_real_fft(std::span<double> in,
                      std::span<std::complex<double>> out) {
  require(out.size() == in.size() / 2 + 1, "FFT buffer size mismatch");
  fftw_plan p = plan_for(in.size(), false);
  fftw_execute_dft_r2c(p, in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace dephase::detail
