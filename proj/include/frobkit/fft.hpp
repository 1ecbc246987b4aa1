#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace frobkit {

using cplx = std::complex<double>;

namespace detail {

// Plans are created once per (size, direction) and reused. Plan creation in
// FFTW is not reentrant, so it happens under a lock; executing an existing plan
// on caller-owned arrays is safe from any thread.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> scratch(static_cast<std::size_t>(n));
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

 private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& kv : plans_) fftw_destroy_plan(kv.second);
  }

  std::mutex mu_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline void fft_inplace(std::vector<cplx>& v, int sign) {
  fftw_plan plan = FftPlanCache::instance().get(static_cast<int>(v.size()), sign);
  auto* buf = reinterpret_cast<fftw_complex*>(v.data());
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace detail

/// Fourier modes f_k = (1/N) sum_j v_j exp(-2 pi i jk/N), stored at index k mod N.
inline std::vector<cplx> fourier_modes(std::vector<cplx> v) {
  detail::fft_inplace(v, FFTW_FORWARD);
  const double inv = 1.0 / static_cast<double>(v.size());
  for (auto& x : v) x *= inv;
  return v;
}

/// Inverse of fourier_modes.
inline std::vector<cplx> from_fourier_modes(std::vector<cplx> modes) {
  detail::fft_inplace(modes, FFTW_BACKWARD);
  return modes;
}

/// Signed frequency of storage index k for a length-N transform. The Nyquist
/// index is assigned to the negative side.
inline int signed_mode(int k, int n) { return k < n / 2 ? k : k - n; }

}  // namespace frobkit
