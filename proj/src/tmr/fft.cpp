#include "tmr/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace tmr {

namespace {

std::mutex g_plan_mutex;

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

// Plans created with FFTW_ESTIMATE do not touch the arrays at planning time,
// so one cached plan per size can be re-executed on per-call buffers via
// fftw_execute_dft.
PlanPair& plan_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<double>> probe(n);
  auto* raw = reinterpret_cast<fftw_complex*>(probe.data());
  PlanPair p;
  p.fwd = fftw_plan_dft_1d(static_cast<int>(n), raw, raw, FFTW_FORWARD,
                           FFTW_ESTIMATE);
  p.inv = fftw_plan_dft_1d(static_cast<int>(n), raw, raw, FFTW_BACKWARD,
                           FFTW_ESTIMATE);
  if (!p.fwd || !p.inv) throw std::runtime_error("fftw plan creation failed");
  return cache.emplace(n, p).first->second;
}

}  // namespace

void fft(std::vector<std::complex<double>>& x, bool inverse) {
  if (x.empty()) return;
  const std::size_t n = x.size();
  fftw_plan plan;
  {
    std::scoped_lock lk(g_plan_mutex);
    PlanPair& p = plan_for(n);
    plan = inverse ? p.inv : p.fwd;
  }
  auto* raw = reinterpret_cast<fftw_complex*>(x.data());
  fftw_execute_dft(plan, raw, raw);
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : x) v *= scale;
  }
}

std::vector<std::complex<double>> rfft_onesided(std::span<const double> x,
                                                std::size_t nfft) {
  if (nfft % 2 != 0) throw std::invalid_argument("rfft_onesided: nfft must be even");
  std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
  const std::size_t m = std::min(x.size(), nfft);
  for (std::size_t i = 0; i < m; ++i) buf[i] = {x[i], 0.0};
  fft(buf, false);
  buf.resize(nfft / 2 + 1);
  return buf;
}

}  // namespace tmr
