#pragma once

#include <complex>
#include <span>
#include <vector>

namespace tmr {

// Thin FFTW front end. Plans are cached per size and guarded by a mutex
// (FFTW plan creation is not thread-safe; execution with per-call buffers is).

// In-place complex DFT of length x.size(); inverse is unscaled-corrected,
// i.e. ifft(fft(x)) == x.
void fft(std::vector<std::complex<double>>& x, bool inverse);

// DFT of a real signal zero-padded to nfft; returns the one-sided half
// spectrum, bins 0..nfft/2 inclusive (nfft must be even).
std::vector<std::complex<double>> rfft_onesided(std::span<const double> x,
                                                std::size_t nfft);

}  // namespace tmr
