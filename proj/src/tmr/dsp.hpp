#pragma once

#include <complex>
#include <span>
#include <vector>

namespace tmr {

// Second-order section of H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Sos {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Butterworth bandpass of the given prototype order (2*order poles), designed
// in the analog domain (prewarped lowpass->bandpass transform) and mapped by
// the bilinear transform; returned as a cascade of `order` sections.
std::vector<Sos> butter_bandpass(int order, double low_hz, double high_hz,
                                 double fs_hz);

// Complex frequency response of an SOS cascade at f (single pass).
std::complex<double> sos_response(std::span<const Sos> sos, double f_hz,
                                  double fs_hz);

// Forward-backward (zero-phase) filtering with odd-reflection padding.
// Throws NumericError when the input is shorter than three startup lengths
// of the cascade.
std::vector<double> sosfiltfilt(std::span<const Sos> sos,
                                std::span<const double> x);

std::size_t filtfilt_min_length(std::span<const Sos> sos);

// Symmetric FIR lowpass (windowed sinc, Kaiser window).
std::vector<double> kaiser_lowpass(double cutoff_hz, double transition_hz,
                                   double fs_hz, double atten_db);

// Zero-phase FIR filtering with mirrored edges; output aligned with input.
std::vector<double> fir_zero_phase(std::span<const double> taps,
                                   std::span<const double> x);

// Anti-aliased integer/rational downsampling. The anti-alias cutoff sits at
// 45% of the output Nyquist. Throws ConfigError for upsampling requests or
// non-rational ratios; src == target is an identity passthrough.
std::vector<double> resample_series(std::span<const double> x, double src_hz,
                                    double target_hz);

// Analytic signal via the frequency-domain construction at the exact input
// length (no padding): positive frequencies doubled, negatives zeroed.
std::vector<std::complex<double>> analytic_signal(std::span<const double> x);

// Centered moving average with edge truncation; even windows extend one
// sample further to the right ([i - (w-1)/2, i + w/2]).
std::vector<double> moving_average(std::span<const double> x, int window);

}  // namespace tmr
