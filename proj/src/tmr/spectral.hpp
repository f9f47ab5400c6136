#pragma once

#include <complex>
#include <span>
#include <vector>

#include "tmr/preprocess.hpp"

namespace tmr {

struct SpectrogramConfig {
  std::size_t window_len = 32;  // symmetric Hamming
  std::size_t overlap = 24;     // hop 8
  std::size_t nfft = 200;       // 0.5 Hz bins at 100 Hz
  double fs = 100.0;

  std::size_t hop() const { return window_len - overlap; }
  double freq_resolution() const { return fs / static_cast<double>(nfft); }
};

// Symmetric Hamming: w[n] = 0.54 - 0.46 cos(2 pi n / (N - 1)).
std::vector<double> hamming_window(std::size_t n);

struct StftFrames {
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;  // one-sided, nfft/2 + 1
  std::vector<std::complex<double>> coef;  // [frame][bin]
  std::vector<double> center_samples;      // window center per frame

  const std::complex<double>* frame(std::size_t f) const {
    return coef.data() + f * n_bins;
  }
};

// Windowed frames at the configured hop, zero-padded to nfft. Input shorter
// than one window is an error. Frame count floor((n - win)/hop) + 1.
StftFrames stft(std::span<const double> x, const SpectrogramConfig& config);

struct Tfr {
  std::vector<double> freqs;        // 0.5..20 Hz in 0.5 Hz steps
  std::vector<double> frame_times;  // s relative to cue onset (window centers)
  std::size_t n_trials = 0;
  std::size_t n_baseline_frames = 0;
  // Per-trial, per-channel baseline-normalized power in dB:
  // [trial][channel][freq][frame].
  std::vector<double> power_db;
  // Trial-averaged then channel-averaged map: [freq][frame].
  std::vector<double> mean_db;

  std::size_t n_freqs() const { return freqs.size(); }
  std::size_t n_frames() const { return frame_times.size(); }
  const double* cell(std::size_t trial, std::size_t channel, std::size_t freq) const {
    return power_db.data() +
           ((trial * kNumChannels + channel) * n_freqs() + freq) * n_frames();
  }
};

// P(f,t) = |S(f,t)|^2 per trial and channel, normalized per frequency by the
// mean power over the baseline frames (window center < 0 s) and converted to
// dB. A zero baseline at any frequency is a numeric error.
Tfr tfr(const EpochSet& epochs, const SpectrogramConfig& config = {});

inline constexpr double kSwBandLo = 0.5, kSwBandHi = 4.0;
inline constexpr double kSpindleBandLo = 12.0, kSpindleBandHi = 16.0;

struct BandPowerSeries {
  double band_lo = 0.0, band_hi = 0.0;
  std::size_t n_trials = 0;
  std::vector<double> frame_times;
  std::vector<double> values;  // [trial][channel][frame] mean dB over band bins

  std::size_t n_frames() const { return frame_times.size(); }
  const double* series(std::size_t trial, std::size_t channel) const {
    return values.data() + (trial * kNumChannels + channel) * n_frames();
  }
};

// Unweighted mean of dB values across the band's bins (inclusive edges).
BandPowerSeries band_power(const Tfr& t, double lo_hz, double hi_hz);

void write_tfr(const std::string& base, const Tfr& t);
void write_band_power_csv(const std::string& path, const BandPowerSeries& series);

}  // namespace tmr
