#pragma once

#include <span>
#include <vector>

#include "tmr/preprocess.hpp"

namespace tmr {

// Band-limited analytic decomposition of one channel across trials.
struct AnalyticSeries {
  std::size_t n_trials = 0;
  std::size_t n_times = 0;
  std::vector<double> phase;  // [trial][time], (-pi, pi]
  std::vector<double> amp;    // [trial][time], envelope >= 0
  std::size_t edge_samples = 25;  // first/last samples flagged unreliable

  const double* trial_phase(std::size_t t) const { return phase.data() + t * n_times; }
  const double* trial_amp(std::size_t t) const { return amp.data() + t * n_times; }
  bool phase_defined(std::size_t t, std::size_t i) const {
    return amp[t * n_times + i] > 0.0;
  }
};

// Zero-phase band filter followed by the frequency-domain analytic signal.
AnalyticSeries analytic(const EpochSet& epochs, int channel, double band_lo_hz,
                        double band_hi_hz);

// Across-trial circular-linear correlation at one time point:
//   rho_cl = sqrt((r_sx^2 + r_cx^2 - 2 r_sx r_cx r_sc) / (1 - r_sc^2))
// with r_sx = corr(sin phi, a), r_cx = corr(cos phi, a),
// r_sc = corr(sin phi, cos phi). Zero amplitude variance yields 0 by
// convention; a degenerate phase distribution (1 - r_sc^2 < 1e-12 or a
// constant phase) is a numeric error. Result clamped into [0, 1].
double erpac_at(std::span<const double> phases, std::span<const double> amps);

struct ErpacConfig {
  double phase_band_lo = 1.0;
  double phase_band_hi = 4.0;
  double amp_freq_lo = 4.0;
  double amp_freq_hi = 20.0;
  double amp_freq_step = 1.0;
  double amp_bandwidth = 1.0;  // +/- around each center frequency
  int smoothing_samples = 20;  // centered moving average, edge-truncated
  int time_stride = 1;         // evaluate every k-th sample
};

struct ErpacMap {
  std::vector<double> amp_freqs;
  std::vector<double> times;  // s relative to cue onset
  std::vector<double> rho;    // [freq][time], averaged over directed pairs
  bool pairs_averaged = true;

  double at(std::size_t freq, std::size_t time) const {
    return rho[freq * times.size() + time];
  }
};

// rho_cl for every (phase channel, amplitude channel, amplitude frequency,
// time) cell, averaged over the 36 directed channel pairs, then smoothed
// along time.
ErpacMap erpac_map(const EpochSet& epochs, const ErpacConfig& config = {});

// Mean rho over a frequency band and post-stimulus window of the map.
double coupling_strength(const ErpacMap& map, double band_lo_hz, double band_hi_hz,
                         double window_lo_s, double window_hi_s);

void write_erpac_map(const std::string& base, const ErpacMap& map);

}  // namespace tmr
