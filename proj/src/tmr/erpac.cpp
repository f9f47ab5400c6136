#include "tmr/erpac.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tmr/error.hpp"
#include "tmr/io.hpp"
#include "tmr/util.hpp"

namespace tmr {

AnalyticSeries analytic(const EpochSet& epochs, int channel, double band_lo_hz,
                        double band_hi_hz) {
  const double duration_s = static_cast<double>(epochs.n_samples) / epochs.fs;
  if (band_lo_hz < 2.0 / duration_s)
    throw DataError("analytic: epoch too short for band (low edge " +
                    std::to_string(band_lo_hz) + " Hz)");
  if (band_hi_hz >= epochs.fs / 2.0)
    throw ConfigError("analytic: band above Nyquist");

  const auto sos = butter_bandpass(2, band_lo_hz, band_hi_hz, epochs.fs);
  AnalyticSeries out;
  out.n_trials = epochs.n_trials();
  out.n_times = epochs.n_samples;
  out.phase.resize(out.n_trials * out.n_times);
  out.amp.resize(out.n_trials * out.n_times);

  for (std::size_t t = 0; t < out.n_trials; ++t) {
    const auto filtered = sosfiltfilt(
        sos, {epochs.trial_channel(t, static_cast<std::size_t>(channel)),
              epochs.n_samples});
    const auto z = analytic_signal(filtered);
    double* ph = out.phase.data() + t * out.n_times;
    double* am = out.amp.data() + t * out.n_times;
    for (std::size_t i = 0; i < out.n_times; ++i) {
      am[i] = std::abs(z[i]);
      ph[i] = am[i] > 0.0 ? std::arg(z[i]) : 0.0;
    }
  }
  return out;
}

namespace {

// Mean-centered two-pass form of the circular-linear correlation (the
// direct-summation formulas live in the test oracle, not here).
double rho_cl_centered(std::span<const double> s, std::span<const double> c,
                       std::span<const double> a) {
  const std::size_t n = s.size();
  const double ms = mean(s), mc = mean(c), ma = mean(a);
  double ss = 0.0, cc = 0.0, aa = 0.0, sa = 0.0, ca = 0.0, sc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ds = s[i] - ms, dc = c[i] - mc, da = a[i] - ma;
    ss += ds * ds;
    cc += dc * dc;
    aa += da * da;
    sa += ds * da;
    ca += dc * da;
    sc += ds * dc;
  }
  if (aa == 0.0) return 0.0;  // constant amplitude -> no coupling by convention
  if (ss == 0.0 || cc == 0.0)
    throw NumericError("erpac_at: degenerate phase distribution");
  const double r_sx = sa / std::sqrt(ss * aa);
  const double r_cx = ca / std::sqrt(cc * aa);
  const double r_sc = sc / std::sqrt(ss * cc);
  const double denom = 1.0 - r_sc * r_sc;
  if (denom < 1e-12)
    throw NumericError("erpac_at: degenerate phase distribution");
  const double num = r_sx * r_sx + r_cx * r_cx - 2.0 * r_sx * r_cx * r_sc;
  // Finite-sample noise can push the radicand marginally negative.
  const double rho2 = std::max(0.0, num / denom);
  return std::min(1.0, std::sqrt(rho2));
}

}  // namespace

double erpac_at(std::span<const double> phases, std::span<const double> amps) {
  const std::size_t n = phases.size();
  if (n != amps.size()) throw DataError("erpac_at: length mismatch");
  if (n < 3) throw DataError("erpac_at: need >= 3 trials");
  std::vector<double> s(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = std::sin(phases[i]);
    c[i] = std::cos(phases[i]);
  }
  return rho_cl_centered(s, c, amps);
}

ErpacMap erpac_map(const EpochSet& epochs, const ErpacConfig& config) {
  const std::size_t n_trials = epochs.n_trials();
  if (n_trials < 3) throw DataError("erpac_map: need >= 3 trials");
  const int stride = std::max(1, config.time_stride);

  ErpacMap map;
  for (double f = config.amp_freq_lo; f <= config.amp_freq_hi + 1e-9;
       f += config.amp_freq_step)
    map.amp_freqs.push_back(f);
  std::vector<std::size_t> time_idx;
  for (std::size_t i = 0; i < epochs.n_samples; i += static_cast<std::size_t>(stride))
    time_idx.push_back(i);
  const std::size_t n_t = time_idx.size();
  for (std::size_t i : time_idx) map.times.push_back(epochs.time_at(i));

  // Phase decomposition once per channel; sin/cos cached trial-contiguously.
  std::vector<std::vector<double>> sinp(kNumChannels), cosp(kNumChannels);
  for (int ch = 0; ch < kNumChannels; ++ch) {
    const auto series = analytic(epochs, ch, config.phase_band_lo, config.phase_band_hi);
    sinp[ch].resize(n_t * n_trials);
    cosp[ch].resize(n_t * n_trials);
    for (std::size_t ti = 0; ti < n_t; ++ti)
      for (std::size_t tr = 0; tr < n_trials; ++tr) {
        const double p = series.trial_phase(tr)[time_idx[ti]];
        sinp[ch][ti * n_trials + tr] = std::sin(p);
        cosp[ch][ti * n_trials + tr] = std::cos(p);
      }
  }

  map.rho.assign(map.amp_freqs.size() * n_t, 0.0);
  std::vector<double> pair_vals;
  pair_vals.reserve(kNumChannels * kNumChannels);

  for (std::size_t fi = 0; fi < map.amp_freqs.size(); ++fi) {
    const double f0 = map.amp_freqs[fi];
    std::vector<std::vector<double>> amps(kNumChannels);
    for (int ch = 0; ch < kNumChannels; ++ch) {
      const auto series =
          analytic(epochs, ch, f0 - config.amp_bandwidth, f0 + config.amp_bandwidth);
      amps[ch].resize(n_t * n_trials);
      for (std::size_t ti = 0; ti < n_t; ++ti)
        for (std::size_t tr = 0; tr < n_trials; ++tr)
          amps[ch][ti * n_trials + tr] = series.trial_amp(tr)[time_idx[ti]];
    }
    std::vector<double> row(n_t, 0.0);
    for (std::size_t ti = 0; ti < n_t; ++ti) {
      pair_vals.clear();
      for (int p = 0; p < kNumChannels; ++p)
        for (int q = 0; q < kNumChannels; ++q)
          pair_vals.push_back(rho_cl_centered(
              {sinp[p].data() + ti * n_trials, n_trials},
              {cosp[p].data() + ti * n_trials, n_trials},
              {amps[q].data() + ti * n_trials, n_trials}));
      row[ti] = mean(pair_vals);
    }
    // Centered moving-average smoothing along time; with a strided time
    // axis the window shrinks proportionally.
    const int win = std::max(1, config.smoothing_samples / stride);
    const auto smoothed = moving_average(row, win);
    std::copy(smoothed.begin(), smoothed.end(),
              map.rho.begin() + static_cast<std::ptrdiff_t>(fi * n_t));
  }
  return map;
}

double coupling_strength(const ErpacMap& map, double band_lo_hz, double band_hi_hz,
                         double window_lo_s, double window_hi_s) {
  std::vector<double> vals;
  for (std::size_t f = 0; f < map.amp_freqs.size(); ++f) {
    if (map.amp_freqs[f] < band_lo_hz - 1e-9 || map.amp_freqs[f] > band_hi_hz + 1e-9)
      continue;
    for (std::size_t t = 0; t < map.times.size(); ++t) {
      if (map.times[t] < window_lo_s - 1e-9 || map.times[t] > window_hi_s + 1e-9)
        continue;
      vals.push_back(map.at(f, t));
    }
  }
  if (vals.empty()) throw ConfigError("coupling_strength: window/band outside map");
  return mean(vals);
}

void write_erpac_map(const std::string& base, const ErpacMap& map) {
  nlohmann::json j;
  j["amp_freqs"] = map.amp_freqs;
  j["times"] = map.times;
  j["pairs_averaged"] = map.pairs_averaged;
  {
    std::ofstream out(base + ".json", std::ios::trunc);
    if (!out) throw DataError("cannot write: " + base + ".json");
    out << j.dump() << '\n';
  }
  std::vector<float> payload(map.rho.begin(), map.rho.end());
  write_f32_payload(base + ".f32", payload);
}

}  // namespace tmr
