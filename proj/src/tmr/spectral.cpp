#include "tmr/spectral.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

#include "tmr/error.hpp"
#include "tmr/fft.hpp"
#include "tmr/io.hpp"
#include "tmr/util.hpp"

namespace tmr {

std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
  return w;
}

StftFrames stft(std::span<const double> x, const SpectrogramConfig& config) {
  if (config.overlap >= config.window_len)
    throw ConfigError("stft: overlap must be smaller than the window");
  if (config.nfft < config.window_len)
    throw ConfigError("stft: nfft must be >= window length");
  if (x.size() < config.window_len)
    throw DataError("stft: input shorter than one window");

  const std::size_t hop = config.hop();
  const auto window = hamming_window(config.window_len);
  StftFrames out;
  out.n_frames = (x.size() - config.window_len) / hop + 1;
  out.n_bins = config.nfft / 2 + 1;
  out.coef.resize(out.n_frames * out.n_bins);
  out.center_samples.resize(out.n_frames);

  std::vector<double> frame(config.window_len);
  for (std::size_t f = 0; f < out.n_frames; ++f) {
    const std::size_t start = f * hop;
    for (std::size_t i = 0; i < config.window_len; ++i)
      frame[i] = x[start + i] * window[i];
    auto spec = rfft_onesided(frame, config.nfft);
    std::copy(spec.begin(), spec.end(), out.coef.begin() + static_cast<std::ptrdiff_t>(f * out.n_bins));
    out.center_samples[f] =
        static_cast<double>(start) + static_cast<double>(config.window_len) / 2.0;
  }
  return out;
}

Tfr tfr(const EpochSet& epochs, const SpectrogramConfig& config) {
  if (epochs.n_trials() == 0) throw DataError("tfr: no trials");
  Tfr out;
  out.n_trials = epochs.n_trials();

  // Retained grid: 0.5..20 Hz at the configured resolution.
  const double df = config.freq_resolution();
  const auto bin_lo = static_cast<std::size_t>(std::llround(0.5 / df));
  const auto bin_hi = static_cast<std::size_t>(std::llround(20.0 / df));
  for (std::size_t k = bin_lo; k <= bin_hi; ++k)
    out.freqs.push_back(static_cast<double>(k) * df);

  // Frame instants relative to cue onset; baseline = frames centered before 0.
  {
    std::vector<double> probe(epochs.n_samples, 0.0);
    auto frames = stft(probe, config);
    for (double c : frames.center_samples)
      out.frame_times.push_back(epochs.t_start_s + c / config.fs);
  }
  for (double t : out.frame_times)
    if (t < 0.0) ++out.n_baseline_frames;
  if (out.n_baseline_frames == 0)
    throw DataError("tfr: no baseline frames (no window center before onset)");

  const std::size_t n_freqs = out.freqs.size();
  const std::size_t n_frames = out.frame_times.size();
  out.power_db.assign(out.n_trials * kNumChannels * n_freqs * n_frames, 0.0);

  std::vector<double> power(n_freqs * n_frames);
  for (std::size_t t = 0; t < out.n_trials; ++t) {
    for (int c = 0; c < kNumChannels; ++c) {
      const auto frames = stft({epochs.trial_channel(t, c), epochs.n_samples}, config);
      if (frames.n_frames != n_frames)
        throw NumericError("tfr: inconsistent frame count");
      for (std::size_t f = 0; f < n_frames; ++f) {
        const auto* spec = frames.frame(f);
        for (std::size_t k = 0; k < n_freqs; ++k)
          power[k * n_frames + f] = std::norm(spec[bin_lo + k]);
      }
      double* dst = out.power_db.data() +
                    ((t * kNumChannels + static_cast<std::size_t>(c)) * n_freqs) * n_frames;
      for (std::size_t k = 0; k < n_freqs; ++k) {
        double base = 0.0;
        for (std::size_t f = 0; f < out.n_baseline_frames; ++f)
          base += power[k * n_frames + f];
        base /= static_cast<double>(out.n_baseline_frames);
        if (base <= 0.0)
          throw NumericError("tfr: degenerate baseline at " +
                             std::to_string(out.freqs[k]) + " Hz");
        for (std::size_t f = 0; f < n_frames; ++f)
          dst[k * n_frames + f] = 10.0 * std::log10(power[k * n_frames + f] / base);
      }
    }
  }

  // Average across trials, then channels.
  out.mean_db.assign(n_freqs * n_frames, 0.0);
  std::vector<double> trial_vals(out.n_trials);
  std::vector<double> chan_vals(kNumChannels);
  for (std::size_t k = 0; k < n_freqs; ++k) {
    for (std::size_t f = 0; f < n_frames; ++f) {
      for (int c = 0; c < kNumChannels; ++c) {
        for (std::size_t t = 0; t < out.n_trials; ++t)
          trial_vals[t] = out.cell(t, c, k)[f];
        chan_vals[static_cast<std::size_t>(c)] = mean(trial_vals);
      }
      out.mean_db[k * n_frames + f] = mean(chan_vals);
    }
  }
  return out;
}

BandPowerSeries band_power(const Tfr& t, double lo_hz, double hi_hz) {
  std::vector<std::size_t> bins;
  for (std::size_t k = 0; k < t.n_freqs(); ++k)
    if (t.freqs[k] >= lo_hz - 1e-9 && t.freqs[k] <= hi_hz + 1e-9) bins.push_back(k);
  if (bins.empty()) throw ConfigError("band_power: empty band");

  BandPowerSeries out;
  out.band_lo = lo_hz;
  out.band_hi = hi_hz;
  out.n_trials = t.n_trials;
  out.frame_times = t.frame_times;
  const std::size_t n_frames = t.n_frames();
  out.values.assign(t.n_trials * kNumChannels * n_frames, 0.0);
  std::vector<double> acc(bins.size());
  for (std::size_t tr = 0; tr < t.n_trials; ++tr) {
    for (int c = 0; c < kNumChannels; ++c) {
      double* dst = out.values.data() + (tr * kNumChannels + static_cast<std::size_t>(c)) * n_frames;
      for (std::size_t f = 0; f < n_frames; ++f) {
        for (std::size_t b = 0; b < bins.size(); ++b) acc[b] = t.cell(tr, c, bins[b])[f];
        dst[f] = mean(acc);
      }
    }
  }
  return out;
}

void write_tfr(const std::string& base, const Tfr& t) {
  nlohmann::json j;
  j["freqs"] = t.freqs;
  j["frame_times"] = t.frame_times;
  j["n_trials"] = t.n_trials;
  {
    std::ofstream out(base + ".json", std::ios::trunc);
    if (!out) throw DataError("cannot write: " + base + ".json");
    out << j.dump() << '\n';
  }
  std::vector<float> payload(t.mean_db.begin(), t.mean_db.end());
  write_f32_payload(base + ".f32", payload);
}

void write_band_power_csv(const std::string& path, const BandPowerSeries& series) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  out << "trial,channel,frame,value_db\n";
  char buf[64];
  for (std::size_t t = 0; t < series.n_trials; ++t)
    for (int c = 0; c < kNumChannels; ++c) {
      const double* v = series.series(t, static_cast<std::size_t>(c));
      for (std::size_t f = 0; f < series.n_frames(); ++f) {
        std::snprintf(buf, sizeof buf, "%.9g", v[f]);
        out << t << ',' << canonical_channels()[c] << ',' << f << ',' << buf << '\n';
      }
    }
}

}  // namespace tmr
