#include "tmr/preprocess.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <set>

#include "tmr/error.hpp"
#include "tmr/io.hpp"
#include "tmr/util.hpp"

namespace tmr {

Recording resample_recording(const Recording& rec, double target_hz) {
  if (rec.sample_rate_hz == target_hz) return rec;
  Recording out;
  out.sample_rate_hz = target_hz;
  out.channel_labels = rec.channel_labels;
  out.t0_s = rec.t0_s;
  out.samples.resize(rec.samples.size());
  for (std::size_t c = 0; c < rec.samples.size(); ++c) {
    std::vector<double> x(rec.samples[c].begin(), rec.samples[c].end());
    const auto y = resample_series(x, rec.sample_rate_hz, target_hz);
    out.samples[c].assign(y.begin(), y.end());
  }
  return out;
}

Recording bandpass_recording(const Recording& rec, const FilterSpec& spec) {
  if (!(0.0 < spec.low_hz && spec.low_hz < spec.high_hz &&
        spec.high_hz < rec.sample_rate_hz / 2.0))
    throw ConfigError("bandpass: invalid band for sample rate");
  const auto sos = butter_bandpass(spec.order, spec.low_hz, spec.high_hz,
                                   rec.sample_rate_hz);
  Recording out = rec;
  for (auto& ch : out.samples) {
    std::vector<double> x(ch.begin(), ch.end());
    const auto y = sosfiltfilt(sos, x);
    ch.assign(y.begin(), y.end());
  }
  return out;
}

const std::array<std::vector<int>, kNumChannels>& channel_neighbors() {
  // F3 F4 C3 C4 O1 O2; six electrodes cannot support spherical splines, so
  // repair uses the mean of adjacent sites.
  static const std::array<std::vector<int>, kNumChannels> k = {{
      {1, 2},     // F3: F4, C3
      {0, 3},     // F4: F3, C4
      {0, 3, 4},  // C3: F3, C4, O1
      {1, 2, 5},  // C4: F4, C3, O2
      {2, 5},     // O1: C3, O2
      {3, 4},     // O2: C4, O1
  }};
  return k;
}

std::pair<Recording, BadChannelReport> detect_and_repair_channels(
    const Recording& rec, double z_threshold) {
  BadChannelReport report;
  const std::size_t n = rec.n_samples();
  if (n < 4) throw DataError("detect_and_repair_channels: recording too short");

  for (int c = 0; c < kNumChannels; ++c) {
    double m = 0.0;
    for (float v : rec.samples[c]) m += v;
    m /= static_cast<double>(n);
    double m2 = 0.0, m4 = 0.0;
    for (float v : rec.samples[c]) {
      const double d = v - m;
      const double d2 = d * d;
      m2 += d2;
      m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    report.kurtosis[c] = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
  }

  // Leave-one-out z (a plain z-score across six values is bounded by
  // (n-1)/sqrt(n) ~ 2.04 and could never reach the threshold), peeling the
  // worst outlier and re-testing so that multiple bad channels are caught.
  std::vector<int> remaining;
  for (int c = 0; c < kNumChannels; ++c) remaining.push_back(c);
  while (remaining.size() >= 4) {
    int worst = -1;
    double worst_z = 0.0;
    for (int c : remaining) {
      std::vector<double> others;
      for (int o : remaining)
        if (o != c) others.push_back(report.kurtosis[o]);
      const double mu = mean(others);
      const double sd = std::sqrt(sample_variance(others));
      double z;
      if (sd > 0.0)
        z = (report.kurtosis[c] - mu) / sd;
      else
        z = report.kurtosis[c] == mu ? 0.0
                                     : std::copysign(
                                           std::numeric_limits<double>::infinity(),
                                           report.kurtosis[c] - mu);
      report.zscore[c] = z;
      if (std::fabs(z) > std::fabs(worst_z)) {
        worst_z = z;
        worst = c;
      }
    }
    if (worst < 0 || std::fabs(worst_z) <= z_threshold) break;
    report.flagged.push_back(worst);
    remaining.erase(std::find(remaining.begin(), remaining.end(), worst));
    if (report.flagged.size() > 2)
      throw DataError("too many bad channels (" +
                      std::to_string(report.flagged.size()) + " flagged)");
  }
  std::sort(report.flagged.begin(), report.flagged.end());

  Recording out = rec;
  const std::set<int> bad(report.flagged.begin(), report.flagged.end());
  for (int c : report.flagged) {
    std::vector<int> donors;
    for (int nb : channel_neighbors()[c])
      if (!bad.count(nb)) donors.push_back(nb);
    if (donors.empty())
      throw DataError("channel " + canonical_channels()[c] + " has no clean neighbors");
    report.sources[c] = donors;
    auto& dst = out.samples[c];
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int nb : donors) acc += rec.samples[nb][i];
      dst[i] = static_cast<float>(acc / static_cast<double>(donors.size()));
    }
  }
  return {std::move(out), std::move(report)};
}

EpochSet EpochSet::select(const std::vector<std::size_t>& keep) const {
  EpochSet out;
  out.fs = fs;
  out.t_start_s = t_start_s;
  out.n_samples = n_samples;
  out.data.reserve(keep.size() * kNumChannels * n_samples);
  for (std::size_t t : keep) {
    out.trials.push_back(trials[t]);
    const double* src = data.data() + (t * kNumChannels) * n_samples;
    out.data.insert(out.data.end(), src, src + kNumChannels * n_samples);
  }
  return out;
}

EpochSet extract_epochs(const Recording& rec, const CueLog& log,
                        const std::map<int, Level>& level_of,
                        const std::string& group,
                        const std::string& participant) {
  if (rec.sample_rate_hz != 100.0)
    throw DataError("extract_epochs: recording must be at 100 Hz");
  EpochSet out;
  const auto n_rec = static_cast<std::ptrdiff_t>(rec.n_samples());
  const std::ptrdiff_t pre = 50, post = 400;

  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& cue = log[i];
    const double t_rel = static_cast<double>(cue.onset_ms) / 1000.0 - rec.t0_s;
    const auto onset = static_cast<std::ptrdiff_t>(std::llround(t_rel * rec.sample_rate_hz));
    if (onset - pre < 0 || onset + post > n_rec) {
      out.dropped_bounds.push_back(i);
      continue;
    }
    TrialInfo info;
    info.item_id = cue.item_id;
    info.pres_index = cue.pres_index;
    info.block_id = cue.block_id;
    auto it = level_of.find(cue.item_id);
    info.level = it != level_of.end() ? it->second : Level::L1;
    info.group = group;
    info.participant = participant;
    info.onset_ms = cue.onset_ms;
    out.trials.push_back(std::move(info));
    for (int c = 0; c < kNumChannels; ++c) {
      const float* src = rec.samples[c].data() + (onset - pre);
      for (std::ptrdiff_t s = 0; s < pre + post; ++s)
        out.data.push_back(static_cast<double>(src[s]));
    }
  }
  return out;
}

std::pair<EpochSet, RejectionReport> reject_amplitude(const EpochSet& epochs,
                                                      double threshold_uv) {
  RejectionReport report;
  report.threshold_uv = threshold_uv;
  report.peak_uv.resize(epochs.n_trials(), 0.0);
  for (std::size_t t = 0; t < epochs.n_trials(); ++t) {
    double peak = 0.0;
    for (int c = 0; c < kNumChannels; ++c) {
      const double* x = epochs.trial_channel(t, c);
      for (std::size_t s = 0; s < epochs.n_samples; ++s)
        peak = std::max(peak, std::fabs(x[s]));
    }
    report.peak_uv[t] = peak;
    if (peak > threshold_uv)
      report.dropped.push_back(t);
    else
      report.kept.push_back(t);
  }
  return {epochs.select(report.kept), std::move(report)};
}

EpochSet baseline_correct(const EpochSet& epochs) {
  EpochSet out = epochs;
  const auto n_base = static_cast<std::size_t>(std::llround(-epochs.t_start_s * epochs.fs));
  if (n_base == 0 || n_base > epochs.n_samples)
    throw DataError("baseline_correct: no baseline window");
  for (std::size_t t = 0; t < out.n_trials(); ++t) {
    for (int c = 0; c < kNumChannels; ++c) {
      double* x = out.trial_channel(t, c);
      const double m = pairwise_sum({x, n_base}) / static_cast<double>(n_base);
      for (std::size_t s = 0; s < out.n_samples; ++s) x[s] -= m;
    }
  }
  return out;
}

namespace {

ErpWaveform average_trials(const EpochSet& epochs,
                           const std::vector<std::size_t>& trial_idx, int channel,
                           const std::string& label) {
  ErpWaveform w;
  w.label = label;
  w.channel = channel;
  w.n_trials = trial_idx.size();
  w.mean.resize(epochs.n_samples);
  w.se.resize(epochs.n_samples);
  std::vector<double> vals(trial_idx.size());
  for (std::size_t s = 0; s < epochs.n_samples; ++s) {
    for (std::size_t k = 0; k < trial_idx.size(); ++k) {
      const std::size_t t = trial_idx[k];
      if (channel >= 0) {
        vals[k] = epochs.trial_channel(t, static_cast<std::size_t>(channel))[s];
      } else {
        double acc = 0.0;
        for (int c = 0; c < kNumChannels; ++c) acc += epochs.trial_channel(t, c)[s];
        vals[k] = acc / kNumChannels;
      }
    }
    w.mean[s] = mean(vals);
    w.se[s] = std::sqrt(sample_variance(vals) / static_cast<double>(vals.size()));
  }
  return w;
}

}  // namespace

std::vector<ErpWaveform> erp(const EpochSet& epochs, ErpScope scope,
                             ErpGrouping grouping) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> cells;
  if (grouping == ErpGrouping::Condition) {
    std::vector<std::size_t> all(epochs.n_trials());
    for (std::size_t t = 0; t < all.size(); ++t) all[t] = t;
    cells.emplace_back("condition", std::move(all));
  } else {
    // Blocks that reach a 4th presentation are the 4-PRES sequences.
    std::set<int> four_pres_blocks;
    for (const auto& tr : epochs.trials)
      if (tr.pres_index >= 4) four_pres_blocks.insert(tr.block_id);
    std::vector<std::size_t> first, last;
    for (std::size_t t = 0; t < epochs.n_trials(); ++t) {
      const auto& tr = epochs.trials[t];
      if (!four_pres_blocks.count(tr.block_id)) continue;
      if (tr.pres_index == 1) first.push_back(t);
      if (tr.pres_index == 4) last.push_back(t);
    }
    cells.emplace_back("first_pres", std::move(first));
    cells.emplace_back("last_pres", std::move(last));
  }

  std::vector<ErpWaveform> out;
  for (auto& [label, idx] : cells) {
    if (idx.size() < 2)
      throw DataError("erp: grouping cell \"" + label + "\" has fewer than 2 trials");
    if (scope == ErpScope::AllChannelsMean) {
      out.push_back(average_trials(epochs, idx, -1, label));
    } else {
      for (int c = 0; c < kNumChannels; ++c) {
        auto w = average_trials(epochs, idx, c, label + ":" + canonical_channels()[c]);
        out.push_back(std::move(w));
      }
    }
  }
  return out;
}

void write_epochs(const std::string& base, const EpochSet& epochs) {
  nlohmann::json j;
  j["n_trials"] = epochs.n_trials();
  j["n_channels"] = kNumChannels;
  j["n_samples"] = epochs.n_samples;
  j["fs"] = epochs.fs;
  j["t_start_s"] = epochs.t_start_s;
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : epochs.trials) {
    trials.push_back({{"item_id", t.item_id},
                      {"pres_index", t.pres_index},
                      {"block_id", t.block_id},
                      {"level", level_code(t.level)},
                      {"group", t.group},
                      {"participant", t.participant},
                      {"onset_ms", t.onset_ms}});
  }
  j["trials"] = std::move(trials);
  {
    std::ofstream out(base + ".json", std::ios::trunc);
    if (!out) throw DataError("cannot write: " + base + ".json");
    out << j.dump() << '\n';
  }
  std::vector<float> payload(epochs.data.begin(), epochs.data.end());
  write_f32_payload(base + ".f32", payload);
}

EpochSet read_epochs(const std::string& base) {
  nlohmann::json j;
  {
    std::ifstream in(base + ".json");
    if (!in) throw DataError("cannot open: " + base + ".json");
    in >> j;
  }
  EpochSet out;
  out.fs = j.at("fs").get<double>();
  out.t_start_s = j.at("t_start_s").get<double>();
  out.n_samples = j.at("n_samples").get<std::size_t>();
  const auto n_trials = j.at("n_trials").get<std::size_t>();
  if (j.at("n_channels").get<int>() != kNumChannels)
    throw DataError(base + ": unexpected channel count");
  for (const auto& t : j.at("trials")) {
    TrialInfo info;
    info.item_id = t.at("item_id").get<int>();
    info.pres_index = t.at("pres_index").get<int>();
    info.block_id = t.at("block_id").get<int>();
    auto lev = level_from_code(t.at("level").get<std::string>());
    if (!lev) throw DataError(base + ": bad level code");
    info.level = *lev;
    info.group = t.at("group").get<std::string>();
    info.participant = t.at("participant").get<std::string>();
    info.onset_ms = t.at("onset_ms").get<std::int64_t>();
    out.trials.push_back(std::move(info));
  }
  if (out.trials.size() != n_trials) throw DataError(base + ": trial count mismatch");
  const auto payload =
      read_f32_payload(base + ".f32", n_trials * kNumChannels * out.n_samples);
  out.data.assign(payload.begin(), payload.end());
  return out;
}

void write_rejection_csv(const std::string& path, const RejectionReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  out << "trial_index,kept,peak_uv\n";
  std::set<std::size_t> dropped(report.dropped.begin(), report.dropped.end());
  char buf[64];
  for (std::size_t t = 0; t < report.peak_uv.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.9g", report.peak_uv[t]);
    out << t << ',' << (dropped.count(t) ? 0 : 1) << ',' << buf << '\n';
  }
}

}  // namespace tmr
