#include "tmr/types.hpp"

#include <cmath>

namespace tmr {

const char* stage_code(SleepStage s) {
  switch (s) {
    case SleepStage::Wake: return "W";
    case SleepStage::Rem: return "R";
    case SleepStage::N1: return "N1";
    case SleepStage::N2: return "N2";
    case SleepStage::N3: return "N3";
  }
  return "?";
}

std::optional<SleepStage> stage_from_code(const std::string& code) {
  if (code == "W") return SleepStage::Wake;
  if (code == "R") return SleepStage::Rem;
  if (code == "N1") return SleepStage::N1;
  if (code == "N2") return SleepStage::N2;
  if (code == "N3") return SleepStage::N3;
  return std::nullopt;
}

SleepStage Hypnogram::stage_at_s(double t) const {
  if (stages.empty()) return SleepStage::Wake;
  auto idx = static_cast<std::int64_t>(std::floor(t / epoch_length_s));
  if (idx < 0) idx = 0;
  if (idx >= static_cast<std::int64_t>(stages.size()))
    idx = static_cast<std::int64_t>(stages.size()) - 1;
  return stages[static_cast<std::size_t>(idx)];
}

Hypnogram Hypnogram::from_stages(std::vector<SleepStage> stages) {
  Hypnogram h;
  h.stages = std::move(stages);
  h.lights_off_s = 0.0;
  h.lights_on_s = h.duration_s();
  return h;
}

const std::array<std::string, kNumChannels>& canonical_channels() {
  static const std::array<std::string, kNumChannels> k = {"F3", "F4", "C3",
                                                          "C4", "O1", "O2"};
  return k;
}

ValidationReport validate_recording(const Recording& rec) {
  ValidationReport rep;
  if (rec.sample_rate_hz <= 0.0) rep.violations.push_back("non-positive sample rate");
  if (rec.channel_labels.size() != kNumChannels ||
      rec.samples.size() != kNumChannels) {
    rep.violations.push_back("channel count");
    return rep;
  }
  const auto& canon = canonical_channels();
  for (int c = 0; c < kNumChannels; ++c) {
    if (rec.channel_labels[c] != canon[c]) {
      rep.violations.push_back("channel label order");
      break;
    }
  }
  const std::size_t n = rec.samples[0].size();
  for (int c = 0; c < kNumChannels; ++c) {
    if (rec.samples[c].size() != n) {
      rep.violations.push_back("channel length mismatch");
      break;
    }
  }
  for (int c = 0; c < kNumChannels; ++c) {
    for (float v : rec.samples[c]) {
      if (!std::isfinite(v)) {
        rep.violations.push_back("non-finite sample");
        c = kNumChannels;
        break;
      }
    }
  }
  return rep;
}

ValidationReport validate_hypnogram(const Hypnogram& h) {
  ValidationReport rep;
  if (h.stages.empty()) rep.violations.push_back("empty stage sequence");
  if (h.epoch_length_s != kEpochSeconds) rep.violations.push_back("epoch length != 30 s");
  if (h.lights_off_s > h.lights_on_s) rep.violations.push_back("lights_off after lights_on");
  if (h.lights_on_s > h.duration_s() + 1e-9) rep.violations.push_back("lights_on beyond recording");
  if (h.lights_off_s < 0.0) rep.violations.push_back("negative lights_off");
  return rep;
}

const char* session_code(Session s) { return s == Session::Pre ? "pre" : "post"; }

const char* level_code(Level l) {
  switch (l) {
    case Level::L1: return "L1";
    case Level::L2: return "L2";
    case Level::L3: return "L3";
  }
  return "?";
}

std::optional<Session> session_from_code(const std::string& s) {
  if (s == "pre") return Session::Pre;
  if (s == "post") return Session::Post;
  return std::nullopt;
}

std::optional<Level> level_from_code(const std::string& s) {
  if (s == "L1") return Level::L1;
  if (s == "L2") return Level::L2;
  if (s == "L3") return Level::L3;
  return std::nullopt;
}

ValidationReport validate_cue_log(const CueLog& log) {
  ValidationReport rep;
  std::int64_t prev = -1;
  for (const auto& c : log) {
    if (c.onset_ms < 0) rep.violations.push_back("negative onset");
    if (c.pres_index < 1) rep.violations.push_back("pres_index < 1");
    if (c.second_word_offset_ms < 1800 || c.second_word_offset_ms > 2200)
      rep.violations.push_back("second word offset outside [1800, 2200] ms");
    if (c.onset_ms < prev) rep.violations.push_back("onsets not sorted");
    prev = c.onset_ms;
    if (!rep.violations.empty() && rep.violations.size() > 16) break;
  }
  return rep;
}

SleepArchitecture score_architecture(const Hypnogram& h) {
  SleepArchitecture out;
  const double epoch_min = h.epoch_length_s / 60.0;
  // Lights window expressed in whole epochs.
  auto first_ep = static_cast<std::int64_t>(std::ceil(h.lights_off_s / h.epoch_length_s - 1e-9));
  auto last_ep = static_cast<std::int64_t>(std::floor(h.lights_on_s / h.epoch_length_s + 1e-9));
  first_ep = std::max<std::int64_t>(first_ep, 0);
  last_ep = std::min<std::int64_t>(last_ep, static_cast<std::int64_t>(h.stages.size()));
  const std::int64_t n_window = std::max<std::int64_t>(0, last_ep - first_ep);
  out.time_in_bed_min = static_cast<double>(n_window) * epoch_min;

  std::int64_t first_sleep = -1, last_sleep = -1;
  std::array<std::int64_t, kNumStages> counts{};
  for (std::int64_t e = first_ep; e < last_ep; ++e) {
    const SleepStage s = h.stages[static_cast<std::size_t>(e)];
    counts[static_cast<std::size_t>(s)]++;
    if (s != SleepStage::Wake) {
      if (first_sleep < 0) first_sleep = e;
      last_sleep = e;
    }
  }

  for (int s = 0; s < kNumStages; ++s) {
    out.stages[s].duration_min = static_cast<double>(counts[s]) * epoch_min;
    out.stages[s].pct = out.time_in_bed_min > 0.0
                            ? 100.0 * out.stages[s].duration_min / out.time_in_bed_min
                            : 0.0;
  }

  if (first_sleep < 0) {
    // No sleep at all: SOL is undefined and reported as time in bed.
    out.sol_undefined = true;
    out.sol_min = out.time_in_bed_min;
    out.tst_min = 0.0;
    out.waso_min = 0.0;
    out.terminal_wake_min = 0.0;
    out.se_pct = 0.0;
    return out;
  }

  std::int64_t tst = 0, waso = 0;
  for (std::int64_t e = first_sleep; e <= last_sleep; ++e) {
    if (h.stages[static_cast<std::size_t>(e)] == SleepStage::Wake)
      ++waso;
    else
      ++tst;
  }
  out.sol_min = static_cast<double>(first_sleep - first_ep) * epoch_min;
  out.tst_min = static_cast<double>(tst) * epoch_min;
  out.waso_min = static_cast<double>(waso) * epoch_min;
  // Wake after the final sleep epoch is terminal wake, not WASO.
  out.terminal_wake_min = static_cast<double>(last_ep - 1 - last_sleep) * epoch_min;
  out.se_pct = out.time_in_bed_min > 0.0 ? 100.0 * out.tst_min / out.time_in_bed_min : 0.0;
  return out;
}

}  // namespace tmr
