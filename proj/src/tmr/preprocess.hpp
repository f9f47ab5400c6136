#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tmr/dsp.hpp"
#include "tmr/types.hpp"

namespace tmr {

struct FilterSpec {
  double low_hz = 1.0;
  double high_hz = 20.0;
  int order = 4;  // prototype order; applied forward-backward (zero phase)
};

Recording resample_recording(const Recording& rec, double target_hz = 100.0);
Recording bandpass_recording(const Recording& rec, const FilterSpec& spec);

struct BadChannelReport {
  std::array<double, kNumChannels> kurtosis{};
  std::array<double, kNumChannels> zscore{};  // leave-one-out z across channels
  std::vector<int> flagged;
  std::map<int, std::vector<int>> sources;  // repaired channel -> donor channels
};

// Flags channels whose kurtosis is an outlier against the other channels
// (leave-one-out z-score, |z| > threshold) and replaces them by the mean of
// their clean neighbors. More than two flagged channels is a data error.
std::pair<Recording, BadChannelReport> detect_and_repair_channels(
    const Recording& rec, double z_threshold = 5.0);

const std::array<std::vector<int>, kNumChannels>& channel_neighbors();

struct TrialInfo {
  int item_id = 0;
  int pres_index = 1;
  int block_id = 0;
  Level level = Level::L1;
  std::string group;
  std::string participant;
  std::int64_t onset_ms = 0;
};

// Cue-locked trials, [-0.5, 4.0) s at 100 Hz = 450 samples each; data is
// trial-major [trial][channel][sample] in microvolts.
struct EpochSet {
  double fs = 100.0;
  double t_start_s = -0.5;
  std::size_t n_samples = 450;
  std::vector<TrialInfo> trials;
  std::vector<double> data;
  std::vector<std::size_t> dropped_bounds;  // cue indices outside the record

  std::size_t n_trials() const { return trials.size(); }
  double* trial_channel(std::size_t t, std::size_t c) {
    return data.data() + (t * kNumChannels + c) * n_samples;
  }
  const double* trial_channel(std::size_t t, std::size_t c) const {
    return data.data() + (t * kNumChannels + c) * n_samples;
  }
  double time_at(std::size_t sample) const {
    return t_start_s + static_cast<double>(sample) / fs;
  }
  EpochSet select(const std::vector<std::size_t>& keep) const;
};

// One trial per cue, samples [onset-0.5s, onset+4s); trials whose window
// leaves the record are dropped and listed in dropped_bounds. The recording
// must already be at 100 Hz.
EpochSet extract_epochs(const Recording& rec, const CueLog& log,
                        const std::map<int, Level>& level_of,
                        const std::string& group = "",
                        const std::string& participant = "");

struct RejectionReport {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
  std::vector<double> peak_uv;  // per input trial
  double threshold_uv = 500.0;
};

// Drops any trial with |sample| > threshold on any channel (strict).
std::pair<EpochSet, RejectionReport> reject_amplitude(const EpochSet& epochs,
                                                      double threshold_uv = 500.0);

// Subtracts the per-trial, per-channel mean of the [-0.5, 0) s window.
EpochSet baseline_correct(const EpochSet& epochs);

enum class ErpScope { AllChannelsMean, PerChannel };
enum class ErpGrouping { Condition, FirstVsLastPres };

struct ErpWaveform {
  std::string label;
  int channel = -1;  // -1 = all-channel mean
  std::size_t n_trials = 0;
  std::vector<double> mean;
  std::vector<double> se;  // across-trial standard error
};

// Trial-averaged waveforms. FirstVsLastPres contrasts pres_index 1 vs 4
// within 4-presentation blocks. Cells with < 2 trials are errors.
std::vector<ErpWaveform> erp(const EpochSet& epochs, ErpScope scope,
                             ErpGrouping grouping);

void write_epochs(const std::string& base, const EpochSet& epochs);
EpochSet read_epochs(const std::string& base);
void write_rejection_csv(const std::string& path, const RejectionReport& report);

}  // namespace tmr
