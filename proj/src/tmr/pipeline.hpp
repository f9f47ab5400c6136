#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tmr/behavior.hpp"
#include "tmr/decode.hpp"
#include "tmr/sim.hpp"

namespace tmr {

enum class ConditionSel { All, L3, Both };

const char* condition_code(ConditionSel c);  // "all","l3","both"
std::optional<ConditionSel> condition_from_code(const std::string& s);

struct AnalysisConfig {
  FilterSpec filter;  // 1-20 Hz, order 4, zero phase
  double resample_hz = 100.0;
  double kurtosis_z = 5.0;
  double reject_uv = 500.0;
  // Per participant and condition; trials beyond the cap are subsampled
  // deterministically from the master seed.
  std::size_t max_trials_per_condition = 150;
  ErpacConfig erpac;
  double scalar_window_lo_s = 0.0;
  double scalar_window_hi_s = 4.0;
};

struct DecodeConfig {
  CvConfig cv;  // 5 folds x 2 repetitions
  int surrogates = 250;
  int cluster_permutations = 1000;
  double alpha = 0.05;
  double c_param = 1.0;
  double gamma = 0.0;  // <= 0: scale heuristic
  std::size_t max_trials_per_class = 60;
};

struct RunConfig {
  CohortSpec cohort;
  SchedulerConfig scheduler;
  AnalysisConfig analysis;
  DecodeConfig decode;
  ConditionSel condition = ConditionSel::Both;
  std::string out_dir;
  int threads = 0;
  bool force = false;

  std::uint64_t master_seed() const { return cohort.master_seed; }
};

RunConfig default_run_config();
// Full-scale profile: 8-h sessions, 500 Hz synthesis, n = 12 per group.
void apply_full_scale(RunConfig& config);

RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& config);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

// ---- In-memory pipeline core (the cmd_* stages wrap these with file I/O) --

struct ParticipantData {
  std::string group;
  std::string id;  // e.g. "PTMR_00"
  std::uint64_t seed = 0;
  Hypnogram hypnogram;
  BehaviorSets behavior;
  CuePlan plan;
  CueLog cues;
  ScheduleSummary schedule_summary;
  Recording recording;
};

ParticipantData simulate_participant(const RunConfig& config, std::size_t group_idx,
                                     int participant_idx);

// Preprocessed, condition-filtered, trial-capped epochs (resample, bandpass,
// channel repair, epoching, amplitude rejection, baseline correction).
struct PreprocessedTrials {
  EpochSet epochs;
  BadChannelReport channels;
  RejectionReport rejection;
  std::size_t n_cues = 0;
};

PreprocessedTrials preprocess_participant(const RunConfig& config,
                                          const Recording& recording,
                                          const CueLog& cues,
                                          const std::map<int, Level>& levels,
                                          ConditionSel condition,
                                          const std::string& group,
                                          const std::string& participant,
                                          std::uint64_t seed);

struct FeatureScalars {
  double sw_power_db = 0.0;
  double spindle_power_db = 0.0;
  double coupling = 0.0;
  std::size_t n_trials = 0;
};

// Mean SW/spindle band power (dB) over the post-stimulus window plus the
// spindle-band coupling scalar from the ERPAC map.
FeatureScalars analyze_scalars(const RunConfig& config, const EpochSet& epochs);

// ---- Stage commands (persisted artifacts) ---------------------------------

void cmd_simulate(const RunConfig& config);
void cmd_schedule(const RunConfig& config, const std::string& participant = "");
void cmd_analyze(const RunConfig& config);
void cmd_decode(const RunConfig& config);
void cmd_report(const RunConfig& config);
void cmd_all(const RunConfig& config);

// Manifest bookkeeping: per-stage input/output digests and wall-clock times;
// re-running with the same config must reproduce identical digests.
bool verify_manifest(const std::string& out_dir, std::string* first_mismatch);

std::vector<std::string> participant_ids(const RunConfig& config);

}  // namespace tmr
