#pragma once

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tmr/scheduler.hpp"
#include "tmr/types.hpp"

namespace tmr {

struct HypnogramModel {
  SleepStage initial_stage = SleepStage::Wake;
  // Row-stochastic per-30-s-epoch transition probabilities, indexed
  // [from][to] in stage order W, R, N1, N2, N3.
  std::array<std::array<double, kNumStages>, kNumStages> transition{};
  std::size_t duration_epochs = 240;
  std::uint64_t seed = 0;
};

// Transition matrix tuned so that ~40-80% of an 8-h night is N2+N3 and
// eligible runs comfortably exceed the 10-epoch stability criterion.
HypnogramModel default_hypnogram_model(std::size_t duration_epochs,
                                       std::uint64_t seed);

Hypnogram gen_hypnogram(const HypnogramModel& model);

struct StageOscillator {
  double background_exponent = 1.0;  // 1/f^a
  double background_rms_uv = 10.0;
  double sw_center_hz = 1.0;  // within [0.5, 2]
  double sw_amp_uv = 0.0;
  double spindle_rate_per_min = 0.0;
  double spindle_amp_uv = 0.0;
};

struct OscillatorParams {
  std::array<StageOscillator, kNumStages> stage;  // indexed by SleepStage
  double spindle_center_hz = 13.0;  // within [12, 16]
  double spindle_duration_s = 1.0;
  std::array<double, kNumChannels> channel_gain = {1.0, 1.0, 0.9, 0.9, 0.5, 0.5};
};

OscillatorParams default_oscillator_params();

struct CouplingParams {
  double kappa = 0.0;  // modulation depth in [0, 1]
  double phi0 = 0.0;   // preferred SW phase, (-pi, pi]
};

struct EvokedModel {
  double erp_amp_uv = 0.0;
  double erp_latency_s = 0.0;
  double sw_power_gain = 1.0;       // multiplicative, 0-4 s post cue
  double spindle_power_gain = 1.0;  // multiplicative, 0-4 s post cue
  double second_word_gain = 1.0;    // extra factor, 2-4 s post cue
  double habituation = 1.0;         // per-pres_index decay factor in (0, 1]
};

// Ground truth: 1/f background + stage-gated slow oscillation + spindle
// bursts whose Hann envelope is modulated by (1 + kappa*cos(phi_sw - phi0))/2
// + cue-locked evoked gains and ERP kernel with per-presentation habituation.
// Deterministic in (params, seed). A cue onset in an ineligible stage is a
// data error.
Recording synth_eeg(const Hypnogram& hypnogram, const OscillatorParams& osc,
                    const CouplingParams& coupling, const EvokedModel& evoked,
                    const CueLog& cue_log, double fs_hz, std::uint64_t seed);

struct GroupSpec {
  std::string name;
  PolicyKind policy = PolicyKind::NoStim;
  EvokedModel evoked;
  CouplingParams coupling;
  // P(post correct | level, pre correctness); [level-1][pre_correct].
  std::array<std::array<double, 2>, 3> consolidation{
      {{0.05, 0.95}, {0.10, 0.80}, {0.08, 0.55}}};
};

struct CohortSpec {
  int n_per_group = 6;
  std::vector<GroupSpec> groups;
  std::array<double, 3> level_proportions = {0.12, 0.23, 0.65};
  std::array<double, 3> pre_correct_prob = {0.90, 0.60, 0.20};
  std::size_t session_epochs = 240;  // 2-h desk scale
  double fs_hz = 100.0;
  std::uint64_t master_seed = 1;
};

// Three-group default: PTMR (personalized policy, strongest evoked response),
// TMR (fixed), CNT (fixed sham schedule, null evoked response).
CohortSpec default_cohort_spec();

struct BehaviorSets {
  std::vector<BehavioralRecord> pre;
  std::vector<BehavioralRecord> post;
};

// 104 items assigned levels by the spec proportions (largest remainder, then
// seeded shuffle); correctness drawn per level and consolidated per group.
BehaviorSets gen_behavior(const CohortSpec& spec, const GroupSpec& group,
                          std::uint64_t participant_seed);

void to_json(nlohmann::json& j, const HypnogramModel& m);
void from_json(const nlohmann::json& j, HypnogramModel& m);
void to_json(nlohmann::json& j, const OscillatorParams& p);
void from_json(const nlohmann::json& j, OscillatorParams& p);
void to_json(nlohmann::json& j, const CouplingParams& p);
void from_json(const nlohmann::json& j, CouplingParams& p);
void to_json(nlohmann::json& j, const EvokedModel& m);
void from_json(const nlohmann::json& j, EvokedModel& m);
void to_json(nlohmann::json& j, const GroupSpec& g);
void from_json(const nlohmann::json& j, GroupSpec& g);
void to_json(nlohmann::json& j, const CohortSpec& s);
void from_json(const nlohmann::json& j, CohortSpec& s);

}  // namespace tmr
