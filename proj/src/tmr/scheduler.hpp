#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tmr/types.hpp"

namespace tmr {

enum class PolicyKind : std::uint8_t { NoStim = 0, Fixed = 1, Personalized = 2 };

const char* policy_code(PolicyKind p);  // "nostim","fixed","personalized"
std::optional<PolicyKind> policy_from_code(const std::string& s);

// Presentation counts per (level, correctness):
//   L1 -> 0, L2 correct -> 1, L2 incorrect -> 2, L3 -> 4.
struct PresRule {
  int l1 = 0;
  int l2_correct = 1;
  int l2_incorrect = 2;
  int l3 = 4;

  int repetitions(Level level, bool correct) const {
    switch (level) {
      case Level::L1: return l1;
      case Level::L2: return correct ? l2_correct : l2_incorrect;
      case Level::L3: return l3;
    }
    return 0;
  }
};

struct Policy {
  PolicyKind kind = PolicyKind::NoStim;
  PresRule rule;  // used by Personalized only
};

struct SchedulerConfig {
  std::int64_t cue_window_ms = 4000;
  std::int64_t isi_ms = 4000;
  int stability_epochs = 10;
  std::int64_t epoch_ms = kEpochMs;
  std::array<bool, kNumStages> eligible{false, false, false, true, true};  // N2, N3

  std::int64_t onset_spacing_ms() const { return cue_window_ms + isi_ms; }
  bool stage_eligible(SleepStage s) const {
    return eligible[static_cast<std::size_t>(s)];
  }
};

struct PlanBlock {
  int item_id = 0;
  int repetitions = 0;
};

// Blocks are stored in item order; each pass shuffles a copy with a seed
// derived from (seed, pass index). When a pass is exhausted and cycling is
// on, delivery continues with a freshly shuffled pass.
struct CuePlan {
  PolicyKind policy = PolicyKind::NoStim;
  std::uint64_t seed = 0;
  bool cycling = true;
  std::vector<PlanBlock> blocks;

  std::vector<PlanBlock> pass_order(std::uint64_t pass) const;
  int cues_per_pass() const;
};

// One block per item with repetitions from the policy; zero-repetition blocks
// dropped. Missing or duplicate pre-sleep records are data errors.
CuePlan compile_plan(const Policy& policy,
                     std::span<const BehavioralRecord> pre_records,
                     std::uint64_t seed);

enum class SchedulerMode : std::uint8_t { AwaitingStability, Delivering, Exhausted };

struct SchedulerState {
  SchedulerMode mode = SchedulerMode::AwaitingStability;
  int consecutive_eligible = 0;
  std::int64_t next_onset_ms = 0;
  // Plan cursor.
  std::uint64_t pass = 0;
  std::vector<PlanBlock> pass_blocks;
  std::size_t block_index = 0;
  int pres_emitted = 0;  // within the current block
  int next_block_id = 1;
  int current_block_id = 0;
};

// Feeds one hypnogram epoch to the state machine and returns the cues emitted
// within it. Epochs must arrive in chronological order. An ineligible epoch
// resets the stability counter; delivery begins at the first epoch after the
// counter has reached stability_epochs, onsets every 8 s, and an onset is
// admitted only when the full cue window fits inside the current epoch.
std::vector<CueEvent> scheduler_step(SchedulerState& state, const CuePlan& plan,
                                     const SchedulerConfig& config,
                                     SleepStage epoch_stage,
                                     std::int64_t epoch_start_ms);

struct ScheduleSummary {
  std::size_t total_cues = 0;
  std::array<std::size_t, 3> cues_per_level{};  // L1, L2, L3 (needs level map)
  double delivery_min = 0.0;                    // total_cues * 8 s
};

struct ScheduleResult {
  CueLog log;
  ScheduleSummary summary;
};

// Folds scheduler_step over all epochs. level_of maps item_id -> Level for
// the per-level summary counts (items missing from the map are uncounted).
ScheduleResult run_scheduler(const Hypnogram& hypnogram, const CuePlan& plan,
                             const SchedulerConfig& config,
                             const std::map<int, Level>& level_of = {});

// Replays a cue log against its hypnogram and plan: stage safety with the
// stability criterion, spacing, block contiguity, and per-item counts.
// Returns human-readable violations (empty = pass).
std::vector<std::string> verify_cue_log(const Hypnogram& hypnogram,
                                        const CueLog& log, const CuePlan& plan,
                                        const SchedulerConfig& config);

}  // namespace tmr
