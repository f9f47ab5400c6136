#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tmr {

enum class SleepStage : std::uint8_t { Wake = 0, Rem = 1, N1 = 2, N2 = 3, N3 = 4 };

inline constexpr int kNumStages = 5;
inline constexpr int kEpochSeconds = 30;
inline constexpr std::int64_t kEpochMs = 30000;

// N2 and N3 are the only stages in which cues may be delivered.
inline constexpr bool is_cue_eligible(SleepStage s) {
  return s == SleepStage::N2 || s == SleepStage::N3;
}

const char* stage_code(SleepStage s);                    // "W","R","N1","N2","N3"
std::optional<SleepStage> stage_from_code(const std::string& code);

// 30-s-epoch stage sequence plus the lights interval it was scored against.
struct Hypnogram {
  double epoch_length_s = kEpochSeconds;
  std::vector<SleepStage> stages;
  double lights_off_s = 0.0;
  double lights_on_s = 0.0;

  double duration_s() const { return epoch_length_s * static_cast<double>(stages.size()); }
  // Stage of the epoch containing time t (seconds from recording start).
  SleepStage stage_at_s(double t) const;
  SleepStage stage_at_ms(std::int64_t t_ms) const { return stage_at_s(static_cast<double>(t_ms) / 1000.0); }

  // Sequence covering the whole span with lights_off = 0, lights_on = end.
  static Hypnogram from_stages(std::vector<SleepStage> stages);
};

inline constexpr int kNumChannels = 6;
const std::array<std::string, kNumChannels>& canonical_channels();  // F3 F4 C3 C4 O1 O2

// Multichannel EEG in microvolts. Samples are stored as float32 so that the
// on-disk payload (F32LE) round-trips bit-exactly.
struct Recording {
  double sample_rate_hz = 0.0;
  std::vector<std::string> channel_labels;
  std::vector<std::vector<float>> samples;  // channel-major
  double t0_s = 0.0;

  std::size_t n_samples() const { return samples.empty() ? 0 : samples[0].size(); }
  double duration_s() const { return sample_rate_hz > 0 ? static_cast<double>(n_samples()) / sample_rate_hz : 0.0; }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
};

ValidationReport validate_recording(const Recording& rec);
ValidationReport validate_hypnogram(const Hypnogram& h);

inline constexpr int kCorpusSize = 104;

struct WordPairItem {
  int item_id = 0;  // 1..104
  std::string cue_word;
  std::string target_word;
};

std::vector<WordPairItem> default_word_corpus();

enum class Session : std::uint8_t { Pre = 0, Post = 1 };
enum class Level : std::uint8_t { L1 = 1, L2 = 2, L3 = 3 };

const char* session_code(Session s);  // "pre","post"
const char* level_code(Level l);      // "L1","L2","L3"
std::optional<Session> session_from_code(const std::string& s);
std::optional<Level> level_from_code(const std::string& s);

struct BehavioralRecord {
  int item_id = 0;
  Session session = Session::Pre;
  bool correct = false;
  Level level = Level::L1;  // prospective pre-sleep rating, never re-assigned
  std::string response_text;
};

struct CueEvent {
  std::int64_t onset_ms = 0;
  int item_id = 0;
  int pres_index = 1;  // k-th presentation within the item's block, 1-based
  int block_id = 0;
  int second_word_offset_ms = 2000;
};

using CueLog = std::vector<CueEvent>;

ValidationReport validate_cue_log(const CueLog& log);

struct StageSummary {
  double duration_min = 0.0;
  double pct = 0.0;  // of time in bed
};

struct SleepArchitecture {
  double tst_min = 0.0;
  double sol_min = 0.0;
  double waso_min = 0.0;
  double terminal_wake_min = 0.0;
  double time_in_bed_min = 0.0;
  double se_pct = 0.0;
  bool sol_undefined = false;  // all-wake night: SOL reported as time in bed
  std::array<StageSummary, kNumStages> stages;  // indexed by SleepStage
};

// TST / SOL / WASO / SE over the lights_off..lights_on window; per-stage
// durations and percentages over the same window (time in bed).
SleepArchitecture score_architecture(const Hypnogram& h);

}  // namespace tmr
