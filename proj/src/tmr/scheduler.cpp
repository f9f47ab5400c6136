#include "tmr/scheduler.hpp"

#include <algorithm>
#include <set>

#include "tmr/error.hpp"
#include "tmr/rng.hpp"

namespace tmr {

const char* policy_code(PolicyKind p) {
  switch (p) {
    case PolicyKind::NoStim: return "nostim";
    case PolicyKind::Fixed: return "fixed";
    case PolicyKind::Personalized: return "personalized";
  }
  return "?";
}

std::optional<PolicyKind> policy_from_code(const std::string& s) {
  if (s == "nostim") return PolicyKind::NoStim;
  if (s == "fixed") return PolicyKind::Fixed;
  if (s == "personalized") return PolicyKind::Personalized;
  return std::nullopt;
}

std::vector<PlanBlock> CuePlan::pass_order(std::uint64_t pass) const {
  std::vector<PlanBlock> order = blocks;
  Rng rng(derive_seed(seed, "plan-pass", pass));
  rng.shuffle(order);
  return order;
}

int CuePlan::cues_per_pass() const {
  int total = 0;
  for (const auto& b : blocks) total += b.repetitions;
  return total;
}

CuePlan compile_plan(const Policy& policy,
                     std::span<const BehavioralRecord> pre_records,
                     std::uint64_t seed) {
  CuePlan plan;
  plan.policy = policy.kind;
  plan.seed = seed;
  if (policy.kind == PolicyKind::NoStim) return plan;

  std::map<int, const BehavioralRecord*> by_item;
  for (const auto& r : pre_records) {
    if (r.session != Session::Pre) continue;
    if (by_item.count(r.item_id))
      throw DataError("compile_plan: duplicate pre-sleep record for item " +
                      std::to_string(r.item_id));
    by_item[r.item_id] = &r;
  }
  std::vector<int> missing;
  for (int id = 1; id <= kCorpusSize; ++id)
    if (!by_item.count(id)) missing.push_back(id);
  if (!missing.empty()) {
    std::string msg = "compile_plan: missing pre-sleep records for items:";
    for (int id : missing) msg += " " + std::to_string(id);
    throw DataError(msg);
  }

  for (int id = 1; id <= kCorpusSize; ++id) {
    int reps = 1;  // Fixed: every item once per pass
    if (policy.kind == PolicyKind::Personalized) {
      const auto* r = by_item.at(id);
      reps = policy.rule.repetitions(r->level, r->correct);
    }
    if (reps > 0) plan.blocks.push_back({id, reps});
  }
  return plan;
}

std::vector<CueEvent> scheduler_step(SchedulerState& state, const CuePlan& plan,
                                     const SchedulerConfig& config,
                                     SleepStage epoch_stage,
                                     std::int64_t epoch_start_ms) {
  std::vector<CueEvent> emitted;
  if (!config.stage_eligible(epoch_stage)) {
    // Pause: any ineligible epoch resets the stability criterion entirely.
    if (state.mode != SchedulerMode::Exhausted)
      state.mode = SchedulerMode::AwaitingStability;
    state.consecutive_eligible = 0;
    return emitted;
  }

  ++state.consecutive_eligible;
  if (state.mode == SchedulerMode::AwaitingStability &&
      state.consecutive_eligible > config.stability_epochs) {
    if (plan.blocks.empty()) {
      state.mode = SchedulerMode::Exhausted;
      return emitted;
    }
    state.mode = SchedulerMode::Delivering;
    state.next_onset_ms = epoch_start_ms;
  }
  if (state.mode != SchedulerMode::Delivering) return emitted;

  // A pending onset that no longer fits is re-anchored to this epoch's start;
  // the gap to the previous cue is then >= the regular spacing.
  if (state.next_onset_ms < epoch_start_ms) state.next_onset_ms = epoch_start_ms;

  const std::int64_t epoch_end_ms = epoch_start_ms + config.epoch_ms;
  while (state.next_onset_ms + config.cue_window_ms <= epoch_end_ms) {
    // Advance the plan cursor.
    if (state.pass_blocks.empty()) state.pass_blocks = plan.pass_order(state.pass);
    if (state.block_index >= state.pass_blocks.size()) {
      if (!plan.cycling) {
        state.mode = SchedulerMode::Exhausted;
        return emitted;
      }
      ++state.pass;
      state.pass_blocks = plan.pass_order(state.pass);
      state.block_index = 0;
      state.pres_emitted = 0;
    }
    const PlanBlock& block = state.pass_blocks[state.block_index];
    if (state.pres_emitted == 0) state.current_block_id = state.next_block_id++;

    CueEvent cue;
    cue.onset_ms = state.next_onset_ms;
    cue.item_id = block.item_id;
    cue.pres_index = state.pres_emitted + 1;
    cue.block_id = state.current_block_id;
    cue.second_word_offset_ms = 2000;
    emitted.push_back(cue);

    ++state.pres_emitted;
    if (state.pres_emitted >= block.repetitions) {
      ++state.block_index;
      state.pres_emitted = 0;
    }
    state.next_onset_ms += config.onset_spacing_ms();
  }
  return emitted;
}

ScheduleResult run_scheduler(const Hypnogram& hypnogram, const CuePlan& plan,
                             const SchedulerConfig& config,
                             const std::map<int, Level>& level_of) {
  auto rep = validate_hypnogram(hypnogram);
  if (!rep.valid()) throw DataError("run_scheduler: " + rep.violations[0]);
  ScheduleResult out;
  SchedulerState state;
  for (std::size_t e = 0; e < hypnogram.stages.size(); ++e) {
    const auto epoch_start = static_cast<std::int64_t>(e) * config.epoch_ms;
    auto cues = scheduler_step(state, plan, config, hypnogram.stages[e], epoch_start);
    out.log.insert(out.log.end(), cues.begin(), cues.end());
  }
  out.summary.total_cues = out.log.size();
  for (const auto& c : out.log) {
    auto it = level_of.find(c.item_id);
    if (it != level_of.end())
      out.summary.cues_per_level[static_cast<std::size_t>(it->second) - 1]++;
  }
  out.summary.delivery_min = static_cast<double>(out.log.size()) *
                             static_cast<double>(config.onset_spacing_ms()) / 60000.0;
  return out;
}

std::vector<std::string> verify_cue_log(const Hypnogram& hypnogram,
                                        const CueLog& log, const CuePlan& plan,
                                        const SchedulerConfig& config) {
  std::vector<std::string> violations;
  auto fail = [&](const std::string& msg) {
    if (violations.size() < 32) violations.push_back(msg);
  };

  // Consecutive eligible-epoch run length ending at each epoch, inclusive.
  const std::size_t n_epochs = hypnogram.stages.size();
  std::vector<int> run_len(n_epochs, 0);
  for (std::size_t e = 0; e < n_epochs; ++e) {
    if (config.stage_eligible(hypnogram.stages[e]))
      run_len[e] = (e > 0 ? run_len[e - 1] : 0) + 1;
  }

  std::int64_t prev_onset = -1;
  std::int64_t prev_epoch = -1;
  for (const auto& c : log) {
    const auto epoch = c.onset_ms / config.epoch_ms;
    if (epoch < 0 || epoch >= static_cast<std::int64_t>(n_epochs)) {
      fail("onset beyond hypnogram at " + std::to_string(c.onset_ms));
      continue;
    }
    const SleepStage stage = hypnogram.stages[static_cast<std::size_t>(epoch)];
    if (!config.stage_eligible(stage))
      fail("onset in ineligible stage at " + std::to_string(c.onset_ms));
    // Stability: the onset's epoch must close a run of > stability_epochs
    // eligible epochs (i.e. at least 10 full epochs strictly before it).
    if (run_len[static_cast<std::size_t>(epoch)] <= config.stability_epochs)
      fail("onset without stability criterion at " + std::to_string(c.onset_ms));
    // Containment of the full cue window.
    if (c.onset_ms + config.cue_window_ms > (epoch + 1) * config.epoch_ms)
      fail("cue window crosses epoch boundary at " + std::to_string(c.onset_ms));
    if (prev_onset >= 0) {
      const std::int64_t gap = c.onset_ms - prev_onset;
      if (gap < config.onset_spacing_ms())
        fail("onset gap below spacing at " + std::to_string(c.onset_ms));
      // Within one epoch delivery is an unbroken run: spacing is exact.
      if (epoch == prev_epoch && gap != config.onset_spacing_ms())
        fail("irregular same-epoch spacing at " + std::to_string(c.onset_ms));
    }
    prev_onset = c.onset_ms;
    prev_epoch = epoch;
  }

  // Block structure: contiguous pres_index runs 1..k, full blocks matching the
  // plan's repetition count, and per-item totals consistent with the plan.
  std::map<int, int> plan_reps;
  for (const auto& b : plan.blocks) plan_reps[b.item_id] = b.repetitions;
  std::map<int, std::int64_t> item_counts;
  std::size_t i = 0;
  std::size_t partial_blocks = 0;
  while (i < log.size()) {
    const int block_id = log[i].block_id;
    const int item = log[i].item_id;
    std::size_t j = i;
    int expect = 1;
    while (j < log.size() && log[j].block_id == block_id) {
      if (log[j].item_id != item) fail("mixed items in block " + std::to_string(block_id));
      if (log[j].pres_index != expect)
        fail("non-contiguous pres_index in block " + std::to_string(block_id));
      ++expect;
      ++j;
    }
    const int emitted = expect - 1;
    auto it = plan_reps.find(item);
    if (it == plan_reps.end()) {
      fail("item " + std::to_string(item) + " not in plan");
    } else {
      if (emitted > it->second)
        fail("block " + std::to_string(block_id) + " exceeds plan repetitions");
      if (emitted < it->second) ++partial_blocks;
    }
    item_counts[item] += emitted;
    i = j;
  }
  // Only the final block of the night may be cut short.
  if (partial_blocks > 1) fail("more than one partial block");
  for (const auto& [item, count] : item_counts) {
    auto it = plan_reps.find(item);
    if (it != plan_reps.end() && it->second == 0 && count > 0)
      fail("cues emitted for zero-repetition item " + std::to_string(item));
  }
  if (plan.policy == PolicyKind::NoStim && !log.empty())
    fail("cues emitted under NoStim policy");
  return violations;
}

}  // namespace tmr
