#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tmr/stats.hpp"
#include "tmr/types.hpp"

namespace tmr {

struct AccuracyCell {
  double accuracy_pct = 0.0;
  std::size_t n_items = 0;
  bool absent = false;  // no items match the filter; not the same as 0%
};

struct TransitionRow {
  double cc = 0.0, ci = 0.0, ic = 0.0, ii = 0.0;
  std::size_t n_items = 0;
  bool absent = false;
};

// Percent correct over the records of one (participant, session), optionally
// restricted to one level. nullopt = All.
AccuracyCell accuracy(std::span<const BehavioralRecord> records,
                      std::optional<Level> level_filter);

// Pre->post transition ratios (CC/CI/IC/II) over matched item sets. An item
// present in only one session is a data error (message lists the items).
TransitionRow transitions(std::span<const BehavioralRecord> pre_records,
                          std::span<const BehavioralRecord> post_records,
                          std::optional<Level> level_filter);

// Case-folded, whitespace-trimmed edit distance <= 1.
bool match_answer(const std::string& response_text, const std::string& target_word);

// Spearman correlation between level (1..3) and level-wise accuracy, one
// (level, accuracy) point per represented level per participant-session,
// pooled across the given participant-sessions.
CorrResult difficulty_validity(
    const std::vector<std::vector<BehavioralRecord>>& participant_sessions);

}  // namespace tmr
