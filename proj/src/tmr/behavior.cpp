#include "tmr/behavior.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "tmr/error.hpp"

namespace tmr {

AccuracyCell accuracy(std::span<const BehavioralRecord> records,
                      std::optional<Level> level_filter) {
  AccuracyCell cell;
  std::size_t correct = 0;
  for (const auto& r : records) {
    if (level_filter && r.level != *level_filter) continue;
    ++cell.n_items;
    if (r.correct) ++correct;
  }
  if (cell.n_items == 0) {
    cell.absent = true;
    return cell;
  }
  cell.accuracy_pct =
      100.0 * static_cast<double>(correct) / static_cast<double>(cell.n_items);
  return cell;
}

TransitionRow transitions(std::span<const BehavioralRecord> pre_records,
                          std::span<const BehavioralRecord> post_records,
                          std::optional<Level> level_filter) {
  std::map<int, const BehavioralRecord*> pre, post;
  for (const auto& r : pre_records) pre[r.item_id] = &r;
  for (const auto& r : post_records) post[r.item_id] = &r;

  std::vector<int> unmatched;
  for (const auto& [id, _] : pre)
    if (!post.count(id)) unmatched.push_back(id);
  for (const auto& [id, _] : post)
    if (!pre.count(id)) unmatched.push_back(id);
  if (!unmatched.empty()) {
    std::string msg = "transitions: items present in one session only:";
    for (int id : unmatched) msg += " " + std::to_string(id);
    throw DataError(msg);
  }

  TransitionRow row;
  std::size_t cc = 0, ci = 0, ic = 0, ii = 0;
  for (const auto& [id, pr] : pre) {
    // The level is the prospective pre-sleep rating.
    if (level_filter && pr->level != *level_filter) continue;
    const bool a = pr->correct;
    const bool b = post.at(id)->correct;
    ++row.n_items;
    if (a && b) ++cc;
    else if (a && !b) ++ci;
    else if (!a && b) ++ic;
    else ++ii;
  }
  if (row.n_items == 0) {
    row.absent = true;
    return row;
  }
  const double n = static_cast<double>(row.n_items);
  row.cc = static_cast<double>(cc) / n;
  row.ci = static_cast<double>(ci) / n;
  row.ic = static_cast<double>(ic) / n;
  row.ii = static_cast<double>(ii) / n;
  return row;
}

namespace {

std::string fold(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out;
  out.reserve(e - b);
  for (std::size_t i = b; i < e; ++i)
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
  return out;
}

}  // namespace

bool match_answer(const std::string& response_text, const std::string& target_word) {
  const std::string a = fold(response_text);
  const std::string b = fold(target_word);
  if (a == b) return true;
  const std::size_t la = a.size(), lb = b.size();
  if (la == lb) {
    // One substitution allowed.
    int mismatches = 0;
    for (std::size_t i = 0; i < la; ++i)
      if (a[i] != b[i] && ++mismatches > 1) return false;
    return true;
  }
  const std::string& shorter = la < lb ? a : b;
  const std::string& longer = la < lb ? b : a;
  if (longer.size() - shorter.size() != 1) return false;
  // One insertion/deletion allowed.
  std::size_t i = 0, j = 0;
  bool skipped = false;
  while (i < shorter.size()) {
    if (shorter[i] == longer[j]) {
      ++i;
      ++j;
    } else if (!skipped) {
      skipped = true;
      ++j;
    } else {
      return false;
    }
  }
  return true;
}

CorrResult difficulty_validity(
    const std::vector<std::vector<BehavioralRecord>>& participant_sessions) {
  std::vector<double> levels, accs;
  std::set<int> represented;
  for (const auto& records : participant_sessions) {
    for (Level lev : {Level::L1, Level::L2, Level::L3}) {
      const auto cell = accuracy(records, lev);
      if (cell.absent) continue;
      represented.insert(static_cast<int>(lev));
      levels.push_back(static_cast<double>(static_cast<int>(lev)));
      accs.push_back(cell.accuracy_pct);
    }
  }
  if (represented.size() < 3)
    throw DataError("difficulty_validity: fewer than 3 levels represented");
  return spearman(levels, accs);
}

}  // namespace tmr
