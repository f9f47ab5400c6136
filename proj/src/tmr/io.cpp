#include "tmr/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tmr/error.hpp"
#include "tmr/util.hpp"

static_assert(std::endian::native == std::endian::little,
              "file payloads are little-endian; big-endian hosts unsupported");

namespace tmr {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  return out;
}

void expect_header(std::ifstream& in, const std::string& want,
                   const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != want)
    throw DataError("bad header in " + path + ": expected \"" + want + "\"");
}

}  // namespace

void write_hypnogram_csv(const std::string& path, const Hypnogram& h) {
  auto out = open_out(path);
  out << "epoch_index,stage\n";
  for (std::size_t i = 0; i < h.stages.size(); ++i)
    out << i << ',' << stage_code(h.stages[i]) << '\n';
}

Hypnogram read_hypnogram_csv(const std::string& path) {
  auto in = open_in(path);
  expect_header(in, "epoch_index,stage", path);
  std::vector<SleepStage> stages;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 2)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 2 fields");
    auto stage = stage_from_code(trim(fields[1]));
    if (!stage)
      throw DataError(path + ":" + std::to_string(lineno) + ": unknown stage \"" +
                      fields[1] + "\"");
    stages.push_back(*stage);
  }
  if (stages.empty()) throw DataError(path + ": no epochs");
  return Hypnogram::from_stages(std::move(stages));
}

void write_behavior_csv(const std::string& path,
                        const std::vector<BehavioralRecord>& records) {
  auto out = open_out(path);
  out << "item_id,session,level,correct,response_text\n";
  for (const auto& r : records) {
    out << r.item_id << ',' << session_code(r.session) << ',' << level_code(r.level)
        << ',' << (r.correct ? 1 : 0) << ',' << r.response_text << '\n';
  }
}

std::vector<BehavioralRecord> read_behavior_csv(const std::string& path) {
  auto in = open_in(path);
  expect_header(in, "item_id,session,level,correct,response_text", path);
  std::vector<BehavioralRecord> records;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() < 5)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 5 fields");
    BehavioralRecord r;
    r.item_id = std::stoi(fields[0]);
    auto ses = session_from_code(trim(fields[1]));
    auto lev = level_from_code(trim(fields[2]));
    if (!ses || !lev)
      throw DataError(path + ":" + std::to_string(lineno) + ": bad session/level");
    r.session = *ses;
    r.level = *lev;
    r.correct = trim(fields[3]) == "1" || to_lower(trim(fields[3])) == "true";
    // Response text may itself contain commas; rejoin the tail.
    r.response_text = fields[4];
    for (std::size_t i = 5; i < fields.size(); ++i) r.response_text += "," + fields[i];
    records.push_back(std::move(r));
  }
  return records;
}

void write_cue_log_csv(const std::string& path, const CueLog& log) {
  auto out = open_out(path);
  out << "onset_ms,item_id,pres_index,block_id,second_word_offset_ms\n";
  for (const auto& c : log) {
    out << c.onset_ms << ',' << c.item_id << ',' << c.pres_index << ','
        << c.block_id << ',' << c.second_word_offset_ms << '\n';
  }
}

CueLog read_cue_log_csv(const std::string& path) {
  auto in = open_in(path);
  expect_header(in, "onset_ms,item_id,pres_index,block_id,second_word_offset_ms",
                path);
  CueLog log;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 5)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 5 fields");
    CueEvent c;
    c.onset_ms = std::stoll(fields[0]);
    c.item_id = std::stoi(fields[1]);
    c.pres_index = std::stoi(fields[2]);
    c.block_id = std::stoi(fields[3]);
    c.second_word_offset_ms = std::stoi(fields[4]);
    log.push_back(c);
  }
  return log;
}

void write_f32_payload(const std::string& path, const std::vector<float>& data) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw DataError("cannot write: " + path);
  if (!data.empty() &&
      std::fwrite(data.data(), sizeof(float), data.size(), f) != data.size()) {
    std::fclose(f);
    throw DataError("short write: " + path);
  }
  std::fclose(f);
}

std::vector<float> read_f32_payload(const std::string& path, std::size_t expect) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw DataError("cannot open: " + path);
  std::vector<float> data(expect);
  const std::size_t got = expect == 0 ? 0 : std::fread(data.data(), sizeof(float), expect, f);
  // Any trailing bytes mean the header and payload disagree.
  char probe;
  const bool extra = std::fread(&probe, 1, 1, f) == 1;
  std::fclose(f);
  if (got != expect || extra)
    throw DataError("payload size mismatch: " + path);
  return data;
}

void write_recording(const std::string& base, const Recording& rec) {
  auto rep = validate_recording(rec);
  if (!rep.valid()) throw DataError("invalid recording (" + rep.violations[0] + ")");
  nlohmann::json j;
  j["sample_rate_hz"] = rec.sample_rate_hz;
  j["channel_labels"] = rec.channel_labels;
  j["t0_s"] = rec.t0_s;
  j["n_samples"] = rec.n_samples();
  {
    auto out = open_out(base + ".json");
    out << j.dump(2) << '\n';
  }
  std::vector<float> flat;
  flat.reserve(rec.n_samples() * kNumChannels);
  for (const auto& ch : rec.samples) flat.insert(flat.end(), ch.begin(), ch.end());
  write_f32_payload(base + ".f32", flat);
}

Recording read_recording(const std::string& base) {
  nlohmann::json j;
  {
    auto in = open_in(base + ".json");
    in >> j;
  }
  Recording rec;
  try {
    rec.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    rec.channel_labels = j.at("channel_labels").get<std::vector<std::string>>();
    rec.t0_s = j.at("t0_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(base + ".json: " + e.what());
  }
  const auto n = j.at("n_samples").get<std::size_t>();
  if (rec.channel_labels.size() != kNumChannels)
    throw DataError(base + ".json: expected 6 channels");
  auto flat = read_f32_payload(base + ".f32", n * kNumChannels);

  // Accept any permutation of the canonical labels and reorder.
  const auto& canon = canonical_channels();
  std::vector<std::vector<float>> chans(kNumChannels);
  std::vector<std::string> labels(kNumChannels);
  std::vector<bool> used(kNumChannels, false);
  for (int c = 0; c < kNumChannels; ++c) {
    auto it = std::find(rec.channel_labels.begin(), rec.channel_labels.end(), canon[c]);
    if (it == rec.channel_labels.end())
      throw DataError(base + ".json: missing channel " + canon[c]);
    const auto src = static_cast<std::size_t>(it - rec.channel_labels.begin());
    if (used[src]) throw DataError(base + ".json: duplicate channel " + canon[c]);
    used[src] = true;
    chans[c].assign(flat.begin() + static_cast<std::ptrdiff_t>(src * n),
                    flat.begin() + static_cast<std::ptrdiff_t>((src + 1) * n));
    labels[c] = canon[c];
  }
  rec.channel_labels = std::move(labels);
  rec.samples = std::move(chans);
  return rec;
}

}  // namespace tmr
