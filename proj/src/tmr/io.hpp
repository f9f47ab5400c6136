#pragma once

#include <string>
#include <vector>

#include "tmr/types.hpp"

namespace tmr {

// File formats (all little-endian, all bit-exact on round trip):
//  - hypnogram:  CSV "epoch_index,stage", stage in {W,R,N1,N2,N3}
//  - behavior:   CSV "item_id,session,level,correct,response_text"
//  - cue log:    CSV "onset_ms,item_id,pres_index,block_id,second_word_offset_ms"
//  - recording:  <base>.json sidecar {sample_rate_hz, channel_labels, t0_s,
//                n_samples} + <base>.f32 raw float32 payload, channel-major

void write_hypnogram_csv(const std::string& path, const Hypnogram& h);
Hypnogram read_hypnogram_csv(const std::string& path);

void write_behavior_csv(const std::string& path,
                        const std::vector<BehavioralRecord>& records);
std::vector<BehavioralRecord> read_behavior_csv(const std::string& path);

void write_cue_log_csv(const std::string& path, const CueLog& log);
CueLog read_cue_log_csv(const std::string& path);

// `base` is the path without extension; writes/reads base+".json" and
// base+".f32". Channels are reordered to canonical order on read.
void write_recording(const std::string& base, const Recording& rec);
Recording read_recording(const std::string& base);

// Raw float32 payload helpers shared by the recording and epoch files.
void write_f32_payload(const std::string& path, const std::vector<float>& data);
std::vector<float> read_f32_payload(const std::string& path, std::size_t expect);

}  // namespace tmr
