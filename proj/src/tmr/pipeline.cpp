#include "tmr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>

#include "tmr/error.hpp"
#include "tmr/io.hpp"
#include "tmr/rng.hpp"
#include "tmr/stats.hpp"
#include "tmr/util.hpp"
#include "tmr/version.hpp"

namespace fs = std::filesystem;

namespace tmr {

const char* condition_code(ConditionSel c) {
  switch (c) {
    case ConditionSel::All: return "all";
    case ConditionSel::L3: return "l3";
    case ConditionSel::Both: return "both";
  }
  return "?";
}

std::optional<ConditionSel> condition_from_code(const std::string& s) {
  if (s == "all") return ConditionSel::All;
  if (s == "l3") return ConditionSel::L3;
  if (s == "both") return ConditionSel::Both;
  return std::nullopt;
}

RunConfig default_run_config() {
  RunConfig c;
  c.cohort = default_cohort_spec();
  return c;
}

void apply_full_scale(RunConfig& config) {
  config.cohort.n_per_group = 12;
  config.cohort.session_epochs = 960;  // 8 h
  config.cohort.fs_hz = 500.0;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{
      {"cohort", c.cohort},
      {"scheduler",
       {{"cue_window_ms", c.scheduler.cue_window_ms},
        {"isi_ms", c.scheduler.isi_ms},
        {"stability_epochs", c.scheduler.stability_epochs},
        {"epoch_ms", c.scheduler.epoch_ms}}},
      {"analysis",
       {{"filter_low_hz", c.analysis.filter.low_hz},
        {"filter_high_hz", c.analysis.filter.high_hz},
        {"filter_order", c.analysis.filter.order},
        {"resample_hz", c.analysis.resample_hz},
        {"kurtosis_z", c.analysis.kurtosis_z},
        {"reject_uv", c.analysis.reject_uv},
        {"max_trials_per_condition", c.analysis.max_trials_per_condition},
        {"erpac_amp_freq_lo", c.analysis.erpac.amp_freq_lo},
        {"erpac_amp_freq_hi", c.analysis.erpac.amp_freq_hi},
        {"erpac_amp_freq_step", c.analysis.erpac.amp_freq_step},
        {"erpac_amp_bandwidth", c.analysis.erpac.amp_bandwidth},
        {"erpac_smoothing_samples", c.analysis.erpac.smoothing_samples},
        {"erpac_time_stride", c.analysis.erpac.time_stride},
        {"scalar_window_lo_s", c.analysis.scalar_window_lo_s},
        {"scalar_window_hi_s", c.analysis.scalar_window_hi_s}}},
      {"decode",
       {{"folds", c.decode.cv.folds},
        {"repetitions", c.decode.cv.repetitions},
        {"surrogates", c.decode.surrogates},
        {"cluster_permutations", c.decode.cluster_permutations},
        {"alpha", c.decode.alpha},
        {"c_param", c.decode.c_param},
        {"gamma", c.decode.gamma},
        {"max_trials_per_class", c.decode.max_trials_per_class}}},
      {"condition", condition_code(c.condition)},
      {"out_dir", c.out_dir},
      {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  c.cohort = j.at("cohort").get<CohortSpec>();
  if (j.contains("scheduler")) {
    const auto& s = j.at("scheduler");
    c.scheduler.cue_window_ms = s.value("cue_window_ms", c.scheduler.cue_window_ms);
    c.scheduler.isi_ms = s.value("isi_ms", c.scheduler.isi_ms);
    c.scheduler.stability_epochs =
        s.value("stability_epochs", c.scheduler.stability_epochs);
    c.scheduler.epoch_ms = s.value("epoch_ms", c.scheduler.epoch_ms);
  }
  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    c.analysis.filter.low_hz = a.value("filter_low_hz", c.analysis.filter.low_hz);
    c.analysis.filter.high_hz = a.value("filter_high_hz", c.analysis.filter.high_hz);
    c.analysis.filter.order = a.value("filter_order", c.analysis.filter.order);
    c.analysis.resample_hz = a.value("resample_hz", c.analysis.resample_hz);
    c.analysis.kurtosis_z = a.value("kurtosis_z", c.analysis.kurtosis_z);
    c.analysis.reject_uv = a.value("reject_uv", c.analysis.reject_uv);
    c.analysis.max_trials_per_condition =
        a.value("max_trials_per_condition", c.analysis.max_trials_per_condition);
    c.analysis.erpac.amp_freq_lo =
        a.value("erpac_amp_freq_lo", c.analysis.erpac.amp_freq_lo);
    c.analysis.erpac.amp_freq_hi =
        a.value("erpac_amp_freq_hi", c.analysis.erpac.amp_freq_hi);
    c.analysis.erpac.amp_freq_step =
        a.value("erpac_amp_freq_step", c.analysis.erpac.amp_freq_step);
    c.analysis.erpac.amp_bandwidth =
        a.value("erpac_amp_bandwidth", c.analysis.erpac.amp_bandwidth);
    c.analysis.erpac.smoothing_samples =
        a.value("erpac_smoothing_samples", c.analysis.erpac.smoothing_samples);
    c.analysis.erpac.time_stride =
        a.value("erpac_time_stride", c.analysis.erpac.time_stride);
    c.analysis.scalar_window_lo_s =
        a.value("scalar_window_lo_s", c.analysis.scalar_window_lo_s);
    c.analysis.scalar_window_hi_s =
        a.value("scalar_window_hi_s", c.analysis.scalar_window_hi_s);
  }
  if (j.contains("decode")) {
    const auto& d = j.at("decode");
    c.decode.cv.folds = d.value("folds", c.decode.cv.folds);
    c.decode.cv.repetitions = d.value("repetitions", c.decode.cv.repetitions);
    c.decode.surrogates = d.value("surrogates", c.decode.surrogates);
    c.decode.cluster_permutations =
        d.value("cluster_permutations", c.decode.cluster_permutations);
    c.decode.alpha = d.value("alpha", c.decode.alpha);
    c.decode.c_param = d.value("c_param", c.decode.c_param);
    c.decode.gamma = d.value("gamma", c.decode.gamma);
    c.decode.max_trials_per_class =
        d.value("max_trials_per_class", c.decode.max_trials_per_class);
  }
  if (j.contains("condition")) {
    auto cond = condition_from_code(j.at("condition").get<std::string>());
    if (!cond) throw ConfigError("config: bad condition (want all|l3|both)");
    c.condition = *cond;
  }
  c.out_dir = j.value("out_dir", std::string());
  c.threads = j.value("threads", 0);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  RunConfig c = default_run_config();
  try {
    from_json(j, c);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config field error in " + path + ": " + e.what());
  }
  if (!j.contains("cohort") || !j.at("cohort").contains("master_seed"))
    throw ConfigError("config: missing field cohort.master_seed (all seeds explicit)");
  return c;
}

void save_run_config(const std::string& path, const RunConfig& config) {
  nlohmann::json j = config;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  out << j.dump(2) << '\n';
}

// ---- manifest --------------------------------------------------------------

namespace {

std::mutex g_manifest_mutex;

std::uint64_t config_hash(const RunConfig& config) {
  nlohmann::json j = config;
  const std::string dump = j.dump();
  return fnv1a64(dump.data(), dump.size());
}

void manifest_update_stage(const RunConfig& config, const std::string& stage,
                           const std::vector<std::string>& outputs,
                           double wall_ms) {
  std::scoped_lock lk(g_manifest_mutex);
  const fs::path path = fs::path(config.out_dir) / "manifest.json";
  nlohmann::json j;
  if (fs::exists(path)) {
    std::ifstream in(path);
    in >> j;
  }
  j["artifact_version"] = kVersion;
  j["config_hash"] = hex64(config_hash(config));
  nlohmann::json digests = nlohmann::json::object();
  for (const auto& rel : outputs) {
    const fs::path p = fs::path(config.out_dir) / rel;
    digests[rel] = hex64(fnv1a64_file(p.string()));
  }
  j["stages"][stage] = {{"outputs", std::move(digests)}, {"wall_ms", wall_ms}};
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
}

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string participant_dir_name(const std::string& group, int idx) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%02d", idx);
  return group + buf;
}

Policy policy_for(const GroupSpec& group) {
  Policy p;
  p.kind = group.policy;
  return p;
}

std::map<int, Level> level_map(const std::vector<BehavioralRecord>& pre) {
  std::map<int, Level> m;
  for (const auto& r : pre) m[r.item_id] = r.level;
  return m;
}

std::vector<std::size_t> subsample_indices(std::size_t total, std::size_t cap,
                                           std::uint64_t seed) {
  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  if (total <= cap) return idx;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

bool verify_manifest(const std::string& out_dir, std::string* first_mismatch) {
  const fs::path path = fs::path(out_dir) / "manifest.json";
  if (!fs::exists(path)) {
    if (first_mismatch) *first_mismatch = "manifest missing";
    return false;
  }
  nlohmann::json j;
  {
    std::ifstream in(path);
    in >> j;
  }
  for (const auto& [stage, info] : j.at("stages").items()) {
    for (const auto& [rel, digest] : info.at("outputs").items()) {
      const fs::path p = fs::path(out_dir) / rel;
      if (!fs::exists(p) ||
          hex64(fnv1a64_file(p.string())) != digest.get<std::string>()) {
        if (first_mismatch) *first_mismatch = stage + ": " + rel;
        return false;
      }
    }
  }
  return true;
}

std::vector<std::string> participant_ids(const RunConfig& config) {
  std::vector<std::string> ids;
  for (const auto& g : config.cohort.groups)
    for (int k = 0; k < config.cohort.n_per_group; ++k)
      ids.push_back(participant_dir_name(g.name, k));
  return ids;
}

// ---- simulate --------------------------------------------------------------

ParticipantData simulate_participant(const RunConfig& config, std::size_t group_idx,
                                     int participant_idx) {
  const auto& spec = config.cohort;
  const auto& group = spec.groups.at(group_idx);
  ParticipantData p;
  p.group = group.name;
  p.id = participant_dir_name(group.name, participant_idx);
  p.seed = derive_seed(spec.master_seed, "participant", group_idx,
                       static_cast<std::uint64_t>(participant_idx));

  const auto model =
      default_hypnogram_model(spec.session_epochs, derive_seed(p.seed, "hypnogram"));
  p.hypnogram = gen_hypnogram(model);
  p.behavior = gen_behavior(spec, group, p.seed);
  p.plan = compile_plan(policy_for(group), p.behavior.pre, derive_seed(p.seed, "plan"));
  auto sched = run_scheduler(p.hypnogram, p.plan, config.scheduler,
                             level_map(p.behavior.pre));
  p.cues = std::move(sched.log);
  p.schedule_summary = sched.summary;
  p.recording = synth_eeg(p.hypnogram, default_oscillator_params(), group.coupling,
                          group.evoked, p.cues, spec.fs_hz,
                          derive_seed(p.seed, "eeg"));
  return p;
}

namespace {

void write_plan_json(const std::string& path, const CuePlan& plan) {
  nlohmann::json j;
  j["policy"] = policy_code(plan.policy);
  j["seed"] = plan.seed;
  j["cycling"] = plan.cycling;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : plan.blocks)
    blocks.push_back({{"item_id", b.item_id}, {"reps", b.repetitions}});
  j["blocks"] = std::move(blocks);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  out << j.dump() << '\n';
}

}  // namespace

void cmd_simulate(const RunConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("simulate: no output directory");
  const fs::path root(config.out_dir);
  const fs::path cohort_dir = root / "cohort";
  if (fs::exists(cohort_dir) && !fs::is_empty(cohort_dir) && !config.force)
    throw ConfigError("simulate: output directory not empty (use --force)");
  fs::create_directories(cohort_dir);

  StageTimer timer;
  const auto& spec = config.cohort;
  std::vector<std::pair<std::size_t, int>> work;
  for (std::size_t g = 0; g < spec.groups.size(); ++g)
    for (int k = 0; k < spec.n_per_group; ++k) work.emplace_back(g, k);

  std::vector<std::string> outputs;
  std::mutex out_mutex;
  parallel_for(work.size(), config.threads, [&](std::size_t w) {
    const auto [g, k] = work[w];
    auto p = simulate_participant(config, g, k);
    const fs::path dir = cohort_dir / p.id;
    fs::create_directories(dir);
    write_hypnogram_csv((dir / "hypnogram.csv").string(), p.hypnogram);
    write_behavior_csv((dir / "behavior_pre.csv").string(), p.behavior.pre);
    write_behavior_csv((dir / "behavior_post.csv").string(), p.behavior.post);
    write_cue_log_csv((dir / "cues.csv").string(), p.cues);
    write_plan_json((dir / "plan.json").string(), p.plan);
    write_recording((dir / "recording").string(), p.recording);
    nlohmann::json truth;
    truth["seed"] = p.seed;
    truth["group"] = p.group;
    truth["total_cues"] = p.schedule_summary.total_cues;
    truth["delivery_min"] = p.schedule_summary.delivery_min;
    truth["cues_per_level"] = p.schedule_summary.cues_per_level;
    {
      std::ofstream out(dir / "truth.json", std::ios::trunc);
      out << truth.dump(2) << '\n';
    }
    std::scoped_lock lk(out_mutex);
    for (const char* f : {"hypnogram.csv", "behavior_pre.csv", "behavior_post.csv",
                          "cues.csv", "plan.json", "recording.json", "recording.f32",
                          "truth.json"})
      outputs.push_back((fs::path("cohort") / p.id / f).string());
  });

  nlohmann::json truth;
  truth["master_seed"] = spec.master_seed;
  for (const auto& g : spec.groups) truth["groups"][g.name] = g;
  {
    std::ofstream out(cohort_dir / "ground_truth.json", std::ios::trunc);
    out << truth.dump(2) << '\n';
  }
  outputs.push_back("cohort/ground_truth.json");
  save_run_config((root / "config.json").string(), config);
  outputs.push_back("config.json");
  std::sort(outputs.begin(), outputs.end());
  manifest_update_stage(config, "simulate", outputs, timer.elapsed_ms());
}

// ---- schedule --------------------------------------------------------------

void cmd_schedule(const RunConfig& config, const std::string& participant) {
  const fs::path root(config.out_dir);
  const fs::path cohort_dir = root / "cohort";
  if (!fs::exists(cohort_dir))
    throw DataError("schedule: no cohort directory (run simulate first)");

  StageTimer timer;
  std::vector<std::string> outputs;
  const auto& spec = config.cohort;
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto& group = spec.groups[g];
    for (int k = 0; k < spec.n_per_group; ++k) {
      const std::string pid = participant_dir_name(group.name, k);
      if (!participant.empty() && pid != participant) continue;
      const fs::path dir = cohort_dir / pid;
      if (!fs::exists(dir / "hypnogram.csv") || !fs::exists(dir / "behavior_pre.csv"))
        throw DataError("schedule: missing inputs for " + pid);
      const auto hyp = read_hypnogram_csv((dir / "hypnogram.csv").string());
      const auto pre = read_behavior_csv((dir / "behavior_pre.csv").string());
      const auto seed = derive_seed(spec.master_seed, "participant", g,
                                    static_cast<std::uint64_t>(k));
      const auto plan = compile_plan(policy_for(group), pre, derive_seed(seed, "plan"));
      const auto sched = run_scheduler(hyp, plan, config.scheduler, level_map(pre));
      write_cue_log_csv((dir / "cues.csv").string(), sched.log);
      write_plan_json((dir / "plan.json").string(), plan);
      outputs.push_back((fs::path("cohort") / pid / "cues.csv").string());
      outputs.push_back((fs::path("cohort") / pid / "plan.json").string());
    }
  }
  if (outputs.empty())
    throw DataError("schedule: participant not found: " + participant);
  manifest_update_stage(config, "schedule", outputs, timer.elapsed_ms());
}

// ---- analyze ---------------------------------------------------------------

PreprocessedTrials preprocess_participant(const RunConfig& config,
                                          const Recording& recording,
                                          const CueLog& cues,
                                          const std::map<int, Level>& levels,
                                          ConditionSel condition,
                                          const std::string& group,
                                          const std::string& participant,
                                          std::uint64_t seed) {
  PreprocessedTrials out;
  out.n_cues = cues.size();
  Recording rec = resample_recording(recording, config.analysis.resample_hz);
  rec = bandpass_recording(rec, config.analysis.filter);
  auto [repaired, chan_report] = detect_and_repair_channels(rec, config.analysis.kurtosis_z);
  out.channels = std::move(chan_report);

  EpochSet epochs = extract_epochs(repaired, cues, levels, group, participant);
  auto [kept, reject_report] = reject_amplitude(epochs, config.analysis.reject_uv);
  out.rejection = std::move(reject_report);
  EpochSet corrected = baseline_correct(kept);

  // Condition filter, then the deterministic trial cap.
  std::vector<std::size_t> cond_idx;
  for (std::size_t t = 0; t < corrected.n_trials(); ++t)
    if (condition == ConditionSel::All || corrected.trials[t].level == Level::L3)
      cond_idx.push_back(t);
  const auto capped = subsample_indices(cond_idx.size(),
                                        config.analysis.max_trials_per_condition,
                                        derive_seed(seed, "trial-cap"));
  std::vector<std::size_t> keep;
  keep.reserve(capped.size());
  for (std::size_t i : capped) keep.push_back(cond_idx[i]);
  out.epochs = corrected.select(keep);
  return out;
}

FeatureScalars analyze_scalars(const RunConfig& config, const EpochSet& epochs) {
  FeatureScalars s;
  s.n_trials = epochs.n_trials();
  if (s.n_trials == 0) return s;
  const auto t = tfr(epochs);
  const auto sw = band_power(t, kSwBandLo, kSwBandHi);
  const auto sp = band_power(t, kSpindleBandLo, kSpindleBandHi);
  const double lo = config.analysis.scalar_window_lo_s;
  const double hi = config.analysis.scalar_window_hi_s;
  std::vector<double> sw_vals, sp_vals;
  for (std::size_t tr = 0; tr < sw.n_trials; ++tr)
    for (int c = 0; c < kNumChannels; ++c)
      for (std::size_t f = 0; f < sw.n_frames(); ++f) {
        if (sw.frame_times[f] < lo || sw.frame_times[f] > hi) continue;
        sw_vals.push_back(sw.series(tr, c)[f]);
        sp_vals.push_back(sp.series(tr, c)[f]);
      }
  s.sw_power_db = mean(sw_vals);
  s.spindle_power_db = mean(sp_vals);
  if (s.n_trials >= 3) {
    const auto map = erpac_map(epochs, config.analysis.erpac);
    s.coupling = coupling_strength(map, kSpindleBandLo, kSpindleBandHi, lo, hi);
  }
  return s;
}

namespace {

struct ErpAccumulator {
  std::size_t n = 0;
  std::vector<double> sum, sumsq;

  void add(const EpochSet& epochs, std::size_t trial) {
    if (sum.empty()) {
      sum.assign(epochs.n_samples, 0.0);
      sumsq.assign(epochs.n_samples, 0.0);
    }
    for (std::size_t s = 0; s < epochs.n_samples; ++s) {
      double v = 0.0;
      for (int c = 0; c < kNumChannels; ++c) v += epochs.trial_channel(trial, c)[s];
      v /= kNumChannels;
      sum[s] += v;
      sumsq[s] += v * v;
    }
    ++n;
  }

  void write_csv(const std::string& path, const EpochSet& ref) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write: " + path);
    out << "time_s,mean_uv,se_uv,n_trials\n";
    char buf[128];
    for (std::size_t s = 0; s < sum.size(); ++s) {
      const double nd = static_cast<double>(n);
      const double m = n > 0 ? sum[s] / nd : 0.0;
      const double var = n > 1 ? std::max(0.0, (sumsq[s] - nd * m * m) / (nd - 1.0)) : 0.0;
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%zu", ref.time_at(s), m,
                    n > 0 ? std::sqrt(var / nd) : 0.0, n);
      out << buf << '\n';
    }
  }
};

struct MapAccumulator {
  std::size_t n = 0;
  std::vector<double> sum;

  void add(const std::vector<double>& values) {
    if (sum.empty()) sum.assign(values.size(), 0.0);
    if (sum.size() != values.size()) throw NumericError("map accumulator size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) sum[i] += values[i];
    ++n;
  }
  std::vector<double> mean_map() const {
    std::vector<double> out(sum.size(), 0.0);
    for (std::size_t i = 0; i < sum.size(); ++i)
      out[i] = n > 0 ? sum[i] / static_cast<double>(n) : 0.0;
    return out;
  }
};

std::vector<ConditionSel> selected_conditions(const RunConfig& config) {
  if (config.condition == ConditionSel::Both)
    return {ConditionSel::All, ConditionSel::L3};
  return {config.condition};
}

double accuracy_diff(const BehaviorSets& behavior, ConditionSel condition) {
  const std::optional<Level> filter =
      condition == ConditionSel::L3 ? std::optional<Level>(Level::L3) : std::nullopt;
  const auto pre = accuracy(behavior.pre, filter);
  const auto post = accuracy(behavior.post, filter);
  return post.accuracy_pct - pre.accuracy_pct;
}

}  // namespace

void cmd_analyze(const RunConfig& config) {
  const fs::path root(config.out_dir);
  const fs::path cohort_dir = root / "cohort";
  if (!fs::exists(cohort_dir))
    throw DataError("analyze: no cohort directory (run simulate first)");
  const fs::path analysis_dir = root / "analysis";
  fs::create_directories(analysis_dir);

  StageTimer timer;
  const auto& spec = config.cohort;
  std::vector<std::string> outputs;

  // Behavioral tables and sleep architecture.
  {
    std::ofstream acc_out(analysis_dir / "behavior_accuracy.csv", std::ios::trunc);
    acc_out << "group,participant,session,level,accuracy_pct,n_items,absent\n";
    std::ofstream tra_out(analysis_dir / "behavior_transitions.csv", std::ios::trunc);
    tra_out << "group,participant,level,cc,ci,ic,ii,n_items\n";
    std::ofstream arch_out(analysis_dir / "architecture.csv", std::ios::trunc);
    arch_out << "group,participant,tst_min,sol_min,waso_min,se_pct,w_min,rem_min,"
                "n1_min,n2_min,n3_min\n";
    std::ofstream dv_out(analysis_dir / "difficulty_validity.csv", std::ios::trunc);
    dv_out << "group,session,rho,p\n";

    char buf[256];
    for (const auto& group : spec.groups) {
      std::vector<std::vector<BehavioralRecord>> pre_sessions, post_sessions;
      for (int k = 0; k < spec.n_per_group; ++k) {
        const std::string pid = participant_dir_name(group.name, k);
        const fs::path dir = cohort_dir / pid;
        const auto pre = read_behavior_csv((dir / "behavior_pre.csv").string());
        const auto post = read_behavior_csv((dir / "behavior_post.csv").string());
        pre_sessions.push_back(pre);
        post_sessions.push_back(post);

        const std::array<std::pair<const char*, const std::vector<BehavioralRecord>*>, 2>
            sessions = {{{"pre", &pre}, {"post", &post}}};
        for (const auto& [session_name, records] : sessions) {
          const std::vector<std::optional<Level>> session_filters = {
              std::nullopt, Level::L1, Level::L2, Level::L3};
          const std::vector<std::string> session_names = {"All", "L1", "L2", "L3"};
          for (std::size_t i = 0; i < session_filters.size(); ++i) {
            const auto cell = accuracy(*records, session_filters[i]);
            std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%.9g,%zu,%d",
                          group.name.c_str(), pid.c_str(), session_name,
                          session_names[i].c_str(), cell.accuracy_pct, cell.n_items,
                          cell.absent ? 1 : 0);
            acc_out << buf << '\n';
          }
        }
        const std::vector<std::optional<Level>> filters = {
            std::nullopt, Level::L1, Level::L2, Level::L3};
        const std::vector<std::string> names = {"All", "L1", "L2", "L3"};
        for (std::size_t i = 0; i < filters.size(); ++i) {
          const auto row = transitions(pre, post, filters[i]);
          if (row.absent) continue;
          std::snprintf(buf, sizeof buf, "%s,%s,%s,%.9g,%.9g,%.9g,%.9g,%zu",
                        group.name.c_str(), pid.c_str(), names[i].c_str(), row.cc,
                        row.ci, row.ic, row.ii, row.n_items);
          tra_out << buf << '\n';
        }
        const auto hyp = read_hypnogram_csv((dir / "hypnogram.csv").string());
        const auto arch = score_architecture(hyp);
        std::snprintf(buf, sizeof buf, "%s,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                      group.name.c_str(), pid.c_str(), arch.tst_min, arch.sol_min,
                      arch.waso_min, arch.se_pct, arch.stages[0].duration_min,
                      arch.stages[1].duration_min, arch.stages[2].duration_min,
                      arch.stages[3].duration_min, arch.stages[4].duration_min);
        arch_out << buf << '\n';
      }
      const std::array<
          std::pair<const char*, const std::vector<std::vector<BehavioralRecord>>*>, 2>
          dv_sets = {{{"pre", &pre_sessions}, {"post", &post_sessions}}};
      for (const auto& [session_name, sessions] : dv_sets) {
        const auto dv = difficulty_validity(*sessions);
        std::snprintf(buf, sizeof buf, "%s,%s,%.9g,%.9g", group.name.c_str(),
                      session_name, dv.coefficient, dv.p);
        dv_out << buf << '\n';
      }
    }
    outputs.push_back("analysis/behavior_accuracy.csv");
    outputs.push_back("analysis/behavior_transitions.csv");
    outputs.push_back("analysis/architecture.csv");
    outputs.push_back("analysis/difficulty_validity.csv");
  }

  // EEG analyses per condition.
  for (const ConditionSel condition : selected_conditions(config)) {
    const fs::path cond_dir = analysis_dir / condition_code(condition);
    fs::create_directories(cond_dir);

    struct ParticipantScalars {
      std::string group, pid;
      FeatureScalars scalars;
      double accuracy_diff_pct = 0.0;
      bool has_epochs = false;
    };
    std::vector<ParticipantScalars> rows;
    std::map<std::string, ErpAccumulator> group_erp;
    std::map<std::string, std::pair<ErpAccumulator, ErpAccumulator>> first_last_erp;
    std::map<std::string, MapAccumulator> group_tfr, group_erpac;
    std::vector<double> tfr_freqs, tfr_times;
    std::vector<double> erpac_freqs, erpac_times;
    std::mutex agg_mutex;

    std::vector<std::pair<std::size_t, int>> work;
    for (std::size_t g = 0; g < spec.groups.size(); ++g)
      for (int k = 0; k < spec.n_per_group; ++k) work.emplace_back(g, k);
    rows.resize(work.size());

    parallel_for(work.size(), config.threads, [&](std::size_t w) {
      const auto [g, k] = work[w];
      const auto& group = spec.groups[g];
      const std::string pid = participant_dir_name(group.name, k);
      const fs::path dir = cohort_dir / pid;
      const auto recording = read_recording((dir / "recording").string());
      const auto cues = read_cue_log_csv((dir / "cues.csv").string());
      BehaviorSets behavior;
      behavior.pre = read_behavior_csv((dir / "behavior_pre.csv").string());
      behavior.post = read_behavior_csv((dir / "behavior_post.csv").string());
      const auto seed = derive_seed(spec.master_seed, "participant", g,
                                    static_cast<std::uint64_t>(k));

      ParticipantScalars row;
      row.group = group.name;
      row.pid = pid;
      row.accuracy_diff_pct = accuracy_diff(behavior, condition);

      auto prep = preprocess_participant(config, recording, cues,
                                         level_map(behavior.pre), condition,
                                         group.name, pid, seed);
      if (prep.epochs.n_trials() > 0) {
        row.has_epochs = true;
        write_epochs((cond_dir / ("epochs_" + pid)).string(), prep.epochs);
        row.scalars = analyze_scalars(config, prep.epochs);

        const auto t = tfr(prep.epochs);
        const auto map = erpac_map(prep.epochs, config.analysis.erpac);
        std::scoped_lock lk(agg_mutex);
        for (std::size_t tr = 0; tr < prep.epochs.n_trials(); ++tr)
          group_erp[group.name].add(prep.epochs, tr);
        if (group.policy == PolicyKind::Personalized) {
          std::set<int> four_blocks;
          for (const auto& info : prep.epochs.trials)
            if (info.pres_index >= 4) four_blocks.insert(info.block_id);
          for (std::size_t tr = 0; tr < prep.epochs.n_trials(); ++tr) {
            const auto& info = prep.epochs.trials[tr];
            if (!four_blocks.count(info.block_id)) continue;
            if (info.pres_index == 1) first_last_erp[group.name].first.add(prep.epochs, tr);
            if (info.pres_index == 4) first_last_erp[group.name].second.add(prep.epochs, tr);
          }
        }
        group_tfr[group.name].add(t.mean_db);
        if (tfr_freqs.empty()) {
          tfr_freqs = t.freqs;
          tfr_times = t.frame_times;
        }
        group_erpac[group.name].add(map.rho);
        if (erpac_freqs.empty()) {
          erpac_freqs = map.amp_freqs;
          erpac_times = map.times;
        }
      }
      rows[w] = std::move(row);
    });

    // Scalar table.
    {
      std::ofstream out(cond_dir / "scalars.csv", std::ios::trunc);
      out << "group,participant,n_trials,sw_power_db,spindle_power_db,coupling,"
             "accuracy_diff_pct\n";
      char buf[256];
      for (const auto& row : rows) {
        if (!row.has_epochs) continue;
        std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.9g,%.9g,%.9g,%.9g",
                      row.group.c_str(), row.pid.c_str(), row.scalars.n_trials,
                      row.scalars.sw_power_db, row.scalars.spindle_power_db,
                      row.scalars.coupling, row.accuracy_diff_pct);
        out << buf << '\n';
      }
      outputs.push_back(
          (fs::path("analysis") / condition_code(condition) / "scalars.csv").string());
    }

    // Group ERP / TFR / ERPAC artifacts.
    EpochSet ref;  // timebase reference for ERP CSV
    ref.n_samples = 450;
    for (const auto& [name, acc] : group_erp) {
      const auto path = cond_dir / ("erp_" + name + ".csv");
      acc.write_csv(path.string(), ref);
      outputs.push_back((fs::path("analysis") / condition_code(condition) /
                         ("erp_" + name + ".csv"))
                            .string());
    }
    for (const auto& [name, pair] : first_last_erp) {
      if (pair.first.n < 2 || pair.second.n < 2) continue;
      pair.first.write_csv((cond_dir / ("erp_first_pres_" + name + ".csv")).string(), ref);
      pair.second.write_csv((cond_dir / ("erp_last_pres_" + name + ".csv")).string(), ref);
      outputs.push_back((fs::path("analysis") / condition_code(condition) /
                         ("erp_first_pres_" + name + ".csv"))
                            .string());
      outputs.push_back((fs::path("analysis") / condition_code(condition) /
                         ("erp_last_pres_" + name + ".csv"))
                            .string());
    }
    for (const auto& [name, acc] : group_tfr) {
      Tfr t;
      t.freqs = tfr_freqs;
      t.frame_times = tfr_times;
      t.mean_db = acc.mean_map();
      write_tfr((cond_dir / ("tfr_" + name)).string(), t);
      outputs.push_back(
          (fs::path("analysis") / condition_code(condition) / ("tfr_" + name + ".json"))
              .string());
      outputs.push_back(
          (fs::path("analysis") / condition_code(condition) / ("tfr_" + name + ".f32"))
              .string());
    }
    for (const auto& [name, acc] : group_erpac) {
      ErpacMap m;
      m.amp_freqs = erpac_freqs;
      m.times = erpac_times;
      m.rho = acc.mean_map();
      write_erpac_map((cond_dir / ("erpac_" + name)).string(), m);
      outputs.push_back(
          (fs::path("analysis") / condition_code(condition) / ("erpac_" + name + ".json"))
              .string());
      outputs.push_back(
          (fs::path("analysis") / condition_code(condition) / ("erpac_" + name + ".f32"))
              .string());
    }

    // Group comparisons and behavior-EEG correlations.
    nlohmann::json stats_json;
    {
      std::map<std::string, std::vector<double>> by_group_sw, by_group_sp, by_group_cp;
      std::map<std::string, std::vector<double>> by_group_beh;
      for (const auto& row : rows) {
        if (!row.has_epochs) continue;
        by_group_sw[row.group].push_back(row.scalars.sw_power_db);
        by_group_sp[row.group].push_back(row.scalars.spindle_power_db);
        by_group_cp[row.group].push_back(row.scalars.coupling);
        by_group_beh[row.group].push_back(row.accuracy_diff_pct);
      }
      const std::vector<std::pair<std::string, std::map<std::string, std::vector<double>>*>>
          scalar_sets = {{"sw_power_db", &by_group_sw},
                         {"spindle_power_db", &by_group_sp},
                         {"coupling", &by_group_cp}};
      std::vector<double> fdr_pvec;
      std::vector<std::pair<std::string, std::string>> fdr_keys;
      for (const auto& [metric, by_group] : scalar_sets) {
        std::vector<std::string> names;
        std::vector<std::vector<double>> groups_vals;
        for (const auto& [name, vals] : *by_group) {
          if (vals.size() >= 2) {
            names.push_back(name);
            groups_vals.push_back(vals);
          }
        }
        if (groups_vals.size() >= 2) {
          const auto an = anova_oneway(groups_vals);
          stats_json["anova"][metric] = {{"f", an.rows[0].f},
                                         {"df1", an.rows[0].df},
                                         {"df2", an.df_error},
                                         {"p", an.rows[0].p}};
          // Bonferroni-corrected pairwise post-hoc comparisons.
          const int m_comp = static_cast<int>(names.size() * (names.size() - 1) / 2);
          nlohmann::json posthoc = nlohmann::json::array();
          for (std::size_t a = 0; a < names.size(); ++a)
            for (std::size_t b = a + 1; b < names.size(); ++b) {
              const auto tt = ttest_two_sample(groups_vals[a], groups_vals[b]);
              posthoc.push_back({{"a", names[a]},
                                 {"b", names[b]},
                                 {"t", tt.t},
                                 {"df", tt.df},
                                 {"p", tt.p},
                                 {"p_bonferroni", std::min(1.0, tt.p * m_comp)}});
            }
          stats_json["posthoc"][metric] = std::move(posthoc);
        }
        // Correlations with the behavioral improvement, FDR-corrected below.
        for (const auto& [name, vals] : *by_group) {
          const auto& beh = by_group_beh[name];
          if (vals.size() < 3) continue;
          const auto corr = pearson(beh, vals);
          stats_json["correlations"][metric][name] = {{"r", corr.coefficient},
                                                      {"p", corr.p}};
          fdr_pvec.push_back(corr.p);
          fdr_keys.emplace_back(metric, name);
        }
      }
      if (!fdr_pvec.empty()) {
        const auto adjusted = bh_fdr(fdr_pvec);
        for (std::size_t i = 0; i < adjusted.size(); ++i)
          stats_json["correlations"][fdr_keys[i].first][fdr_keys[i].second]["p_fdr"] =
              adjusted[i];
      }
      std::size_t n_with = 0;
      for (const auto& row : rows)
        if (row.has_epochs) ++n_with;
      stats_json["participants_with_epochs"] = n_with;
      stats_json["participants_without_epochs"] = rows.size() - n_with;
      std::ofstream out(cond_dir / "group_stats.json", std::ios::trunc);
      out << stats_json.dump(2) << '\n';
      outputs.push_back(
          (fs::path("analysis") / condition_code(condition) / "group_stats.json")
              .string());
    }
  }

  std::sort(outputs.begin(), outputs.end());
  manifest_update_stage(config, "analyze", outputs, timer.elapsed_ms());
}

// ---- decode ----------------------------------------------------------------

void cmd_decode(const RunConfig& config) {
  const fs::path root(config.out_dir);
  const fs::path analysis_dir = root / "analysis";
  if (!fs::exists(analysis_dir))
    throw DataError("decode: no analysis directory (run analyze first)");

  StageTimer timer;
  const auto& spec = config.cohort;
  std::vector<std::string> outputs;

  for (const ConditionSel condition : selected_conditions(config)) {
    const fs::path cond_in = analysis_dir / condition_code(condition);
    const fs::path cond_out = root / "decode" / condition_code(condition);
    fs::create_directories(cond_out);

    // Pool epochs per group, capped per class.
    std::vector<std::string> class_names;
    std::vector<EpochSet> class_epochs;
    for (const auto& group : spec.groups) {
      EpochSet pooled;
      bool any = false;
      for (int k = 0; k < spec.n_per_group; ++k) {
        const std::string pid = participant_dir_name(group.name, k);
        const fs::path base = cond_in / ("epochs_" + pid);
        if (!fs::exists(base.string() + ".json")) continue;
        const auto epochs = read_epochs(base.string());
        if (epochs.n_trials() == 0) continue;
        if (!any) {
          pooled = epochs;
          any = true;
        } else {
          pooled.trials.insert(pooled.trials.end(), epochs.trials.begin(),
                               epochs.trials.end());
          pooled.data.insert(pooled.data.end(), epochs.data.begin(),
                             epochs.data.end());
        }
      }
      if (!any) continue;  // groups without cue-locked epochs drop out
      const auto keep = subsample_indices(
          pooled.n_trials(), config.decode.max_trials_per_class,
          derive_seed(spec.master_seed, "decode-cap", class_names.size()));
      class_names.push_back(group.name);
      class_epochs.push_back(pooled.select(keep));
    }
    if (class_names.size() < 2)
      throw DataError("decode: fewer than 2 groups with cue-locked epochs");
    for (std::size_t cls = 0; cls < class_epochs.size(); ++cls)
      if (class_epochs[cls].n_trials() < static_cast<std::size_t>(config.decode.cv.folds))
        throw DataError("decode: insufficient trials in class " + class_names[cls]);

    EpochSet pooled = class_epochs[0];
    std::vector<int> labels(class_epochs[0].n_trials(), 0);
    for (std::size_t cls = 1; cls < class_epochs.size(); ++cls) {
      const auto& e = class_epochs[cls];
      pooled.trials.insert(pooled.trials.end(), e.trials.begin(), e.trials.end());
      pooled.data.insert(pooled.data.end(), e.data.begin(), e.data.end());
      labels.insert(labels.end(), e.n_trials(), static_cast<int>(cls));
    }

    const auto t = tfr(pooled);
    const auto sw = band_power(t, kSwBandLo, kSwBandHi);
    const auto sp = band_power(t, kSpindleBandLo, kSpindleBandHi);
    const auto tensor = assemble_features(pooled, sw, sp, labels, class_names);

    CvConfig cv = config.decode.cv;
    cv.seed = derive_seed(spec.master_seed, "decode-cv");
    DecodeOptions opt;
    opt.c_param = config.decode.c_param;
    opt.gamma = config.decode.gamma;
    opt.n_threads = config.threads;

    nlohmann::json summary;
    summary["classes"] = class_names;
    summary["chance"] = 1.0 / static_cast<double>(class_names.size());
    summary["n_trials"] = tensor.n_trials;

    for (const FeatureBlock block :
         {FeatureBlock::SwPower, FeatureBlock::SpindlePower, FeatureBlock::Coupling}) {
      const fs::path block_dir = cond_out / feature_block_code(block);
      fs::create_directories(block_dir);
      const auto observed = crossval_decode(tensor, block, cv, opt);
      const auto ensemble = surrogate_decode(
          tensor, block, cv, config.decode.surrogates,
          derive_seed(spec.master_seed, "decode-surrogate",
                      static_cast<std::uint64_t>(block)),
          opt);
      const auto clusters = cluster_permutation(
          observed, ensemble, config.decode.alpha, config.decode.cluster_permutations,
          derive_seed(spec.master_seed, "decode-cluster",
                      static_cast<std::uint64_t>(block)));

      write_decoding_curve_csv((block_dir / "curve.csv").string(), observed);
      write_cluster_result_json((block_dir / "clusters.json").string(), clusters);
      {
        std::ofstream out(block_dir / "surrogates.csv", std::ios::trunc);
        out << "shuffle,frame,accuracy\n";
        char buf[96];
        for (std::size_t s = 0; s < ensemble.curves.size(); ++s)
          for (std::size_t f = 0; f < ensemble.curves[s].accuracy.size(); ++f) {
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g", s, f,
                          ensemble.curves[s].accuracy[f]);
            out << buf << '\n';
          }
      }
      const std::string rel =
          (fs::path("decode") / condition_code(condition) / feature_block_code(block))
              .string();
      outputs.push_back(rel + "/curve.csv");
      outputs.push_back(rel + "/clusters.json");
      outputs.push_back(rel + "/surrogates.csv");
    }
    {
      std::ofstream out(cond_out / "summary.json", std::ios::trunc);
      out << summary.dump(2) << '\n';
      outputs.push_back(
          (fs::path("decode") / condition_code(condition) / "summary.json").string());
    }
  }

  std::sort(outputs.begin(), outputs.end());
  manifest_update_stage(config, "decode", outputs, timer.elapsed_ms());
}

// ---- report ----------------------------------------------------------------

void cmd_report(const RunConfig& config) {
  const fs::path root(config.out_dir);
  const fs::path analysis_dir = root / "analysis";
  if (!fs::exists(analysis_dir) || fs::is_empty(analysis_dir))
    throw DataError(
        "report: analysis directory empty; run `analyze` (and `decode`) first");

  StageTimer timer;
  const fs::path report_dir = root / "report";
  fs::create_directories(report_dir);
  std::vector<std::string> outputs;

  auto copy_in = [&](const fs::path& src, const std::string& dst_name) {
    if (!fs::exists(src)) return false;
    fs::copy_file(src, report_dir / dst_name, fs::copy_options::overwrite_existing);
    outputs.push_back("report/" + dst_name);
    return true;
  };

  copy_in(analysis_dir / "behavior_accuracy.csv", "accuracy.csv");
  copy_in(analysis_dir / "behavior_transitions.csv", "transitions.csv");
  copy_in(analysis_dir / "architecture.csv", "architecture.csv");
  copy_in(analysis_dir / "difficulty_validity.csv", "difficulty_validity.csv");

  nlohmann::json summary;
  for (const char* cond : {"all", "l3"}) {
    const fs::path cond_dir = analysis_dir / cond;
    if (!fs::exists(cond_dir)) continue;
    copy_in(cond_dir / "scalars.csv", std::string("scalars_") + cond + ".csv");
    if (fs::exists(cond_dir / "group_stats.json")) {
      std::ifstream in(cond_dir / "group_stats.json");
      nlohmann::json j;
      in >> j;
      summary["group_stats"][cond] = j;
    }
    for (const char* block : {"sw_power", "spindle_power", "coupling"}) {
      const fs::path bdir = root / "decode" / cond / block;
      if (!fs::exists(bdir)) continue;
      copy_in(bdir / "curve.csv",
              std::string("decoding_") + cond + "_" + block + ".csv");
      if (fs::exists(bdir / "clusters.json")) {
        std::ifstream in(bdir / "clusters.json");
        nlohmann::json j;
        in >> j;
        summary["clusters"][cond][block] = j;
      }
    }
  }
  {
    std::ofstream out(report_dir / "summary.json", std::ios::trunc);
    out << summary.dump(2) << '\n';
    outputs.push_back("report/summary.json");
  }
  std::sort(outputs.begin(), outputs.end());
  manifest_update_stage(config, "report", outputs, timer.elapsed_ms());
}

void cmd_all(const RunConfig& config) {
  cmd_simulate(config);
  cmd_schedule(config);
  cmd_analyze(config);
  cmd_decode(config);
  cmd_report(config);
}

}  // namespace tmr
