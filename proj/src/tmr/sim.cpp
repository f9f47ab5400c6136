#include "tmr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "tmr/error.hpp"
#include "tmr/fft.hpp"
#include "tmr/rng.hpp"

namespace tmr {

HypnogramModel default_hypnogram_model(std::size_t duration_epochs,
                                       std::uint64_t seed) {
  HypnogramModel m;
  m.initial_stage = SleepStage::Wake;
  m.duration_epochs = duration_epochs;
  m.seed = seed;
  //                 W      R     N1     N2    N3
  m.transition = {{{0.780, 0.00, 0.220, 0.000, 0.00},
                   {0.040, 0.82, 0.090, 0.050, 0.00},
                   {0.070, 0.03, 0.550, 0.350, 0.00},
                   {0.015, 0.04, 0.045, 0.820, 0.08},
                   {0.000, 0.03, 0.005, 0.125, 0.84}}};
  return m;
}

Hypnogram gen_hypnogram(const HypnogramModel& model) {
  for (int r = 0; r < kNumStages; ++r) {
    double sum = 0.0;
    for (double v : model.transition[r]) {
      if (v < 0.0)
        throw ConfigError("gen_hypnogram: negative probability in row " +
                          std::to_string(r));
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw ConfigError("gen_hypnogram: transition row " + std::to_string(r) +
                        " does not sum to 1");
  }
  if (model.duration_epochs == 0)
    throw ConfigError("gen_hypnogram: zero duration");

  Rng rng(derive_seed(model.seed, "hypnogram"));
  std::vector<SleepStage> stages;
  stages.reserve(model.duration_epochs);
  auto state = static_cast<std::size_t>(model.initial_stage);
  for (std::size_t e = 0; e < model.duration_epochs; ++e) {
    stages.push_back(static_cast<SleepStage>(state));
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t next = kNumStages - 1;
    for (std::size_t s = 0; s < kNumStages; ++s) {
      acc += model.transition[state][s];
      if (u < acc) {
        next = s;
        break;
      }
    }
    state = next;
  }
  return Hypnogram::from_stages(std::move(stages));
}

OscillatorParams default_oscillator_params() {
  OscillatorParams p;
  auto& st = p.stage;
  //        exponent rms   sw_f  sw_amp rate/min sp_amp
  st[0] = {1.0, 14.0, 1.0, 0.0, 0.0, 0.0};    // Wake
  st[1] = {1.0, 12.0, 1.0, 0.0, 0.0, 0.0};    // REM
  st[2] = {1.0, 10.0, 1.0, 4.0, 0.5, 4.0};    // N1
  st[3] = {1.0, 10.0, 1.2, 25.0, 8.0, 18.0};  // N2
  st[4] = {1.0, 10.0, 0.8, 55.0, 4.0, 12.0};  // N3
  return p;
}

namespace {

// Spectrally shaped Gaussian noise: amplitude ~ f^(-a/2), normalized to the
// requested RMS.
std::vector<double> one_over_f_block(std::size_t n, double exponent, double rms,
                                     Rng& rng) {
  std::vector<std::complex<double>> spec(n, {0.0, 0.0});
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double amp = std::pow(static_cast<double>(k), -exponent / 2.0);
    const std::complex<double> v(rng.normal() * amp, rng.normal() * amp);
    spec[k] = v;
    if (k != n - k && k != 0) spec[n - k] = std::conj(v);
  }
  fft(spec, true);
  std::vector<double> x(n);
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = spec[i].real();
    energy += x[i] * x[i];
  }
  const double actual = std::sqrt(energy / static_cast<double>(n));
  const double scale = actual > 0.0 ? rms / actual : 0.0;
  for (double& v : x) v *= scale;
  return x;
}

struct SpindleEvent {
  double t0_s;
  double duration_s;
  double amp_uv;
  double phase0;
};

}  // namespace

Recording synth_eeg(const Hypnogram& hypnogram, const OscillatorParams& osc,
                    const CouplingParams& coupling, const EvokedModel& evoked,
                    const CueLog& cue_log, double fs_hz, std::uint64_t seed) {
  if (fs_hz != 100.0 && fs_hz != 200.0 && fs_hz != 500.0 && fs_hz != 1000.0)
    throw ConfigError("synth_eeg: fs must be one of 100/200/500/1000 Hz");
  if (coupling.kappa < 0.0 || coupling.kappa > 1.0)
    throw ConfigError("synth_eeg: kappa outside [0, 1]");
  auto hrep = validate_hypnogram(hypnogram);
  if (!hrep.valid()) throw DataError("synth_eeg: " + hrep.violations[0]);
  for (const auto& cue : cue_log) {
    if (cue.onset_ms < 0 ||
        static_cast<double>(cue.onset_ms) / 1000.0 >= hypnogram.duration_s())
      throw DataError("synth_eeg: cue onset outside hypnogram");
    if (!is_cue_eligible(hypnogram.stage_at_ms(cue.onset_ms)))
      throw DataError("synth_eeg: cue outside eligible stage at " +
                      std::to_string(cue.onset_ms) + " ms");
  }

  const std::size_t n_epochs = hypnogram.stages.size();
  const auto epoch_samples =
      static_cast<std::size_t>(std::llround(hypnogram.epoch_length_s * fs_hz));
  const std::size_t n = n_epochs * epoch_samples;
  const double dt = 1.0 / fs_hz;

  // Cue-locked gain/ERP timelines (channel-independent, precomputed once).
  std::vector<double> g_sw(n, 1.0), g_sp(n, 1.0), erp_add(n, 0.0);
  for (const auto& cue : cue_log) {
    const double h = std::pow(evoked.habituation, cue.pres_index - 1);
    const auto start = static_cast<std::size_t>(
        std::llround(static_cast<double>(cue.onset_ms) / 1000.0 * fs_hz));
    const auto second = static_cast<std::size_t>(std::llround(
        static_cast<double>(cue.onset_ms + cue.second_word_offset_ms) / 1000.0 *
        fs_hz));
    const std::size_t stop = std::min(n, start + static_cast<std::size_t>(4.0 * fs_hz));
    for (std::size_t i = start; i < stop; ++i) {
      double gs = evoked.sw_power_gain;
      double gp = evoked.spindle_power_gain;
      if (i >= second) {
        gs *= evoked.second_word_gain;
        gp *= evoked.second_word_gain;
      }
      g_sw[i] = 1.0 + (gs - 1.0) * h;
      g_sp[i] = 1.0 + (gp - 1.0) * h;
    }
    // Biphasic kernel at each word onset (negative then positive deflection).
    for (std::size_t word = 0; word < 2; ++word) {
      const std::size_t at = word == 0 ? start : second;
      const auto lat = static_cast<std::size_t>(std::llround(evoked.erp_latency_s * fs_hz));
      const auto kern_len = static_cast<std::size_t>(std::llround(1.5 * fs_hz));
      for (std::size_t i = 0; i < kern_len && at + lat + i < n; ++i) {
        const double tau = static_cast<double>(i) * dt;
        const double neg = std::exp(-std::pow((tau - 0.35) / 0.15, 2.0));
        const double pos = std::exp(-std::pow((tau - 0.85) / 0.25, 2.0));
        erp_add[at + lat + i] += evoked.erp_amp_uv * h * (0.8 * pos - neg);
      }
    }
  }

  // Shared slow-oscillation phase: per-stage center frequency with a slow
  // Ornstein-Uhlenbeck drift so cue onsets sample all phases across trials.
  std::vector<double> sw_phase(n), sw_amp(n);
  {
    Rng rng(derive_seed(seed, "sw-phase"));
    double phase = rng.uniform() * 2.0 * M_PI - M_PI;
    double drift = 0.0;
    double amp = 0.0;
    const double theta = 0.5, sigma = 0.08;
    const double amp_tau = 0.25;  // s, stage-transition ramp
    for (std::size_t i = 0; i < n; ++i) {
      const auto& st = osc.stage[static_cast<std::size_t>(
          hypnogram.stages[i / epoch_samples])];
      drift += (-theta * drift) * dt + sigma * std::sqrt(dt) * rng.normal();
      const double f = std::max(0.1, st.sw_center_hz + drift);
      phase += 2.0 * M_PI * f * dt;
      if (phase > M_PI) phase -= 2.0 * M_PI * std::floor((phase + M_PI) / (2.0 * M_PI));
      amp += (st.sw_amp_uv - amp) * (dt / amp_tau);
      sw_phase[i] = phase;
      sw_amp[i] = amp;
    }
  }

  // Spindle events from stage-dependent Poisson processes.
  std::vector<SpindleEvent> events;
  {
    Rng rng(derive_seed(seed, "spindles"));
    double t = 0.0;
    const double total_s = static_cast<double>(n) * dt;
    while (t < total_s) {
      const auto& st =
          osc.stage[static_cast<std::size_t>(hypnogram.stage_at_s(t))];
      const double rate_hz = st.spindle_rate_per_min / 60.0;
      if (rate_hz <= 0.0) {
        // Jump to the next epoch boundary.
        t = (std::floor(t / hypnogram.epoch_length_s) + 1.0) * hypnogram.epoch_length_s;
        continue;
      }
      t += rng.exponential(rate_hz);
      if (t >= total_s) break;
      const auto& st_on =
          osc.stage[static_cast<std::size_t>(hypnogram.stage_at_s(t))];
      if (st_on.spindle_rate_per_min <= 0.0) continue;
      events.push_back({t, osc.spindle_duration_s, st_on.spindle_amp_uv,
                        rng.uniform() * 2.0 * M_PI});
    }
  }

  // Channel-independent oscillatory content; channels differ only by their
  // gain profile and their own background stream.
  std::vector<double> osc_sig(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    osc_sig[i] = sw_amp[i] * std::sqrt(g_sw[i]) * std::cos(sw_phase[i]) + erp_add[i];
  for (const auto& ev : events) {
    const auto start = static_cast<std::size_t>(std::llround(ev.t0_s * fs_hz));
    const auto len = static_cast<std::size_t>(std::llround(ev.duration_s * fs_hz));
    for (std::size_t i = 0; i < len && start + i < n; ++i) {
      const double rel = static_cast<double>(i) / static_cast<double>(len);
      const double hann = 0.5 * (1.0 - std::cos(2.0 * M_PI * rel));
      const double mod =
          (1.0 + coupling.kappa * std::cos(sw_phase[start + i] - coupling.phi0)) / 2.0;
      const double carrier = std::cos(
          2.0 * M_PI * osc.spindle_center_hz * static_cast<double>(i) * dt + ev.phase0);
      osc_sig[start + i] +=
          ev.amp_uv * std::sqrt(g_sp[start + i]) * hann * mod * carrier;
    }
  }

  Recording rec;
  rec.sample_rate_hz = fs_hz;
  rec.channel_labels.assign(canonical_channels().begin(), canonical_channels().end());
  rec.t0_s = 0.0;
  rec.samples.assign(kNumChannels, std::vector<float>(n, 0.0f));

  const std::size_t fade = static_cast<std::size_t>(std::llround(0.25 * fs_hz));
  for (int c = 0; c < kNumChannels; ++c) {
    auto& out = rec.samples[c];
    const double gain = osc.channel_gain[static_cast<std::size_t>(c)];

    // Background: per-epoch spectral synthesis with a short crossfade to
    // avoid boundary clicks.
    std::vector<double> prev_tail;
    for (std::size_t e = 0; e < n_epochs; ++e) {
      Rng rng(derive_seed(seed, "background", static_cast<std::uint64_t>(c), e));
      const auto& st = osc.stage[static_cast<std::size_t>(hypnogram.stages[e])];
      auto block = one_over_f_block(epoch_samples + fade, st.background_exponent,
                                    st.background_rms_uv, rng);
      const std::size_t base = e * epoch_samples;
      for (std::size_t i = 0; i < epoch_samples; ++i) {
        double v = block[i];
        if (i < prev_tail.size()) {
          const double w = static_cast<double>(i + 1) / static_cast<double>(fade + 1);
          v = w * v + (1.0 - w) * prev_tail[i];
        }
        out[base + i] = static_cast<float>(v + gain * osc_sig[base + i]);
      }
      prev_tail.assign(block.begin() + static_cast<std::ptrdiff_t>(epoch_samples),
                       block.end());
    }
  }
  return rec;
}

CohortSpec default_cohort_spec() {
  CohortSpec spec;
  GroupSpec ptmr;
  ptmr.name = "PTMR";
  ptmr.policy = PolicyKind::Personalized;
  ptmr.evoked = {10.0, 0.0, 1.6, 1.6, 1.5, 0.85};
  ptmr.coupling = {0.7, 0.0};
  ptmr.consolidation = {{{0.05, 0.95}, {0.30, 0.90}, {0.35, 0.80}}};

  GroupSpec tmrg;
  tmrg.name = "TMR";
  tmrg.policy = PolicyKind::Fixed;
  tmrg.evoked = {8.0, 0.0, 1.6, 1.5, 1.2, 1.0};
  tmrg.coupling = {0.7, 0.0};
  tmrg.consolidation = {{{0.05, 0.95}, {0.25, 0.90}, {0.15, 0.65}}};

  // Sham schedule: cue times are logged for epoching but evoke nothing.
  GroupSpec cnt;
  cnt.name = "CNT";
  cnt.policy = PolicyKind::Fixed;
  cnt.evoked = {0.0, 0.0, 1.0, 1.0, 1.0, 1.0};
  cnt.coupling = {0.2, 0.0};
  cnt.consolidation = {{{0.05, 0.95}, {0.10, 0.80}, {0.08, 0.55}}};

  spec.groups = {ptmr, tmrg, cnt};
  return spec;
}

BehaviorSets gen_behavior(const CohortSpec& spec, const GroupSpec& group,
                          std::uint64_t participant_seed) {
  double sum = spec.level_proportions[0] + spec.level_proportions[1] +
               spec.level_proportions[2];
  if (std::fabs(sum - 1.0) > 1e-9)
    throw ConfigError("gen_behavior: level proportions must sum to 1");

  // Largest-remainder apportionment of the 104 items over levels.
  std::array<int, 3> counts{};
  std::array<double, 3> exact{};
  int assigned = 0;
  for (int l = 0; l < 3; ++l) {
    exact[l] = spec.level_proportions[l] * kCorpusSize;
    counts[l] = static_cast<int>(std::floor(exact[l]));
    assigned += counts[l];
  }
  while (assigned < kCorpusSize) {
    int best = 0;
    double best_rem = -1.0;
    for (int l = 0; l < 3; ++l) {
      const double rem = exact[l] - counts[l];
      if (rem > best_rem) {
        best_rem = rem;
        best = l;
      }
    }
    counts[best]++;
    exact[best] = counts[best];  // consumed
    ++assigned;
  }

  Rng rng(derive_seed(participant_seed, "behavior"));
  std::vector<Level> levels;
  for (int l = 0; l < 3; ++l)
    levels.insert(levels.end(), counts[l], static_cast<Level>(l + 1));
  rng.shuffle(levels);

  const auto corpus = default_word_corpus();
  BehaviorSets out;
  for (int i = 0; i < kCorpusSize; ++i) {
    const Level lev = levels[static_cast<std::size_t>(i)];
    const auto li = static_cast<std::size_t>(lev) - 1;
    const bool pre_correct = rng.uniform() < spec.pre_correct_prob[li];
    const bool post_correct =
        rng.uniform() < group.consolidation[li][pre_correct ? 1 : 0];
    const auto& target = corpus[static_cast<std::size_t>(i)].target_word;
    out.pre.push_back({i + 1, Session::Pre, pre_correct, lev,
                       pre_correct ? target : std::string()});
    out.post.push_back({i + 1, Session::Post, post_correct, lev,
                        post_correct ? target : std::string()});
  }
  return out;
}

// --- JSON bindings -----------------------------------------------------

void to_json(nlohmann::json& j, const HypnogramModel& m) {
  j = {{"initial_stage", stage_code(m.initial_stage)},
       {"transition", m.transition},
       {"duration_epochs", m.duration_epochs},
       {"seed", m.seed}};
}

void from_json(const nlohmann::json& j, HypnogramModel& m) {
  auto st = stage_from_code(j.at("initial_stage").get<std::string>());
  if (!st) throw ConfigError("hypnogram model: bad initial stage");
  m.initial_stage = *st;
  m.transition = j.at("transition").get<decltype(m.transition)>();
  m.duration_epochs = j.at("duration_epochs").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const OscillatorParams& p) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : p.stage)
    stages.push_back({{"background_exponent", s.background_exponent},
                      {"background_rms_uv", s.background_rms_uv},
                      {"sw_center_hz", s.sw_center_hz},
                      {"sw_amp_uv", s.sw_amp_uv},
                      {"spindle_rate_per_min", s.spindle_rate_per_min},
                      {"spindle_amp_uv", s.spindle_amp_uv}});
  j = {{"stage", std::move(stages)},
       {"spindle_center_hz", p.spindle_center_hz},
       {"spindle_duration_s", p.spindle_duration_s},
       {"channel_gain", p.channel_gain}};
}

void from_json(const nlohmann::json& j, OscillatorParams& p) {
  const auto& stages = j.at("stage");
  for (std::size_t i = 0; i < kNumStages; ++i) {
    const auto& s = stages.at(i);
    p.stage[i].background_exponent = s.at("background_exponent").get<double>();
    p.stage[i].background_rms_uv = s.at("background_rms_uv").get<double>();
    p.stage[i].sw_center_hz = s.at("sw_center_hz").get<double>();
    p.stage[i].sw_amp_uv = s.at("sw_amp_uv").get<double>();
    p.stage[i].spindle_rate_per_min = s.at("spindle_rate_per_min").get<double>();
    p.stage[i].spindle_amp_uv = s.at("spindle_amp_uv").get<double>();
  }
  p.spindle_center_hz = j.at("spindle_center_hz").get<double>();
  p.spindle_duration_s = j.at("spindle_duration_s").get<double>();
  p.channel_gain = j.at("channel_gain").get<decltype(p.channel_gain)>();
}

void to_json(nlohmann::json& j, const CouplingParams& p) {
  j = {{"kappa", p.kappa}, {"phi0", p.phi0}};
}

void from_json(const nlohmann::json& j, CouplingParams& p) {
  p.kappa = j.at("kappa").get<double>();
  p.phi0 = j.at("phi0").get<double>();
}

void to_json(nlohmann::json& j, const EvokedModel& m) {
  j = {{"erp_amp_uv", m.erp_amp_uv},
       {"erp_latency_s", m.erp_latency_s},
       {"sw_power_gain", m.sw_power_gain},
       {"spindle_power_gain", m.spindle_power_gain},
       {"second_word_gain", m.second_word_gain},
       {"habituation", m.habituation}};
}

void from_json(const nlohmann::json& j, EvokedModel& m) {
  m.erp_amp_uv = j.at("erp_amp_uv").get<double>();
  m.erp_latency_s = j.at("erp_latency_s").get<double>();
  m.sw_power_gain = j.at("sw_power_gain").get<double>();
  m.spindle_power_gain = j.at("spindle_power_gain").get<double>();
  m.second_word_gain = j.at("second_word_gain").get<double>();
  m.habituation = j.at("habituation").get<double>();
}

void to_json(nlohmann::json& j, const GroupSpec& g) {
  j = {{"name", g.name},
       {"policy", policy_code(g.policy)},
       {"evoked", g.evoked},
       {"coupling", g.coupling},
       {"consolidation", g.consolidation}};
}

void from_json(const nlohmann::json& j, GroupSpec& g) {
  g.name = j.at("name").get<std::string>();
  auto pol = policy_from_code(j.at("policy").get<std::string>());
  if (!pol) throw ConfigError("group spec: bad policy");
  g.policy = *pol;
  g.evoked = j.at("evoked").get<EvokedModel>();
  g.coupling = j.at("coupling").get<CouplingParams>();
  g.consolidation = j.at("consolidation").get<decltype(g.consolidation)>();
}

void to_json(nlohmann::json& j, const CohortSpec& s) {
  j = {{"n_per_group", s.n_per_group},
       {"groups", s.groups},
       {"level_proportions", s.level_proportions},
       {"pre_correct_prob", s.pre_correct_prob},
       {"session_epochs", s.session_epochs},
       {"fs_hz", s.fs_hz},
       {"master_seed", s.master_seed}};
}

void from_json(const nlohmann::json& j, CohortSpec& s) {
  s.n_per_group = j.at("n_per_group").get<int>();
  s.groups = j.at("groups").get<std::vector<GroupSpec>>();
  s.level_proportions = j.at("level_proportions").get<decltype(s.level_proportions)>();
  s.pre_correct_prob = j.at("pre_correct_prob").get<decltype(s.pre_correct_prob)>();
  s.session_epochs = j.at("session_epochs").get<std::size_t>();
  s.fs_hz = j.at("fs_hz").get<double>();
  s.master_seed = j.at("master_seed").get<std::uint64_t>();
}

}  // namespace tmr
