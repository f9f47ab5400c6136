#include <doctest.h>

#include <cmath>

#include "support/helpers.hpp"
#include "tmr/error.hpp"
#include "tmr/preprocess.hpp"
#include "tmr/rng.hpp"
#include "tmr/util.hpp"

using namespace tmr;

namespace {

Recording noise_recording(std::size_t n, double fs = 100.0, std::uint64_t seed = 1,
                          double rms = 10.0) {
  Recording rec;
  rec.sample_rate_hz = fs;
  rec.channel_labels.assign(canonical_channels().begin(), canonical_channels().end());
  rec.samples.resize(kNumChannels);
  Rng rng(seed);
  for (auto& ch : rec.samples) {
    ch.resize(n);
    for (auto& v : ch) v = static_cast<float>(rng.normal(0.0, rms));
  }
  return rec;
}

CueLog cues_at(std::initializer_list<std::int64_t> onsets) {
  CueLog log;
  int block = 1;
  for (auto t : onsets) log.push_back({t, block, 1, block++, 2000});
  return log;
}

}  // namespace

TEST_CASE("detect_and_repair_channels") {
  SUBCASE("same distribution: nothing flagged") {
    const auto rec = noise_recording(20000);
    const auto [repaired, report] = detect_and_repair_channels(rec);
    CHECK(report.flagged.empty());
  }
  SUBCASE("spike-train channel is flagged and replaced by its neighbor mean") {
    auto rec = noise_recording(20000);
    // Sparse large spikes push kurtosis far out.
    for (std::size_t i = 0; i < rec.samples[2].size(); i += 500)
      rec.samples[2][i] = 400.0f;
    const auto [repaired, report] = detect_and_repair_channels(rec);
    REQUIRE(report.flagged == std::vector<int>{2});
    // C3 donors are F3, C4, O1.
    REQUIRE(report.sources.at(2) == std::vector<int>({0, 3, 4}));
    for (std::size_t i = 0; i < rec.samples[2].size(); i += 997) {
      const float expect = static_cast<float>(
          (static_cast<double>(rec.samples[0][i]) + rec.samples[3][i] +
           rec.samples[4][i]) /
          3.0);
      CHECK(repaired.samples[2][i] == expect);
    }
  }
  SUBCASE("more than two bad channels is an error") {
    auto rec = noise_recording(20000);
    const float amps[3] = {500.0f, 2000.0f, 20000.0f};
    const std::size_t strides[3] = {100, 1000, 10000};
    for (int c : {0, 1, 2}) {
      for (std::size_t i = 0; i < rec.samples[c].size(); i += strides[c])
        rec.samples[c][i] = amps[c];
    }
    CHECK_THROWS_AS(detect_and_repair_channels(rec), DataError);
  }
}

TEST_CASE("extract_epochs index arithmetic") {
  Recording rec;
  rec.sample_rate_hz = 100.0;
  rec.channel_labels.assign(canonical_channels().begin(), canonical_channels().end());
  rec.samples.resize(kNumChannels);
  // Encode the absolute sample index in the samples to verify slicing.
  for (int c = 0; c < kNumChannels; ++c) {
    rec.samples[c].resize(10000);
    for (std::size_t i = 0; i < 10000; ++i)
      rec.samples[c][i] = static_cast<float>(i);
  }

  SUBCASE("cue at 60 s covers samples [5950, 6400), 450 samples") {
    const auto epochs = extract_epochs(rec, cues_at({60000}), {});
    REQUIRE(epochs.n_trials() == 1);
    REQUIRE(epochs.n_samples == 450);
    CHECK(epochs.trial_channel(0, 0)[0] == 5950.0);
    CHECK(epochs.trial_channel(0, 0)[50] == 6000.0);  // cue onset at t = 0
    CHECK(epochs.trial_channel(0, 0)[449] == 6399.0);
    CHECK(epochs.time_at(0) == doctest::Approx(-0.5));
    CHECK(epochs.time_at(50) == doctest::Approx(0.0));
  }
  SUBCASE("cue 0.2 s after record start is dropped for incomplete baseline") {
    const auto epochs = extract_epochs(rec, cues_at({200}), {});
    CHECK(epochs.n_trials() == 0);
    REQUIRE(epochs.dropped_bounds.size() == 1);
    CHECK(epochs.dropped_bounds[0] == 0);
  }
  SUBCASE("N in-bounds cues produce N trials") {
    const auto epochs = extract_epochs(rec, cues_at({1000, 9000, 17000, 25000}), {});
    CHECK(epochs.n_trials() == 4);
  }
  SUBCASE("empty cue log yields an empty set, not an error") {
    const auto epochs = extract_epochs(rec, {}, {});
    CHECK(epochs.n_trials() == 0);
  }
  SUBCASE("non-100 Hz input is rejected") {
    auto bad = rec;
    bad.sample_rate_hz = 500.0;
    CHECK_THROWS_AS(extract_epochs(bad, cues_at({60000}), {}), DataError);
  }
}

TEST_CASE("reject_amplitude") {
  auto rec = noise_recording(10000, 100.0, 2, 5.0);
  const auto log = cues_at({10000, 30000, 50000, 70000});
  auto epochs = extract_epochs(rec, log, {});
  REQUIRE(epochs.n_trials() == 4);

  SUBCASE("clean trials all kept") {
    const auto [kept, report] = reject_amplitude(epochs);
    CHECK(kept.n_trials() == 4);
    CHECK(report.dropped.empty());
  }
  SUBCASE("a 600 uV excursion drops exactly that trial") {
    epochs.trial_channel(2, 3)[100] = 600.0;
    const auto [kept, report] = reject_amplitude(epochs);
    CHECK(kept.n_trials() == 3);
    REQUIRE(report.dropped.size() == 1);
    CHECK(report.dropped[0] == 2);
  }
  SUBCASE("exactly 500.0 uV is kept (strict inequality)") {
    epochs.trial_channel(1, 0)[10] = 500.0;
    const auto [kept, report] = reject_amplitude(epochs);
    CHECK(kept.n_trials() == 4);
  }
  SUBCASE("epoch count conservation") {
    epochs.trial_channel(0, 0)[0] = 900.0;
    const auto [kept, report] = reject_amplitude(epochs);
    CHECK(kept.n_trials() + report.dropped.size() + epochs.dropped_bounds.size() ==
          log.size());
  }
}

TEST_CASE("baseline_correct") {
  auto rec = noise_recording(10000, 100.0, 3);
  auto epochs = extract_epochs(rec, cues_at({20000, 40000, 60000}), {});

  SUBCASE("constant offset removed to within 1e-12") {
    for (std::size_t s = 0; s < epochs.n_samples; ++s)
      epochs.trial_channel(0, 0)[s] = 42.0;
    const auto corrected = baseline_correct(epochs);
    for (std::size_t s = 0; s < corrected.n_samples; ++s)
      CHECK(std::fabs(corrected.trial_channel(0, 0)[s]) < 1e-12);
  }
  SUBCASE("post-hoc baseline means vanish for all trials and channels") {
    const auto corrected = baseline_correct(epochs);
    for (std::size_t t = 0; t < corrected.n_trials(); ++t)
      for (int c = 0; c < kNumChannels; ++c) {
        const double m =
            pairwise_sum({corrected.trial_channel(t, c), 50}) / 50.0;
        CHECK(std::fabs(m) < 1e-9);
      }
  }
  SUBCASE("already zero-mean baseline is unchanged") {
    auto zeroed = baseline_correct(epochs);
    const auto again = baseline_correct(zeroed);
    for (std::size_t s = 0; s < zeroed.n_samples; ++s)
      CHECK(again.trial_channel(1, 1)[s] ==
            doctest::Approx(zeroed.trial_channel(1, 1)[s]).epsilon(1e-12));
  }
}

TEST_CASE("erp") {
  auto rec = noise_recording(40000, 100.0, 4, 0.0);  // zero signal
  std::vector<std::int64_t> onsets;
  for (int i = 0; i < 8; ++i) onsets.push_back(10000 + i * 8000);
  CueLog log;
  for (std::size_t i = 0; i < onsets.size(); ++i)
    log.push_back({onsets[i], static_cast<int>(i + 1), 1, static_cast<int>(i + 1), 2000});
  auto epochs = extract_epochs(rec, log, {});

  SUBCASE("identical trials: ERP equals the trial, SE = 0") {
    for (std::size_t t = 0; t < epochs.n_trials(); ++t)
      for (int c = 0; c < kNumChannels; ++c)
        for (std::size_t s = 0; s < epochs.n_samples; ++s)
          epochs.trial_channel(t, c)[s] = std::sin(0.05 * static_cast<double>(s));
    const auto waves = erp(epochs, ErpScope::AllChannelsMean, ErpGrouping::Condition);
    REQUIRE(waves.size() == 1);
    for (std::size_t s = 0; s < epochs.n_samples; ++s) {
      CHECK(waves[0].mean[s] ==
            doctest::Approx(std::sin(0.05 * static_cast<double>(s))).epsilon(1e-12));
      CHECK(waves[0].se[s] == doctest::Approx(0.0));
    }
  }
  SUBCASE("template + noise, N = 200: ERP within 3 SE of the template") {
    // Frozen fixture seed; ~30% of seeds put one of the 450 samples past
    // 3 SE by chance alone.
    Rng rng(0);
    const std::size_t n_trials = 200;
    EpochSet big;
    big.trials.resize(n_trials);
    big.data.resize(n_trials * kNumChannels * big.n_samples);
    auto tmpl = [](std::size_t s) {
      return 5.0 * std::exp(-std::pow((static_cast<double>(s) - 120.0) / 30.0, 2.0));
    };
    for (std::size_t t = 0; t < n_trials; ++t)
      for (int c = 0; c < kNumChannels; ++c)
        for (std::size_t s = 0; s < big.n_samples; ++s)
          big.trial_channel(t, c)[s] = tmpl(s) + rng.normal(0.0, 2.0);
    const auto waves = erp(big, ErpScope::AllChannelsMean, ErpGrouping::Condition);
    for (std::size_t s = 0; s < big.n_samples; ++s)
      CHECK(std::fabs(waves[0].mean[s] - tmpl(s)) <= 3.0 * waves[0].se[s]);
  }
  SUBCASE("per-channel scope emits six waveforms") {
    const auto waves = erp(epochs, ErpScope::PerChannel, ErpGrouping::Condition);
    CHECK(waves.size() == kNumChannels);
  }
  SUBCASE("empty grouping cell is an error naming the cell") {
    CHECK_THROWS_WITH_AS(erp(epochs, ErpScope::AllChannelsMean,
                             ErpGrouping::FirstVsLastPres),
                         doctest::Contains("first_pres"), DataError);
  }
}

TEST_CASE("epochs file round trip preserves metadata and float payload") {
  TempDir tmp("epochs");
  auto rec = noise_recording(10000, 100.0, 8);
  CueLog log = {{20000, 7, 2, 3, 2000}, {40000, 9, 1, 4, 1900}};
  std::map<int, Level> levels = {{7, Level::L3}, {9, Level::L2}};
  auto epochs = extract_epochs(rec, log, levels, "TMR", "TMR_01");
  write_epochs(tmp.file("e"), epochs);
  const auto back = read_epochs(tmp.file("e"));
  REQUIRE(back.n_trials() == epochs.n_trials());
  CHECK(back.trials[0].item_id == 7);
  CHECK(back.trials[0].pres_index == 2);
  CHECK(back.trials[0].level == Level::L3);
  CHECK(back.trials[0].group == "TMR");
  CHECK(back.trials[1].level == Level::L2);
  for (std::size_t t = 0; t < back.n_trials(); ++t)
    for (int c = 0; c < kNumChannels; ++c)
      for (std::size_t s = 0; s < back.n_samples; ++s)
        CHECK(back.trial_channel(t, c)[s] ==
              static_cast<double>(static_cast<float>(epochs.trial_channel(t, c)[s])));
}

TEST_CASE("pipeline order is reproducible byte for byte") {
  TempDir tmp("pre_repro");
  const auto rec = noise_recording(30000, 100.0, 12);
  const auto log = cues_at({60000, 90000, 120000});
  FilterSpec spec;
  auto run_once = [&](const std::string& name) {
    auto filtered = bandpass_recording(resample_recording(rec, 100.0), spec);
    auto [repaired, rep] = detect_and_repair_channels(filtered);
    auto epochs = extract_epochs(repaired, log, {});
    auto [kept, rej] = reject_amplitude(epochs);
    auto corrected = baseline_correct(kept);
    write_epochs(tmp.file(name), corrected);
  };
  run_once("a");
  run_once("b");
  CHECK(fnv1a64_file(tmp.file("a.f32")) == fnv1a64_file(tmp.file("b.f32")));
}
