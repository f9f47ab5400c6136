#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "tmr/decode.hpp"
#include "tmr/error.hpp"
#include "tmr/rng.hpp"
#include "tmr/util.hpp"

using namespace tmr;

namespace {

// Hand-built tensor: per-trial features drawn around class-dependent means.
// `signal` scales how informative the SW-power block is; phase/amp blocks are
// pure noise unless coupled = true.
FeatureTensor synthetic_tensor(std::size_t per_class, int n_classes,
                               std::size_t n_frames, double signal,
                               std::uint64_t seed, bool coupled = false) {
  FeatureTensor t;
  t.n_trials = per_class * static_cast<std::size_t>(n_classes);
  for (std::size_t f = 0; f < n_frames; ++f)
    t.frame_times.push_back(static_cast<double>(f) * 0.08);
  for (int cls = 0; cls < n_classes; ++cls)
    t.class_names.push_back("C" + std::to_string(cls));
  const std::size_t cells = t.n_trials * kNumChannels * n_frames;
  t.sw_power.resize(cells);
  t.sp_power.resize(cells);
  t.phase.resize(cells);
  t.amp.resize(cells);
  Rng rng(seed);
  for (std::size_t tr = 0; tr < t.n_trials; ++tr) {
    const int cls = static_cast<int>(tr / per_class);
    t.labels.push_back(cls);
    for (int c = 0; c < kNumChannels; ++c)
      for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t i = (tr * kNumChannels + c) * n_frames + f;
        t.sw_power[i] = signal * cls + rng.normal();
        t.sp_power[i] = rng.normal();
        const double phi = rng.uniform() * 2.0 * M_PI - M_PI;
        t.phase[i] = phi;
        t.amp[i] = coupled ? 1.0 + 0.8 * std::cos(phi) * (cls == 0 ? 1.0 : -1.0) +
                                 0.2 * rng.normal()
                           : std::fabs(rng.normal(1.0, 0.3));
      }
  }
  return t;
}

SurrogateEnsemble noise_ensemble(std::size_t n_curves, std::size_t n_frames,
                                 std::uint64_t seed, double sd = 0.02) {
  SurrogateEnsemble e;
  Rng rng(seed);
  for (std::size_t i = 0; i < n_curves; ++i) {
    DecodingCurve c;
    for (std::size_t f = 0; f < n_frames; ++f) {
      c.frame_times.push_back(static_cast<double>(f) * 0.08);
      c.accuracy.push_back(1.0 / 3.0 + rng.normal(0.0, sd));
    }
    e.curves.push_back(std::move(c));
  }
  return e;
}

}  // namespace

TEST_CASE("feature tensor widths: 6 + 6 + 36 = 48") {
  CHECK(FeatureTensor::block_width(FeatureBlock::SwPower) == 6);
  CHECK(FeatureTensor::block_width(FeatureBlock::SpindlePower) == 6);
  CHECK(FeatureTensor::block_width(FeatureBlock::Coupling) == 36);
  CHECK(FeatureTensor::block_width(FeatureBlock::All) == 48);

  const auto t = synthetic_tensor(10, 2, 3, 1.0, 5);
  std::vector<std::size_t> train, eval;
  for (std::size_t i = 0; i < 16; ++i) train.push_back(i);
  for (std::size_t i = 16; i < 20; ++i) eval.push_back(i);
  const auto mat = t.materialize(FeatureBlock::All, 1, train, eval);
  REQUIRE(!mat.train.empty());
  CHECK(mat.train[0].size() == 48);
  CHECK(mat.eval[0].size() == 48);
}

TEST_CASE("materialize: zero-variance features are dropped with notice") {
  auto t = synthetic_tensor(6, 2, 2, 0.0, 9);
  // Duplicate one trial everywhere: all features become constant.
  for (std::size_t tr = 1; tr < t.n_trials; ++tr)
    for (int c = 0; c < kNumChannels; ++c)
      for (std::size_t f = 0; f < t.n_frames(); ++f) {
        const auto dst = (tr * kNumChannels + c) * t.n_frames() + f;
        const auto src = (0 * kNumChannels + c) * t.n_frames() + f;
        t.sw_power[dst] = t.sw_power[src];
        t.sp_power[dst] = t.sp_power[src];
        t.phase[dst] = t.phase[src];
        t.amp[dst] = t.amp[src];
      }
  std::vector<std::size_t> train = {0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<std::size_t> eval = {8, 9};
  const auto mat = t.materialize(FeatureBlock::All, 0, train, eval);
  CHECK(mat.dropped_features.size() == 48);
  for (const auto& row : mat.train)
    for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("materialize: training statistics never see the eval split") {
  const auto t = synthetic_tensor(10, 2, 2, 1.0, 13);
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < 16; ++i) train.push_back(i);
  const std::vector<std::size_t> eval_a = {16, 17};
  const std::vector<std::size_t> eval_b = {18, 19};
  const auto mat_a = t.materialize(FeatureBlock::All, 0, train, eval_a);
  const auto mat_b = t.materialize(FeatureBlock::All, 0, train, eval_b);
  REQUIRE(mat_a.train.size() == mat_b.train.size());
  for (std::size_t r = 0; r < mat_a.train.size(); ++r)
    for (std::size_t f = 0; f < mat_a.train[r].size(); ++f)
      CHECK(mat_a.train[r][f] == mat_b.train[r][f]);
}

TEST_CASE("cv_partition") {
  std::vector<int> labels;
  for (int cls = 0; cls < 3; ++cls)
    for (int i = 0; i < 23; ++i) labels.push_back(cls);
  CvConfig cv;
  cv.seed = 3;
  const auto partition = cv_partition(labels, 3, cv);
  REQUIRE(partition.size() == 2);
  for (const auto& folds : partition) {
    // Every trial tested exactly once per repetition.
    for (int f : folds) CHECK(f >= 0);
    // Class proportions per fold within +/- 1 trial.
    for (int fold = 0; fold < cv.folds; ++fold)
      for (int cls = 0; cls < 3; ++cls) {
        int count = 0;
        for (std::size_t i = 0; i < labels.size(); ++i)
          if (labels[i] == cls && folds[i] == fold) ++count;
        CHECK(count >= 23 / cv.folds);
        CHECK(count <= 23 / cv.folds + 1);
      }
  }
  SUBCASE("class with fewer trials than folds is an error") {
    std::vector<int> tiny = {0, 0, 0, 0, 0, 1, 1, 1};
    CHECK_THROWS_AS(cv_partition(tiny, 2, cv), DataError);
  }
}

TEST_CASE("crossval_decode: perfect feature reaches >= 0.99 accuracy") {
  const auto t = synthetic_tensor(30, 3, 3, 12.0, 21);
  CvConfig cv;
  cv.seed = 7;
  const auto curve = crossval_decode(t, FeatureBlock::SwPower, cv);
  REQUIRE(curve.accuracy.size() == 3);
  CHECK(curve.chance == doctest::Approx(1.0 / 3.0));
  for (double a : curve.accuracy) CHECK(a >= 0.99);
}

TEST_CASE("crossval_decode: label-independent features sit at chance") {
  std::vector<double> devs;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = synthetic_tensor(34, 3, 1, 0.0, 100 + seed);
    CvConfig cv;
    cv.seed = seed;
    const auto curve = crossval_decode(t, FeatureBlock::SwPower, cv);
    devs.push_back(curve.accuracy[0] - 1.0 / 3.0);
  }
  CHECK(std::fabs(mean(devs)) <= 0.05);
}

TEST_CASE("coupling block carries class information when phases are coupled") {
  const auto t = synthetic_tensor(40, 2, 1, 0.0, 31, /*coupled=*/true);
  CvConfig cv;
  cv.seed = 4;
  const auto curve = crossval_decode(t, FeatureBlock::Coupling, cv);
  CHECK(curve.accuracy[0] >= 0.8);
  CHECK(curve.auc[0] >= 0.8);
}

TEST_CASE("surrogate_decode") {
  const auto t = synthetic_tensor(25, 3, 1, 12.0, 41);
  CvConfig cv;
  cv.seed = 11;

  SUBCASE("shuffled training labels collapse a perfect feature to chance") {
    const auto ensemble = surrogate_decode(t, FeatureBlock::SwPower, cv, 30, 99);
    REQUIRE(ensemble.curves.size() == 30);
    std::vector<double> accs;
    for (const auto& c : ensemble.curves) accs.push_back(c.accuracy[0]);
    CHECK(std::fabs(mean(accs) - 1.0 / 3.0) <= 0.06);
  }
  SUBCASE("deterministic given the seed") {
    const auto a = surrogate_decode(t, FeatureBlock::SwPower, cv, 5, 123);
    const auto b = surrogate_decode(t, FeatureBlock::SwPower, cv, 5, 123);
    for (std::size_t i = 0; i < a.curves.size(); ++i)
      CHECK(a.curves[i].accuracy[0] == b.curves[i].accuracy[0]);
  }
}

TEST_CASE("cluster_permutation") {
  const std::size_t n_frames = 53;

  SUBCASE("ensemble smaller than 1/alpha is an error") {
    DecodingCurve obs;
    obs.accuracy.assign(n_frames, 0.4);
    obs.frame_times.assign(n_frames, 0.0);
    const auto ens = noise_ensemble(10, n_frames, 1);
    CHECK_THROWS_AS(cluster_permutation(obs, ens, 0.05, 100, 1), ConfigError);
  }
  SUBCASE("null observed curve: usually no significant clusters") {
    int false_positives = 0;
    const int runs = 40;
    for (std::uint64_t seed = 0; seed < runs; ++seed) {
      auto ens = noise_ensemble(60, n_frames, 1000 + seed);
      DecodingCurve obs;
      Rng rng(2000 + seed);
      for (std::size_t f = 0; f < n_frames; ++f) {
        obs.frame_times.push_back(static_cast<double>(f) * 0.08);
        obs.accuracy.push_back(1.0 / 3.0 + rng.normal(0.0, 0.02));
      }
      const auto result = cluster_permutation(obs, ens, 0.05, 200, seed);
      for (const auto& c : result.clusters)
        if (c.p < 0.05) {
          ++false_positives;
          break;
        }
    }
    CHECK(false_positives <= 0.15 * runs);
  }
  SUBCASE("an injected elevated window is detected with good coverage") {
    const auto ens = noise_ensemble(100, n_frames, 5);
    DecodingCurve obs;
    Rng rng(6);
    // Elevation of +5 ensemble sd over frames 12..24 (0.5-1.5 s region).
    for (std::size_t f = 0; f < n_frames; ++f) {
      obs.frame_times.push_back(static_cast<double>(f) * 0.08);
      const double bump = (f >= 12 && f <= 24) ? 5.0 * 0.02 : 0.0;
      obs.accuracy.push_back(1.0 / 3.0 + bump + rng.normal(0.0, 0.01));
    }
    const auto result = cluster_permutation(obs, ens, 0.05, 500, 9);
    std::size_t covered = 0;
    for (std::size_t f = 12; f <= 24; ++f)
      for (const auto& c : result.clusters)
        if (c.p < 0.05 && f >= c.start_frame && f <= c.end_frame) {
          ++covered;
          break;
        }
    CHECK(static_cast<double>(covered) / 13.0 >= 0.8);
  }
  SUBCASE("no supra-threshold frames yields zero clusters, valid result") {
    const auto ens = noise_ensemble(60, n_frames, 51);
    DecodingCurve obs;
    for (std::size_t f = 0; f < n_frames; ++f) {
      obs.frame_times.push_back(static_cast<double>(f) * 0.08);
      obs.accuracy.push_back(1.0 / 3.0);  // dead center of the null
    }
    const auto result = cluster_permutation(obs, ens, 0.05, 200, 3);
    CHECK(result.clusters.empty());
    CHECK(result.pointwise_p.size() == n_frames);
  }
  SUBCASE("identical seeds give identical cluster boundaries") {
    const auto ens = noise_ensemble(60, n_frames, 77);
    DecodingCurve obs;
    Rng rng(78);
    for (std::size_t f = 0; f < n_frames; ++f) {
      obs.frame_times.push_back(static_cast<double>(f) * 0.08);
      obs.accuracy.push_back(1.0 / 3.0 + (f > 20 && f < 30 ? 0.12 : 0.0) +
                             rng.normal(0.0, 0.01));
    }
    const auto a = cluster_permutation(obs, ens, 0.05, 300, 13);
    const auto b = cluster_permutation(obs, ens, 0.05, 300, 13);
    REQUIRE(a.clusters.size() == b.clusters.size());
    for (std::size_t i = 0; i < a.clusters.size(); ++i) {
      CHECK(a.clusters[i].start_frame == b.clusters[i].start_frame);
      CHECK(a.clusters[i].end_frame == b.clusters[i].end_frame);
      CHECK(a.clusters[i].p == b.clusters[i].p);
    }
  }
}

TEST_CASE("assemble_features validates alignment") {
  EpochSet epochs;
  epochs.trials.resize(4);
  epochs.data.assign(4 * kNumChannels * epochs.n_samples, 0.0);
  Rng rng(3);
  for (auto& v : epochs.data) v = rng.normal();
  const auto t = tfr(epochs);
  const auto sw = band_power(t, kSwBandLo, kSwBandHi);
  const auto sp = band_power(t, kSpindleBandLo, kSpindleBandHi);

  SUBCASE("misaligned label count is an error") {
    const std::vector<int> labels = {0, 1};
    CHECK_THROWS_AS(assemble_features(epochs, sw, sp, labels, {"A", "B"}), DataError);
  }
  SUBCASE("aligned inputs produce a tensor with matched frames") {
    const std::vector<int> labels = {0, 1, 0, 1};
    const auto tensor = assemble_features(epochs, sw, sp, labels, {"A", "B"});
    CHECK(tensor.n_trials == 4);
    CHECK(tensor.n_frames() == t.n_frames());
  }
}
