#include "tmr/decode.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include "tmr/error.hpp"
#include "tmr/rng.hpp"
#include "tmr/stats.hpp"
#include "tmr/svm.hpp"
#include "tmr/util.hpp"

namespace tmr {

const char* feature_block_code(FeatureBlock b) {
  switch (b) {
    case FeatureBlock::SwPower: return "sw_power";
    case FeatureBlock::SpindlePower: return "spindle_power";
    case FeatureBlock::Coupling: return "coupling";
    case FeatureBlock::All: return "all";
  }
  return "?";
}

std::size_t FeatureTensor::block_width(FeatureBlock b) {
  switch (b) {
    case FeatureBlock::SwPower: return kNumChannels;
    case FeatureBlock::SpindlePower: return kNumChannels;
    case FeatureBlock::Coupling: return kNumChannels * kNumChannels;
    case FeatureBlock::All: return 2 * kNumChannels + kNumChannels * kNumChannels;
  }
  return 0;
}

FeatureTensor assemble_features(const EpochSet& epochs, const BandPowerSeries& sw,
                                const BandPowerSeries& spindle,
                                std::span<const int> labels,
                                const std::vector<std::string>& class_names) {
  const std::size_t n = epochs.n_trials();
  if (sw.n_trials != n || spindle.n_trials != n || labels.size() != n)
    throw DataError("assemble_features: misaligned trial counts");
  if (sw.frame_times != spindle.frame_times)
    throw DataError("assemble_features: band series frame mismatch");

  FeatureTensor tensor;
  tensor.n_trials = n;
  tensor.frame_times = sw.frame_times;
  tensor.labels.assign(labels.begin(), labels.end());
  tensor.class_names = class_names;
  const std::size_t n_frames = tensor.n_frames();

  tensor.sw_power.resize(n * kNumChannels * n_frames);
  tensor.sp_power.resize(n * kNumChannels * n_frames);
  for (std::size_t t = 0; t < n; ++t)
    for (int c = 0; c < kNumChannels; ++c)
      for (std::size_t f = 0; f < n_frames; ++f) {
        tensor.sw_power[(t * kNumChannels + c) * n_frames + f] = sw.series(t, c)[f];
        tensor.sp_power[(t * kNumChannels + c) * n_frames + f] =
            spindle.series(t, c)[f];
      }

  // Phase (slow band) and spindle envelope sampled at frame centers.
  tensor.phase.resize(n * kNumChannels * n_frames);
  tensor.amp.resize(n * kNumChannels * n_frames);
  std::vector<std::size_t> centers(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double t_rel = tensor.frame_times[f] - epochs.t_start_s;
    centers[f] = std::min(epochs.n_samples - 1,
                          static_cast<std::size_t>(std::llround(t_rel * epochs.fs)));
  }
  for (int c = 0; c < kNumChannels; ++c) {
    const auto ph = analytic(epochs, c, 1.0, 4.0);
    const auto am = analytic(epochs, c, kSpindleBandLo, kSpindleBandHi);
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t f = 0; f < n_frames; ++f) {
        tensor.phase[(t * kNumChannels + c) * n_frames + f] =
            ph.trial_phase(t)[centers[f]];
        tensor.amp[(t * kNumChannels + c) * n_frames + f] = am.trial_amp(t)[centers[f]];
      }
  }
  return tensor;
}

FeatureTensor::Materialized FeatureTensor::materialize(
    FeatureBlock block, std::size_t frame, std::span<const std::size_t> train_idx,
    std::span<const std::size_t> eval_idx) const {
  const std::size_t width = block_width(block);
  Materialized out;
  out.train.assign(train_idx.size(), std::vector<double>(width, 0.0));
  out.eval.assign(eval_idx.size(), std::vector<double>(width, 0.0));

  std::size_t col = 0;
  auto fill_power = [&](const std::vector<double>& buf) {
    for (int c = 0; c < kNumChannels; ++c, ++col) {
      for (std::size_t r = 0; r < train_idx.size(); ++r)
        out.train[r][col] = value(buf, train_idx[r], c, frame);
      for (std::size_t r = 0; r < eval_idx.size(); ++r)
        out.eval[r][col] = value(buf, eval_idx[r], c, frame);
    }
  };
  if (block == FeatureBlock::SwPower || block == FeatureBlock::All)
    fill_power(sw_power);
  if (block == FeatureBlock::SpindlePower || block == FeatureBlock::All)
    fill_power(sp_power);

  if (block == FeatureBlock::Coupling || block == FeatureBlock::All) {
    for (int p = 0; p < kNumChannels; ++p) {
      for (int q = 0; q < kNumChannels; ++q, ++col) {
        // Amplitude-weighted circular mean phase on the training split only.
        double sx = 0.0, cx = 0.0;
        for (std::size_t r = 0; r < train_idx.size(); ++r) {
          const double a = value(amp, train_idx[r], q, frame);
          const double ph = value(phase, train_idx[r], p, frame);
          sx += a * std::sin(ph);
          cx += a * std::cos(ph);
        }
        const double mu = std::atan2(sx, cx);
        std::vector<double> train_a(train_idx.size());
        for (std::size_t r = 0; r < train_idx.size(); ++r)
          train_a[r] = value(amp, train_idx[r], q, frame);
        const double ma = mean(train_a);
        const double sa = std::sqrt(sample_variance(train_a));
        auto project = [&](std::size_t trial) {
          const double az = sa > 0.0 ? (value(amp, trial, q, frame) - ma) / sa : 0.0;
          return az * std::cos(value(phase, trial, p, frame) - mu);
        };
        for (std::size_t r = 0; r < train_idx.size(); ++r)
          out.train[r][col] = project(train_idx[r]);
        for (std::size_t r = 0; r < eval_idx.size(); ++r)
          out.eval[r][col] = project(eval_idx[r]);
      }
    }
  }

  // Per-feature standardization with training statistics; zero-variance
  // features are dropped (zeroed) and reported.
  std::vector<double> colvals(train_idx.size());
  for (std::size_t f = 0; f < width; ++f) {
    for (std::size_t r = 0; r < train_idx.size(); ++r) colvals[r] = out.train[r][f];
    const double m = mean(colvals);
    const double sd = std::sqrt(sample_variance(colvals));
    if (sd <= 0.0) {
      out.dropped_features.push_back(f);
      for (auto& row : out.train) row[f] = 0.0;
      for (auto& row : out.eval) row[f] = 0.0;
      continue;
    }
    for (auto& row : out.train) row[f] = (row[f] - m) / sd;
    for (auto& row : out.eval) row[f] = (row[f] - m) / sd;
  }
  return out;
}

std::vector<std::vector<int>> cv_partition(std::span<const int> labels,
                                           int n_classes, const CvConfig& cv) {
  std::vector<std::vector<int>> fold_of(static_cast<std::size_t>(cv.repetitions));
  for (int rep = 0; rep < cv.repetitions; ++rep) {
    auto& folds = fold_of[static_cast<std::size_t>(rep)];
    folds.assign(labels.size(), -1);
    Rng rng(derive_seed(cv.seed, "cv-rep", static_cast<std::uint64_t>(rep)));
    for (int cls = 0; cls < n_classes; ++cls) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == cls) idx.push_back(i);
      if (idx.size() < static_cast<std::size_t>(cv.folds))
        throw DataError("cv_partition: class " + std::to_string(cls) +
                        " has fewer trials than folds");
      rng.shuffle(idx);
      for (std::size_t k = 0; k < idx.size(); ++k)
        folds[idx[k]] = static_cast<int>(k % static_cast<std::size_t>(cv.folds));
    }
  }
  return fold_of;
}

namespace {

// Shared inner loop for observed and surrogate decoding. permute_train, when
// non-null, rewrites the training labels of each (rep, fold).
DecodingCurve decode_impl(
    const FeatureTensor& tensor, FeatureBlock block, const CvConfig& cv,
    const DecodeOptions& opt,
    const std::function<void(int rep, int fold, std::vector<int>& train_labels)>&
        permute_train) {
  if (tensor.n_classes() < 2 || tensor.n_trials < 2)
    throw DataError("decode: need >= 2 classes");
  const auto partition = cv_partition(tensor.labels,
                                      static_cast<int>(tensor.n_classes()), cv);
  const std::size_t n_frames = tensor.n_frames();
  const std::size_t cells = static_cast<std::size_t>(cv.repetitions) *
                            static_cast<std::size_t>(cv.folds);

  // Precompute fold memberships once.
  struct FoldSplit {
    std::vector<std::size_t> train, test;
    std::vector<int> train_labels;
  };
  std::vector<FoldSplit> splits(cells);
  for (int rep = 0; rep < cv.repetitions; ++rep) {
    for (int fold = 0; fold < cv.folds; ++fold) {
      auto& split = splits[static_cast<std::size_t>(rep * cv.folds + fold)];
      for (std::size_t i = 0; i < tensor.n_trials; ++i) {
        if (partition[static_cast<std::size_t>(rep)][i] == fold)
          split.test.push_back(i);
        else
          split.train.push_back(i);
      }
      split.train_labels.reserve(split.train.size());
      for (std::size_t i : split.train) split.train_labels.push_back(tensor.labels[i]);
      if (permute_train) permute_train(rep, fold, split.train_labels);
    }
  }

  std::vector<double> acc_cell(n_frames * cells, 0.0);
  std::vector<double> auc_cell(n_frames * cells, 0.0);

  parallel_for(n_frames, opt.n_threads, [&](std::size_t frame) {
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const auto& split = splits[cell];
      const auto mat = tensor.materialize(block, frame, split.train, split.test);
      const double gamma = opt.gamma > 0.0 ? opt.gamma : gamma_scale(mat.train);
      const auto model = train_svm(mat.train, split.train_labels, opt.c_param, gamma);

      std::size_t correct = 0;
      std::vector<int> predicted(split.test.size());
      std::vector<std::vector<double>> decisions(split.test.size());
      for (std::size_t r = 0; r < split.test.size(); ++r) {
        predicted[r] = model.predict(mat.eval[r]);
        decisions[r] = model.decisions(mat.eval[r]);
        if (predicted[r] == tensor.labels[split.test[r]]) ++correct;
      }
      acc_cell[frame * cells + cell] =
          split.test.empty() ? 0.0
                             : static_cast<double>(correct) /
                                   static_cast<double>(split.test.size());

      // Unweighted mean of pairwise one-vs-one AUCs from decision values.
      double auc_sum = 0.0;
      std::size_t auc_n = 0;
      for (std::size_t m = 0; m < model.pairs.size(); ++m) {
        const int ca = model.classes[static_cast<std::size_t>(model.pairs[m].first)];
        const int cb = model.classes[static_cast<std::size_t>(model.pairs[m].second)];
        std::vector<double> scores;
        std::vector<int> bin;
        for (std::size_t r = 0; r < split.test.size(); ++r) {
          const int truth = tensor.labels[split.test[r]];
          if (truth != ca && truth != cb) continue;
          scores.push_back(decisions[r][m]);
          bin.push_back(truth == ca ? 1 : 0);
        }
        const bool has_both =
            std::count(bin.begin(), bin.end(), 1) > 0 &&
            std::count(bin.begin(), bin.end(), 0) > 0;
        if (!has_both) continue;
        auc_sum += auc_from_scores(scores, bin);
        ++auc_n;
      }
      auc_cell[frame * cells + cell] = auc_n > 0 ? auc_sum / static_cast<double>(auc_n) : 0.5;
    }
  });

  DecodingCurve curve;
  curve.frame_times = tensor.frame_times;
  curve.chance = 1.0 / static_cast<double>(tensor.n_classes());
  curve.accuracy.resize(n_frames);
  curve.accuracy_se.resize(n_frames);
  curve.auc.resize(n_frames);
  curve.auc_se.resize(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::span<const double> acc{acc_cell.data() + f * cells, cells};
    const std::span<const double> auc{auc_cell.data() + f * cells, cells};
    curve.accuracy[f] = mean(acc);
    curve.accuracy_se[f] =
        std::sqrt(sample_variance(acc) / static_cast<double>(cells));
    curve.auc[f] = mean(auc);
    curve.auc_se[f] = std::sqrt(sample_variance(auc) / static_cast<double>(cells));
  }
  return curve;
}

}  // namespace

DecodingCurve crossval_decode(const FeatureTensor& tensor, FeatureBlock block,
                              const CvConfig& cv, const DecodeOptions& opt) {
  return decode_impl(tensor, block, cv, opt, nullptr);
}

SurrogateEnsemble surrogate_decode(const FeatureTensor& tensor, FeatureBlock block,
                                   const CvConfig& cv, int n_shuffles,
                                   std::uint64_t seed, const DecodeOptions& opt) {
  SurrogateEnsemble ensemble;
  ensemble.curves.resize(static_cast<std::size_t>(n_shuffles));
  // One frame-parallel pass per shuffle (the inner loop already threads).
  for (int s = 0; s < n_shuffles; ++s) {
    auto permute = [&](int rep, int fold, std::vector<int>& train_labels) {
      Rng rng(derive_seed(seed, "surrogate", static_cast<std::uint64_t>(s),
                          static_cast<std::uint64_t>(rep * 1000 + fold)));
      rng.shuffle(train_labels);
    };
    ensemble.curves[static_cast<std::size_t>(s)] =
        decode_impl(tensor, block, cv, opt, permute);
  }
  return ensemble;
}

double auc_from_scores(std::span<const double> scores, std::span<const int> labels) {
  const auto ranks = average_ranks(scores);
  double rank_sum = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      rank_sum += ranks[i];
      ++n_pos;
    } else {
      ++n_neg;
    }
  }
  if (n_pos == 0 || n_neg == 0) return 0.5;
  const double u = rank_sum - static_cast<double>(n_pos) *
                                  (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

ClusterResult cluster_permutation(const DecodingCurve& observed,
                                  const SurrogateEnsemble& ensemble, double alpha,
                                  int n_perm, std::uint64_t seed) {
  const std::size_t n_ens = ensemble.curves.size();
  if (n_ens == 0) throw DataError("cluster_permutation: empty ensemble");
  if (static_cast<double>(n_ens) < 1.0 / alpha)
    throw ConfigError("cluster_permutation: ensemble too small for alpha");
  const std::size_t n_frames = observed.accuracy.size();

  // Ensemble values per frame, frame-major.
  std::vector<double> ens(n_frames * n_ens);
  for (std::size_t e = 0; e < n_ens; ++e) {
    if (ensemble.curves[e].accuracy.size() != n_frames)
      throw DataError("cluster_permutation: curve length mismatch");
    for (std::size_t f = 0; f < n_frames; ++f)
      ens[f * n_ens + e] = ensemble.curves[e].accuracy[f];
  }

  struct RawCluster {
    std::size_t start, end;
    double stat;
  };
  // Pointwise two-sided p from ensemble rank, z from ensemble moments,
  // clusters as contiguous sub-threshold runs.
  auto find_clusters = [&](std::span<const double> curve, std::ptrdiff_t skip,
                           std::vector<double>* pointwise_out) {
    std::vector<RawCluster> clusters;
    std::vector<double> pvals(n_frames, 1.0), zvals(n_frames, 0.0);
    for (std::size_t f = 0; f < n_frames; ++f) {
      const double obs = curve[f];
      std::size_t n_ge = 0, n_le = 0, n_used = 0;
      double sum = 0.0, sumsq = 0.0;
      const double* col = ens.data() + f * n_ens;
      for (std::size_t e = 0; e < n_ens; ++e) {
        if (skip >= 0 && e == static_cast<std::size_t>(skip)) continue;
        const double v = col[e];
        ++n_used;
        if (v >= obs) ++n_ge;
        if (v <= obs) ++n_le;
        sum += v;
        sumsq += v * v;
      }
      const double n_d = static_cast<double>(n_used);
      const double m = sum / n_d;
      const double var = std::max(0.0, (sumsq - n_d * m * m) / (n_d - 1.0));
      const double sd = std::sqrt(var);
      zvals[f] = sd > 0.0 ? (obs - m) / sd : 0.0;
      const double p_hi = (static_cast<double>(n_ge) + 1.0) / (n_d + 1.0);
      const double p_lo = (static_cast<double>(n_le) + 1.0) / (n_d + 1.0);
      pvals[f] = std::min(1.0, 2.0 * std::min(p_hi, p_lo));
    }
    if (pointwise_out) *pointwise_out = pvals;
    std::size_t f = 0;
    while (f < n_frames) {
      if (pvals[f] >= alpha) {
        ++f;
        continue;
      }
      std::size_t g = f;
      double stat = 0.0;
      while (g < n_frames && pvals[g] < alpha) stat += zvals[g++];
      clusters.push_back({f, g - 1, stat});
      f = g;
    }
    return clusters;
  };

  ClusterResult result;
  result.alpha = alpha;
  result.n_permutations = n_perm;
  const auto observed_clusters =
      find_clusters(observed.accuracy, -1, &result.pointwise_p);

  // Null distribution of the maximal |cluster sum|: one ensemble member at a
  // time plays pseudo-observed against the rest.
  std::vector<double> null_max(static_cast<std::size_t>(n_perm), 0.0);
  Rng rng(derive_seed(seed, "cluster-perm"));
  std::vector<double> pseudo(n_frames);
  for (int t = 0; t < n_perm; ++t) {
    const std::size_t pick = static_cast<std::size_t>(rng.uniform_int(n_ens));
    for (std::size_t f = 0; f < n_frames; ++f) pseudo[f] = ens[f * n_ens + pick];
    const auto clusters =
        find_clusters(pseudo, static_cast<std::ptrdiff_t>(pick), nullptr);
    double best = 0.0;
    for (const auto& c : clusters) best = std::max(best, std::fabs(c.stat));
    null_max[static_cast<std::size_t>(t)] = best;
  }

  for (const auto& c : observed_clusters) {
    std::size_t n_ge = 0;
    for (double v : null_max)
      if (v >= std::fabs(c.stat)) ++n_ge;
    Cluster out;
    out.start_frame = c.start;
    out.end_frame = c.end;
    out.stat = c.stat;
    out.p = (static_cast<double>(n_ge) + 1.0) / (static_cast<double>(n_perm) + 1.0);
    result.clusters.push_back(out);
  }
  return result;
}

void write_decoding_curve_csv(const std::string& path, const DecodingCurve& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  out << "frame_time,accuracy,accuracy_se,auc,auc_se\n";
  char buf[160];
  for (std::size_t f = 0; f < curve.frame_times.size(); ++f) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g",
                  curve.frame_times[f], curve.accuracy[f], curve.accuracy_se[f],
                  curve.auc[f], curve.auc_se[f]);
    out << buf << '\n';
  }
}

void write_cluster_result_json(const std::string& path, const ClusterResult& result) {
  nlohmann::json j;
  j["alpha"] = result.alpha;
  j["n_permutations"] = result.n_permutations;
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : result.clusters)
    clusters.push_back({{"start_frame", c.start_frame},
                        {"end_frame", c.end_frame},
                        {"stat", c.stat},
                        {"p", c.p}});
  j["clusters"] = std::move(clusters);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace tmr
