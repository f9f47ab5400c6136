#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tmr/erpac.hpp"
#include "tmr/spectral.hpp"

namespace tmr {

enum class FeatureBlock { SwPower, SpindlePower, Coupling, All };

const char* feature_block_code(FeatureBlock b);

// Per-trial ingredients for the three decodable feature families, sampled at
// the spectrogram frame centers: band powers per channel, plus the phase-band
// phase and spindle-band envelope that the coupling projections are built
// from. Coupling features are materialized per training split (the preferred
// phase and the amplitude z-scoring must never see test trials).
struct FeatureTensor {
  std::size_t n_trials = 0;
  std::vector<double> frame_times;
  std::vector<double> sw_power;  // [trial][channel][frame]
  std::vector<double> sp_power;  // [trial][channel][frame]
  std::vector<double> phase;     // [trial][channel][frame]
  std::vector<double> amp;       // [trial][channel][frame]
  std::vector<int> labels;       // class index per trial
  std::vector<std::string> class_names;

  std::size_t n_frames() const { return frame_times.size(); }
  std::size_t n_classes() const { return class_names.size(); }
  static std::size_t block_width(FeatureBlock b);

  double value(const std::vector<double>& buf, std::size_t trial, std::size_t ch,
               std::size_t frame) const {
    return buf[(trial * kNumChannels + ch) * n_frames() + frame];
  }

  // Feature matrices for one frame and block. Training-split statistics
  // (z-scoring and, for coupling, the amplitude-weighted circular mean phase
  // mu_pq) are estimated on train_idx only and applied to both outputs.
  // Zero-variance features are flagged in dropped_features and emitted as 0.
  struct Materialized {
    std::vector<std::vector<double>> train;
    std::vector<std::vector<double>> eval;
    std::vector<std::size_t> dropped_features;
  };
  Materialized materialize(FeatureBlock block, std::size_t frame,
                           std::span<const std::size_t> train_idx,
                           std::span<const std::size_t> eval_idx) const;
};

// Builds the tensor from per-trial band-power series and the epochs they came
// from (phase 1-4 Hz, amplitude 12-16 Hz). Trial counts must agree.
FeatureTensor assemble_features(const EpochSet& epochs, const BandPowerSeries& sw,
                                const BandPowerSeries& spindle,
                                std::span<const int> labels,
                                const std::vector<std::string>& class_names);

struct CvConfig {
  int folds = 5;
  int repetitions = 2;
  std::uint64_t seed = 0;
};

// Stratified fold assignment: per repetition, fold id per trial.
std::vector<std::vector<int>> cv_partition(std::span<const int> labels, int n_classes,
                                           const CvConfig& cv);

struct DecodingCurve {
  std::vector<double> frame_times;
  std::vector<double> accuracy, accuracy_se;
  std::vector<double> auc, auc_se;
  double chance = 0.0;
};

struct DecodeOptions {
  double c_param = 1.0;
  double gamma = 0.0;  // <= 0: 1/(n_features * variance) per training split
  int n_threads = 0;   // 0 = hardware
};

// Per frame: standardize on the training split, train one-vs-one RBF
// machines, score the held-out fold; accuracy and pairwise AUC averaged
// across folds and repetitions (SE across the fold x repetition values).
DecodingCurve crossval_decode(const FeatureTensor& tensor, FeatureBlock block,
                              const CvConfig& cv, const DecodeOptions& opt = {});

struct SurrogateEnsemble {
  std::vector<DecodingCurve> curves;
};

// Label-shuffled null: per shuffle, the training labels inside each fold are
// permuted, test labels stay intact.
SurrogateEnsemble surrogate_decode(const FeatureTensor& tensor, FeatureBlock block,
                                   const CvConfig& cv, int n_shuffles,
                                   std::uint64_t seed,
                                   const DecodeOptions& opt = {});

struct Cluster {
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;  // inclusive
  double stat = 0.0;          // sum of (obs - mean)/sd over member frames
  double p = 1.0;
};

struct ClusterResult {
  std::vector<Cluster> clusters;
  double alpha = 0.05;
  int n_permutations = 1000;
  std::vector<double> pointwise_p;
};

// Two-sided cluster-based permutation test of the observed accuracy curve
// against the surrogate ensemble; the null redraws one ensemble member as
// pseudo-observed against the rest and takes the maximal |cluster sum|.
ClusterResult cluster_permutation(const DecodingCurve& observed,
                                  const SurrogateEnsemble& ensemble,
                                  double alpha = 0.05, int n_perm = 1000,
                                  std::uint64_t seed = 0);

// Rank-based AUC of scores for binary labels (1 = positive), ties at 0.5.
double auc_from_scores(std::span<const double> scores, std::span<const int> labels);

void write_decoding_curve_csv(const std::string& path, const DecodingCurve& curve);
void write_cluster_result_json(const std::string& path, const ClusterResult& result);

}  // namespace tmr
