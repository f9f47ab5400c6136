#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "tmr/decode.hpp"
#include "tmr/error.hpp"
#include "tmr/rng.hpp"
#include "tmr/svm.hpp"

using namespace tmr;

namespace {

// Two Gaussian blobs separated by `separation` standard deviations.
void gaussian_blobs(std::size_t n_per_class, double separation, std::uint64_t seed,
                    std::vector<std::vector<double>>* x, std::vector<int>* y) {
  Rng rng(seed);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    x->push_back({rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)});
    y->push_back(1);
  }
  for (std::size_t i = 0; i < n_per_class; ++i) {
    x->push_back({rng.normal(separation, 1.0), rng.normal(0.0, 1.0)});
    y->push_back(-1);
  }
}

}  // namespace

TEST_CASE("separable blobs: training accuracy 1.0") {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  gaussian_blobs(50, 6.0, 3, &x, &y);
  const auto model = train_svm_binary(x, y, 1.0, gamma_scale(x));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if ((model.decision(x[i]) >= 0 ? 1 : -1) == y[i]) ++correct;
  CHECK(correct == x.size());
  CHECK(model.kkt_residual <= 1e-3);
}

TEST_CASE("single class is an error") {
  const std::vector<std::vector<double>> x = {{0.0}, {1.0}};
  const std::vector<int> y = {1, 1};
  CHECK_THROWS_WITH_AS(train_svm_binary(x, y, 1.0, 1.0),
                       doctest::Contains("single class"), DataError);
}

TEST_CASE("contradictory duplicates with small C: soft margin tolerates errors") {
  // Two identical points with opposite labels plus two separated anchors.
  const std::vector<std::vector<double>> x = {{0.0, 0.0}, {0.0, 0.0}, {2.0, 0.0},
                                              {-2.0, 0.0}};
  const std::vector<int> y = {1, -1, 1, -1};
  const double c_param = 0.5, gamma = 0.5;
  const auto model = train_svm_binary(x, y, c_param, gamma, 1e-4);
  int errors = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if ((model.decision(x[i]) >= 0 ? 1 : -1) != y[i]) ++errors;
  CHECK(errors >= 1);  // the duplicated pair cannot both be right
  // Dual objective agrees with the projected-gradient oracle.
  const double oracle_obj = oracle::svm_dual_optimum(x, y, c_param, gamma);
  CHECK(model.dual_objective ==
        doctest::Approx(oracle_obj).epsilon(1e-4).scale(std::max(1.0, oracle_obj)));
}

TEST_CASE("SMO dual objective matches the oracle on random small instances") {
  Rng rng(17);
  for (int instance = 0; instance < 20; ++instance) {
    const std::size_t n = 4 + rng.uniform_int(9);  // 4..12 points
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back({rng.normal(), rng.normal()});
      const int label = rng.uniform() < 0.5 ? 1 : -1;
      y.push_back(label);
      has_pos |= label == 1;
      has_neg |= label == -1;
    }
    if (!has_pos || !has_neg) {
      y[0] = -y[0];
    }
    const double c_param = 0.5 + rng.uniform() * 2.0;
    const double gamma = 0.3 + rng.uniform();
    const auto model = train_svm_binary(x, y, c_param, gamma, 1e-5);
    const double oracle_obj = oracle::svm_dual_optimum(x, y, c_param, gamma);
    CHECK(std::fabs(model.dual_objective - oracle_obj) <=
          1e-4 * std::max(1.0, std::fabs(oracle_obj)));
  }
}

TEST_CASE("multiclass one-vs-one majority vote") {
  Rng rng(8);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  const double centers[3][2] = {{0, 0}, {8, 0}, {0, 8}};
  for (int cls = 0; cls < 3; ++cls)
    for (int i = 0; i < 30; ++i) {
      x.push_back({centers[cls][0] + rng.normal(), centers[cls][1] + rng.normal()});
      y.push_back(cls);
    }
  const auto model = train_svm(x, y, 1.0, gamma_scale(x));
  CHECK(model.machines.size() == 3);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (model.predict(x[i]) == y[i]) ++correct;
  CHECK(static_cast<double>(correct) / static_cast<double>(x.size()) >= 0.99);
}

TEST_CASE("AUC") {
  SUBCASE("perfectly separated scores give exactly 1.0") {
    const std::vector<double> scores = {-3.0, -2.0, -1.5, 1.0, 2.0, 2.5};
    const std::vector<int> labels = {0, 0, 0, 1, 1, 1};
    CHECK(auc_from_scores(scores, labels) == 1.0);
  }
  SUBCASE("ties contribute 0.5") {
    const std::vector<double> scores = {1.0, 1.0};
    const std::vector<int> labels = {0, 1};
    CHECK(auc_from_scores(scores, labels) == doctest::Approx(0.5));
  }
  SUBCASE("label-independent scores: mean AUC within [0.45, 0.55] over 50 seeds") {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(seed);
      std::vector<double> scores(60);
      std::vector<int> labels(60);
      for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.normal();
        labels[i] = i % 2 == 0 ? 1 : 0;
      }
      acc += auc_from_scores(scores, labels);
    }
    const double mean_auc = acc / 50.0;
    CHECK(mean_auc >= 0.45);
    CHECK(mean_auc <= 0.55);
  }
}
