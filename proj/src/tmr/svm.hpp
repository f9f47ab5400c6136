#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tmr {

// Soft-margin maximum-margin classifier with an RBF kernel
// K(x, y) = exp(-gamma ||x - y||^2), trained by sequential minimal
// optimization on the dual.
struct SvmBinaryModel {
  std::vector<std::vector<double>> support_x;
  std::vector<double> coef;  // alpha_i * y_i per support vector
  double bias = 0.0;
  double gamma = 1.0;
  double c_param = 1.0;
  double dual_objective = 0.0;
  double kkt_residual = 0.0;

  double decision(std::span<const double> x) const;
};

// y must be +/-1. Throws DataError("single class") when only one label is
// present and NumericError when SMO fails to reach the KKT tolerance within
// the pass cap.
SvmBinaryModel train_svm_binary(const std::vector<std::vector<double>>& x,
                                const std::vector<int>& y, double c_param,
                                double gamma, double tol = 1e-3,
                                std::size_t max_passes = 100000);

// One-vs-one multiclass wrapper; prediction by majority vote with ties broken
// by the summed decision values, then by class order.
struct SvmModel {
  std::vector<int> classes;
  std::vector<std::pair<int, int>> pairs;
  std::vector<SvmBinaryModel> machines;

  int predict(std::span<const double> x) const;
  // Decision value per machine (positive = first class of the pair).
  std::vector<double> decisions(std::span<const double> x) const;
};

SvmModel train_svm(const std::vector<std::vector<double>>& x,
                   const std::vector<int>& y, double c_param, double gamma,
                   double tol = 1e-3);

// gamma = 1 / (n_features * mean feature variance), the scale heuristic.
double gamma_scale(const std::vector<std::vector<double>>& x);

}  // namespace tmr
