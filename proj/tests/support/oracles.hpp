#pragma once

// Independent reference implementations used to cross-check the library.
// These deliberately take different computational routes than the production
// code (raw-moment sums instead of centered two-pass, full DP instead of the
// banded scan, projected gradient instead of SMO).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace oracle {

// Full dynamic-programming Levenshtein distance.
inline std::size_t levenshtein(const std::string& a, const std::string& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Pearson correlation via raw-moment summation formulas.
inline double pearson_raw(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double num = n * sxy - sx * sy;
  const double den = std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  return num / den;
}

// Circular-linear correlation through the raw-sum Pearson route.
inline double rho_cl_raw(std::span<const double> phases, std::span<const double> amps) {
  std::vector<double> s(phases.size()), c(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    s[i] = std::sin(phases[i]);
    c[i] = std::cos(phases[i]);
  }
  const double rsx = pearson_raw(s, amps);
  const double rcx = pearson_raw(c, amps);
  const double rsc = pearson_raw(s, c);
  const double num = rsx * rsx + rcx * rcx - 2.0 * rsx * rcx * rsc;
  const double rho2 = std::max(0.0, num / (1.0 - rsc * rsc));
  return std::min(1.0, std::sqrt(rho2));
}

// Dual objective W(alpha) = sum(alpha) - 1/2 sum alpha_i alpha_j y_i y_j K_ij.
inline double svm_dual_objective(const std::vector<double>& alpha,
                                 const std::vector<int>& y,
                                 const std::vector<std::vector<double>>& x,
                                 double gamma) {
  const std::size_t n = alpha.size();
  auto kernel = [&](std::size_t i, std::size_t j) {
    double d2 = 0;
    for (std::size_t f = 0; f < x[i].size(); ++f) {
      const double d = x[i][f] - x[j][f];
      d2 += d * d;
    }
    return std::exp(-gamma * d2);
  };
  double obj = 0;
  for (double a : alpha) obj += a;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * kernel(i, j);
  return obj;
}

// Maximizes the SVM dual by projected gradient ascent. The feasible set is
// {0 <= a <= C, y.a = 0}; the exact Euclidean projection is clip(a - lambda*y)
// with lambda found by bisection (the constraint value is monotone in
// lambda). Slow, but an algorithm family entirely unlike SMO; adequate for
// <= 12 points.
inline double svm_dual_optimum(const std::vector<std::vector<double>>& x,
                               const std::vector<int>& y, double c_param,
                               double gamma, int iters = 200000) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> k(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = 0;
      for (std::size_t f = 0; f < x[i].size(); ++f) {
        const double d = x[i][f] - x[j][f];
        d2 += d * d;
      }
      k[i][j] = std::exp(-gamma * d2);
    }

  auto project = [&](std::vector<double>& a) {
    auto constraint = [&](double lambda) {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        v += y[i] * std::clamp(a[i] - lambda * y[i], 0.0, c_param);
      return v;  // monotone non-increasing in lambda
    };
    double lo = -(c_param + 1.0), hi = c_param + 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, -std::fabs(a[i]) - c_param);
      hi = std::max(hi, std::fabs(a[i]) + c_param);
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = (lo + hi) / 2.0;
      if (constraint(mid) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    const double lambda = (lo + hi) / 2.0;
    for (std::size_t i = 0; i < n; ++i)
      a[i] = std::clamp(a[i] - lambda * y[i], 0.0, c_param);
  };

  std::vector<double> alpha(n, 0.0), grad(n);
  const double step = 0.02;
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        grad[i] -= alpha[j] * y[i] * y[j] * k[i][j];
    }
    for (std::size_t i = 0; i < n; ++i) alpha[i] += step * grad[i];
    project(alpha);
  }
  return svm_dual_objective(alpha, y, x, gamma);
}

}  // namespace oracle
