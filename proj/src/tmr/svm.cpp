#include "tmr/svm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tmr/error.hpp"
#include "tmr/util.hpp"

namespace tmr {

namespace {

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

class SmoSolver {
 public:
  SmoSolver(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
            double c_param, double gamma, double tol)
      : x_(x), y_(y), n_(x.size()), c_(c_param), gamma_(gamma), tol_(tol) {
    kernel_.resize(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j < n_; ++j) {
        const double k = rbf(x_[i], x_[j], gamma_);
        kernel_[i * n_ + j] = k;
        kernel_[j * n_ + i] = k;
      }
    alpha_.assign(n_, 0.0);
    // f(x_i) = 0 initially, so E_i = -y_i.
    error_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) error_[i] = -static_cast<double>(y_[i]);
  }

  void solve(std::size_t max_iters) {
    // Maximal-violating-pair selection on the Keerthi gap: the pair
    // (argmin E over I_up, argmax E over I_low) is optimized until
    // b_low - b_up <= 2 tol.
    for (std::size_t iter = 0; iter <= max_iters; ++iter) {
      std::ptrdiff_t i_up = -1, i_low = -1;
      double b_up = 0.0, b_low = 0.0;
      for (std::size_t t = 0; t < n_; ++t) {
        const bool in_up = (y_[t] == 1 && alpha_[t] < c_) ||
                           (y_[t] == -1 && alpha_[t] > 0.0);
        const bool in_low = (y_[t] == 1 && alpha_[t] > 0.0) ||
                            (y_[t] == -1 && alpha_[t] < c_);
        if (in_up && (i_up < 0 || error_[t] < b_up)) {
          i_up = static_cast<std::ptrdiff_t>(t);
          b_up = error_[t];
        }
        if (in_low && (i_low < 0 || error_[t] > b_low)) {
          i_low = static_cast<std::ptrdiff_t>(t);
          b_low = error_[t];
        }
      }
      if (i_up < 0 || i_low < 0 || b_low - b_up <= 2.0 * tol_) {
        // Center the bias between the active bounds before reporting.
        if (i_up >= 0 && i_low >= 0) shift_bias(-(b_up + b_low) / 2.0);
        return;
      }
      if (iter == max_iters) break;
      if (!take_step(static_cast<std::size_t>(i_up), static_cast<std::size_t>(i_low))) {
        // Degenerate pair; try the most violating index against any partner.
        bool moved = false;
        for (std::size_t j = 0; j < n_ && !moved; ++j)
          moved = take_step(static_cast<std::size_t>(i_up), j);
        for (std::size_t j = 0; j < n_ && !moved; ++j)
          moved = take_step(j, static_cast<std::size_t>(i_low));
        if (!moved) {
          shift_bias(-(b_up + b_low) / 2.0);
          if (kkt_residual() > tol_)
            throw NumericError("SMO stalled: KKT residual " +
                               std::to_string(kkt_residual()));
          return;
        }
      }
    }
    throw NumericError("SMO did not converge: KKT residual " +
                       std::to_string(kkt_residual()));
  }

  double kkt_residual() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double margin = static_cast<double>(y_[i]) * (error_[i] + y_[i]);  // y_i f(x_i)
      if (alpha_[i] <= 0.0)
        worst = std::max(worst, 1.0 - margin);
      else if (alpha_[i] >= c_)
        worst = std::max(worst, margin - 1.0);
      else
        worst = std::max(worst, std::fabs(margin - 1.0));
    }
    return worst;
  }

  double dual_objective() const {
    double obj = 0.0;
    for (std::size_t i = 0; i < n_; ++i) obj += alpha_[i];
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] == 0.0) continue;
      for (std::size_t j = 0; j < n_; ++j) {
        if (alpha_[j] == 0.0) continue;
        obj -= 0.5 * alpha_[i] * alpha_[j] * y_[i] * y_[j] * kernel_[i * n_ + j];
      }
    }
    return obj;
  }

  const std::vector<double>& alpha() const { return alpha_; }
  double bias() const { return bias_; }

 private:
  void shift_bias(double delta) {
    bias_ += delta;
    for (double& e : error_) e += delta;
  }

  bool take_step(std::size_t i, std::size_t j) {
    if (i == j) return false;
    const double ai_old = alpha_[i], aj_old = alpha_[j];
    const double yi = y_[i], yj = y_[j];
    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, aj_old - ai_old);
      hi = std::min(c_, c_ + aj_old - ai_old);
    } else {
      lo = std::max(0.0, ai_old + aj_old - c_);
      hi = std::min(c_, ai_old + aj_old);
    }
    if (lo >= hi) return false;

    const double kii = kernel_[i * n_ + i];
    const double kjj = kernel_[j * n_ + j];
    const double kij = kernel_[i * n_ + j];
    const double eta = kii + kjj - 2.0 * kij;
    double aj_new;
    if (eta > 1e-12) {
      aj_new = aj_old + yj * (error_[i] - error_[j]) / eta;
      aj_new = std::clamp(aj_new, lo, hi);
    } else {
      // RBF eta vanishes only for (near-)identical points: the objective is
      // linear along the feasible direction, so move to the boundary the
      // slope points at.
      const double slope = yj * (error_[i] - error_[j]);
      if (slope > 1e-12)
        aj_new = hi;
      else if (slope < -1e-12)
        aj_new = lo;
      else
        return false;
    }
    if (std::fabs(aj_new - aj_old) < 1e-12 * (aj_new + aj_old + 1e-12)) return false;
    const double ai_new = ai_old + yi * yj * (aj_old - aj_new);

    // Bias update keeps a KKT-consistent interior point exact.
    const double b1 = bias_ - error_[i] - yi * (ai_new - ai_old) * kii -
                      yj * (aj_new - aj_old) * kij;
    const double b2 = bias_ - error_[j] - yi * (ai_new - ai_old) * kij -
                      yj * (aj_new - aj_old) * kjj;
    double new_bias;
    if (ai_new > 0.0 && ai_new < c_)
      new_bias = b1;
    else if (aj_new > 0.0 && aj_new < c_)
      new_bias = b2;
    else
      new_bias = (b1 + b2) / 2.0;

    const double di = yi * (ai_new - ai_old);
    const double dj = yj * (aj_new - aj_old);
    for (std::size_t k = 0; k < n_; ++k)
      error_[k] += di * kernel_[i * n_ + k] + dj * kernel_[j * n_ + k] +
                   (new_bias - bias_);
    alpha_[i] = ai_new;
    alpha_[j] = aj_new;
    bias_ = new_bias;
    return true;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<int>& y_;
  std::size_t n_;
  double c_, gamma_, tol_;
  std::vector<double> kernel_;
  std::vector<double> alpha_;
  std::vector<double> error_;  // E_i = f(x_i) - y_i
  double bias_ = 0.0;
};

}  // namespace

double SvmBinaryModel::decision(std::span<const double> x) const {
  double f = bias;
  for (std::size_t i = 0; i < support_x.size(); ++i)
    f += coef[i] * rbf(support_x[i], x, gamma);
  return f;
}

SvmBinaryModel train_svm_binary(const std::vector<std::vector<double>>& x,
                                const std::vector<int>& y, double c_param,
                                double gamma, double tol, std::size_t max_passes) {
  if (x.size() != y.size() || x.empty())
    throw DataError("train_svm_binary: bad input sizes");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else throw DataError("train_svm_binary: labels must be +/-1");
  }
  if (!has_pos || !has_neg) throw DataError("train_svm_binary: single class");
  for (const auto& row : x)
    for (double v : row)
      if (!std::isfinite(v)) throw DataError("train_svm_binary: non-finite feature");

  SmoSolver solver(x, y, c_param, gamma, tol);
  solver.solve(max_passes);

  SvmBinaryModel model;
  model.gamma = gamma;
  model.c_param = c_param;
  model.dual_objective = solver.dual_objective();
  model.kkt_residual = solver.kkt_residual();
  // f(x) = sum coef_i K(sv_i, x) + b with b chosen so that decision equals the
  // solver's internal f: solver tracked f - via errors with bias included.
  model.bias = solver.bias();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (solver.alpha()[i] > 0.0) {
      model.support_x.push_back(x[i]);
      model.coef.push_back(solver.alpha()[i] * y[i]);
    }
  }
  return model;
}

int SvmModel::predict(std::span<const double> x) const {
  std::vector<int> votes(classes.size(), 0);
  std::vector<double> score(classes.size(), 0.0);
  for (std::size_t m = 0; m < machines.size(); ++m) {
    const double d = machines[m].decision(x);
    const auto [a, b] = pairs[m];
    if (d >= 0.0) {
      votes[a]++;
      score[a] += d;
      score[b] -= d;
    } else {
      votes[b]++;
      score[b] -= d;
      score[a] += d;
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < classes.size(); ++k) {
    if (votes[k] > votes[best] ||
        (votes[k] == votes[best] && score[k] > score[best] + 1e-12))
      best = k;
  }
  return classes[best];
}

std::vector<double> SvmModel::decisions(std::span<const double> x) const {
  std::vector<double> out;
  out.reserve(machines.size());
  for (const auto& m : machines) out.push_back(m.decision(x));
  return out;
}

SvmModel train_svm(const std::vector<std::vector<double>>& x,
                   const std::vector<int>& y, double c_param, double gamma,
                   double tol) {
  std::set<int> class_set(y.begin(), y.end());
  if (class_set.size() < 2) throw DataError("train_svm: single class");
  SvmModel model;
  model.classes.assign(class_set.begin(), class_set.end());
  for (std::size_t a = 0; a < model.classes.size(); ++a) {
    for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
      std::vector<std::vector<double>> xs;
      std::vector<int> ys;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i] == model.classes[a]) {
          xs.push_back(x[i]);
          ys.push_back(1);
        } else if (y[i] == model.classes[b]) {
          xs.push_back(x[i]);
          ys.push_back(-1);
        }
      }
      model.pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
      model.machines.push_back(train_svm_binary(xs, ys, c_param, gamma, tol));
    }
  }
  return model;
}

double gamma_scale(const std::vector<std::vector<double>>& x) {
  if (x.empty() || x[0].empty()) return 1.0;
  const std::size_t n_feat = x[0].size();
  std::vector<double> col(x.size());
  double var_sum = 0.0;
  for (std::size_t f = 0; f < n_feat; ++f) {
    for (std::size_t i = 0; i < x.size(); ++i) col[i] = x[i][f];
    var_sum += sample_variance(col);
  }
  const double mean_var = var_sum / static_cast<double>(n_feat);
  if (mean_var <= 0.0) return 1.0;
  return 1.0 / (static_cast<double>(n_feat) * mean_var);
}

}  // namespace tmr
