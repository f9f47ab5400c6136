#pragma once

#include <span>
#include <string>
#include <vector>

namespace tmr {

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool zero_variance = false;  // infinite-t / degenerate cases are flagged
};

struct AnovaRow {
  std::string factor;
  double ss = 0.0;
  double df = 0.0;
  double f = 0.0;
  double p = 1.0;
};

struct AnovaResult {
  std::vector<AnovaRow> rows;  // one-way: "group"; two-way: "A","B","AxB"
  double ss_error = 0.0;
  double df_error = 0.0;
};

struct CorrResult {
  double coefficient = 0.0;
  double p = 1.0;
  bool undefined = false;  // zero variance in either input
};

// Between-subjects one-way ANOVA over >= 2 groups of >= 1 observation.
AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

// Balanced two-way between-subjects ANOVA with interaction. factor_a/factor_b
// give 0-based level indices per observation; every (a, b) cell must hold the
// same number (>= 2) of observations, otherwise a ConfigError is thrown.
AnovaResult anova_twoway(const std::vector<double>& values,
                         const std::vector<int>& factor_a,
                         const std::vector<int>& factor_b);

TTestResult ttest_paired(std::span<const double> x, std::span<const double> y);
TTestResult ttest_two_sample(std::span<const double> x, std::span<const double> y);

// p' = min(1, m * p).
std::vector<double> bonferroni(const std::vector<double>& pvec, int m);

// Benjamini-Hochberg adjusted p-values: p'_(i) = min_{j >= i} (m / j) p_(j),
// monotone non-decreasing in raw-p order.
std::vector<double> bh_fdr(const std::vector<double>& pvec);

CorrResult pearson(std::span<const double> x, std::span<const double> y);
// Average ranks for ties; p via the t approximation with df = n - 2.
CorrResult spearman(std::span<const double> x, std::span<const double> y);

std::vector<double> average_ranks(std::span<const double> v);

// Survival functions used for the p-values above.
double t_sf_two_sided(double t, double df);
double f_sf(double f, double df1, double df2);

}  // namespace tmr
