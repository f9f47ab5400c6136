#include "tmr/stats.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "tmr/error.hpp"
#include "tmr/util.hpp"

namespace tmr {

double t_sf_two_sided(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  if (t == 0.0) return 1.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

double f_sf(double f, double df1, double df2) {
  if (!std::isfinite(f)) return 0.0;
  if (f <= 0.0) return 1.0;
  boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw ConfigError("anova_oneway: need >= 2 groups");
  std::size_t n_total = 0;
  std::vector<double> all;
  for (const auto& g : groups) {
    if (g.empty()) throw ConfigError("anova_oneway: empty group");
    n_total += g.size();
    all.insert(all.end(), g.begin(), g.end());
  }
  const double grand = mean(all);
  double ss_between = 0.0, ss_within = 0.0;
  for (const auto& g : groups) {
    const double gm = mean(g);
    ss_between += static_cast<double>(g.size()) * (gm - grand) * (gm - grand);
    for (double v : g) ss_within += (v - gm) * (v - gm);
  }
  const double df1 = static_cast<double>(groups.size()) - 1.0;
  const double df2 = static_cast<double>(n_total) - static_cast<double>(groups.size());
  if (df2 <= 0.0) throw ConfigError("anova_oneway: no residual degrees of freedom");
  AnovaResult out;
  out.ss_error = ss_within;
  out.df_error = df2;
  const double msw = ss_within / df2;
  double f;
  if (msw > 0.0)
    f = (ss_between / df1) / msw;
  else
    f = ss_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  out.rows.push_back({"group", ss_between, df1, f, f_sf(f, df1, df2)});
  return out;
}

AnovaResult anova_twoway(const std::vector<double>& values,
                         const std::vector<int>& factor_a,
                         const std::vector<int>& factor_b) {
  const std::size_t n = values.size();
  if (factor_a.size() != n || factor_b.size() != n)
    throw ConfigError("anova_twoway: factor length mismatch");
  if (n == 0) throw ConfigError("anova_twoway: empty data");
  const int a = *std::max_element(factor_a.begin(), factor_a.end()) + 1;
  const int b = *std::max_element(factor_b.begin(), factor_b.end()) + 1;
  if (a < 2 || b < 2) throw ConfigError("anova_twoway: need >= 2 levels per factor");

  // Cell bookkeeping; the design must be balanced.
  std::vector<std::vector<double>> cells(static_cast<std::size_t>(a * b));
  for (std::size_t i = 0; i < n; ++i) {
    if (factor_a[i] < 0 || factor_b[i] < 0)
      throw ConfigError("anova_twoway: negative level index");
    cells[static_cast<std::size_t>(factor_a[i] * b + factor_b[i])].push_back(values[i]);
  }
  const std::size_t per_cell = cells[0].size();
  for (const auto& c : cells)
    if (c.size() != per_cell)
      throw ConfigError("anova_twoway: unbalanced design (only balanced supported)");
  if (per_cell < 2) throw ConfigError("anova_twoway: need >= 2 observations per cell");

  const double grand = mean(values);
  std::vector<double> mean_a(static_cast<std::size_t>(a), 0.0);
  std::vector<double> mean_b(static_cast<std::size_t>(b), 0.0);
  std::vector<double> mean_cell(cells.size(), 0.0);
  for (int i = 0; i < a; ++i) {
    std::vector<double> rows;
    for (int j = 0; j < b; ++j) {
      const auto& c = cells[static_cast<std::size_t>(i * b + j)];
      mean_cell[static_cast<std::size_t>(i * b + j)] = mean(c);
      rows.insert(rows.end(), c.begin(), c.end());
    }
    mean_a[static_cast<std::size_t>(i)] = mean(rows);
  }
  for (int j = 0; j < b; ++j) {
    std::vector<double> cols;
    for (int i = 0; i < a; ++i) {
      const auto& c = cells[static_cast<std::size_t>(i * b + j)];
      cols.insert(cols.end(), c.begin(), c.end());
    }
    mean_b[static_cast<std::size_t>(j)] = mean(cols);
  }

  double ss_a = 0.0, ss_b = 0.0, ss_ab = 0.0, ss_e = 0.0;
  for (int i = 0; i < a; ++i)
    ss_a += static_cast<double>(b) * static_cast<double>(per_cell) *
            (mean_a[i] - grand) * (mean_a[i] - grand);
  for (int j = 0; j < b; ++j)
    ss_b += static_cast<double>(a) * static_cast<double>(per_cell) *
            (mean_b[j] - grand) * (mean_b[j] - grand);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) {
      const double d = mean_cell[static_cast<std::size_t>(i * b + j)] - mean_a[i] -
                       mean_b[j] + grand;
      ss_ab += static_cast<double>(per_cell) * d * d;
      for (double v : cells[static_cast<std::size_t>(i * b + j)]) {
        const double e = v - mean_cell[static_cast<std::size_t>(i * b + j)];
        ss_e += e * e;
      }
    }

  const double df_a = a - 1.0;
  const double df_b = b - 1.0;
  const double df_ab = df_a * df_b;
  const double df_e = static_cast<double>(n) - static_cast<double>(a) * b;
  const double mse = ss_e / df_e;
  auto make_row = [&](const char* name, double ss, double df) {
    double f;
    if (mse > 0.0)
      f = (ss / df) / mse;
    else
      f = ss > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return AnovaRow{name, ss, df, f, f_sf(f, df, df_e)};
  };
  AnovaResult out;
  out.rows.push_back(make_row("A", ss_a, df_a));
  out.rows.push_back(make_row("B", ss_b, df_b));
  out.rows.push_back(make_row("AxB", ss_ab, df_ab));
  out.ss_error = ss_e;
  out.df_error = df_e;
  return out;
}

namespace {

TTestResult one_sample_from(double m, double var, double n_obs, double df) {
  TTestResult r;
  r.df = df;
  const double se = std::sqrt(var / n_obs);
  if (se == 0.0) {
    r.zero_variance = true;
    if (m == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = m > 0 ? std::numeric_limits<double>::infinity()
                  : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = m / se;
  r.p = t_sf_two_sided(r.t, df);
  return r;
}

}  // namespace

TTestResult ttest_paired(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("ttest_paired: length mismatch");
  if (x.size() < 2) throw ConfigError("ttest_paired: need n >= 2");
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  const double n = static_cast<double>(d.size());
  return one_sample_from(mean(d), sample_variance(d), n, n - 1.0);
}

TTestResult ttest_two_sample(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2) throw ConfigError("ttest_two_sample: need n >= 2");
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  const double df = n1 + n2 - 2.0;
  const double pooled =
      ((n1 - 1.0) * sample_variance(x) + (n2 - 1.0) * sample_variance(y)) / df;
  TTestResult r;
  r.df = df;
  const double se = std::sqrt(pooled * (1.0 / n1 + 1.0 / n2));
  const double m = mean(x) - mean(y);
  if (se == 0.0) {
    r.zero_variance = true;
    if (m == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = m > 0 ? std::numeric_limits<double>::infinity()
                  : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = m / se;
  r.p = t_sf_two_sided(r.t, df);
  return r;
}

std::vector<double> bonferroni(const std::vector<double>& pvec, int m) {
  std::vector<double> out(pvec.size());
  for (std::size_t i = 0; i < pvec.size(); ++i)
    out[i] = std::min(1.0, pvec[i] * static_cast<double>(m));
  return out;
}

std::vector<double> bh_fdr(const std::vector<double>& pvec) {
  const std::size_t m = pvec.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvec[a] < pvec[b]; });
  std::vector<double> adj(m, 0.0);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const double q = pvec[order[k]] * static_cast<double>(m) / static_cast<double>(k + 1);
    running = std::min(running, q);
    adj[order[k]] = running;
  }
  return adj;
}

CorrResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("pearson: length mismatch");
  if (x.size() < 3) throw ConfigError("pearson: need n >= 3");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  CorrResult r;
  if (sxx == 0.0 || syy == 0.0) {
    r.undefined = true;
    return r;
  }
  r.coefficient = sxy / std::sqrt(sxx * syy);
  // Guard |r| slightly below 1 so the t transform stays finite.
  const double rr = std::clamp(r.coefficient, -1.0, 1.0);
  if (std::fabs(rr) >= 1.0) {
    r.p = 0.0;
    return r;
  }
  const double t = rr * std::sqrt((n - 2.0) / (1.0 - rr * rr));
  r.p = t_sf_two_sided(t, n - 2.0);
  return r;
}

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

CorrResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("spearman: length mismatch");
  if (x.size() < 3) throw ConfigError("spearman: need n >= 3");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

}  // namespace tmr
