// Copyright 2026 The Memoprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Self-contained statistics: rank tests, a paired t-test, correlation and
// descriptive summaries, with the distribution functions they need.

#ifndef MEMOPROBE_STATS_HPP_
#define MEMOPROBE_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "memoprobe/error.hpp"

namespace memoprobe::stats {

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  std::string method;  // exact | normal_approx | chi_square_approx | student_t
  std::vector<std::size_t> n_per_group;
};

// ---------------------------------------------------------------------------
// Distribution functions

inline double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Upper tail of the standard normal, accurate far into the tail.
inline double NormalSf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

namespace detail {

inline constexpr int kMaxIterations = 10000;
inline constexpr double kEpsilon = 1e-16;
inline constexpr double kTiny = 1e-300;

// Series for P(a, x), valid for x < a + 1.
inline double GammaPSeries(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < kMaxIterations; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEpsilon) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction (modified Lentz) for Q(a, x), valid for x >= a + 1.
inline double GammaQContinuedFraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Continued fraction for the incomplete beta function (Lentz).
inline double BetaContinuedFraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) break;
  }
  return h;
}

}  // namespace detail

// Regularized upper incomplete gamma Q(a, x).
inline double RegularizedGammaQ(double a, double x) {
  if (x <= 0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::GammaPSeries(a, x);
  return detail::GammaQContinuedFraction(a, x);
}

// Regularized incomplete beta I_x(a, b).
inline double RegularizedBeta(double x, double a, double b) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::BetaContinuedFraction(a, b, x) / a;
  return 1.0 - front * detail::BetaContinuedFraction(b, a, 1.0 - x) / b;
}

inline double ChiSquareSf(double x, double dof) { return RegularizedGammaQ(dof / 2.0, x / 2.0); }

inline double StudentTCdf(double t, double dof) {
  const double tail = 0.5 * RegularizedBeta(dof / (dof + t * t), dof / 2.0, 0.5);
  return t > 0 ? 1.0 - tail : tail;
}

// Two-sided tail probability P(|T| >= |t|).
inline double StudentTTwoSided(double t, double dof) {
  return std::min(1.0, RegularizedBeta(dof / (dof + t * t), dof / 2.0, 0.5));
}

// ---------------------------------------------------------------------------
// Ranks

// Mid-ranks (1-based) of the pooled values; ties share the average rank.
inline std::vector<double> MidRanks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Sum over tie groups of t^3 - t.
inline double TieTerm(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double term = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    term += t * t * t - t;
    i = j + 1;
  }
  return term;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U

inline constexpr std::size_t kExactMannWhitneyLimit = 9;

namespace detail {

// Exact two-sided p: the fraction of the C(n, n1) ways to label n1 of the
// pooled mid-ranks as group x whose rank sum is at least as far from its mean
// as the observed one. Doubled ranks keep every sum an integer.
inline double ExactMannWhitneyP(const std::vector<long long>& doubled_ranks, std::size_t n1,
                                long long observed_doubled_sum) {
  const std::size_t n = doubled_ranks.size();
  const long long total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0LL);
  // count[k][s]: labelings choosing k items with doubled sum s.
  std::vector<std::vector<double>> count(n1 + 1, std::vector<double>(total + 1, 0.0));
  count[0][0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const long long r = doubled_ranks[i];
    for (std::size_t k = std::min(n1, i + 1); k >= 1; --k) {
      for (long long s = total; s >= r; --s) count[k][s] += count[k - 1][s - r];
    }
  }
  // Compare 2 * n * sum against n1 * total to avoid fractional means.
  const long long center = static_cast<long long>(n1) * total;
  const long long observed_dev = std::llabs(static_cast<long long>(n) * observed_doubled_sum - center);
  double extreme = 0, all = 0;
  for (long long s = 0; s <= total; ++s) {
    const double c = count[n1][s];
    if (c == 0) continue;
    all += c;
    if (std::llabs(static_cast<long long>(n) * s - center) >= observed_dev) extreme += c;
  }
  return std::min(1.0, extreme / all);
}

}  // namespace detail

// Two-sided Mann-Whitney U test. statistic = min(U_x, U_y). Exact
// permutation p when both groups have at most 9 values, otherwise the normal
// approximation with tie and continuity corrections.
inline TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "mann_whitney_u needs two non-empty groups");
  }
  const std::size_t n1 = x.size();
  const std::size_t n2 = y.size();
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = MidRanks(pooled);
  double r1 = 0;
  for (std::size_t i = 0; i < n1; ++i) r1 += ranks[i];
  const double u1 = r1 - static_cast<double>(n1) * (n1 + 1) / 2.0;
  const double u2 = static_cast<double>(n1) * n2 - u1;

  TestResult result;
  result.statistic = std::min(u1, u2);
  result.n_per_group = {n1, n2};
  if (n1 <= kExactMannWhitneyLimit && n2 <= kExactMannWhitneyLimit) {
    std::vector<long long> doubled(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) doubled[i] = std::llround(2.0 * ranks[i]);
    result.p_value = detail::ExactMannWhitneyP(doubled, n1, std::llround(2.0 * r1));
    result.method = "exact";
    return result;
  }
  const double n = static_cast<double>(n1 + n2);
  const double mean = static_cast<double>(n1) * n2 / 2.0;
  const double variance =
      static_cast<double>(n1) * n2 / 12.0 * ((n + 1.0) - TieTerm(pooled) / (n * (n - 1.0)));
  result.method = "normal_approx";
  if (variance <= 0) {
    result.p_value = 1.0;
    return result;
  }
  const double z = std::max(0.0, std::fabs(u1 - mean) - 0.5) / std::sqrt(variance);
  result.p_value = std::min(1.0, 2.0 * NormalSf(z));
  return result;
}

// ---------------------------------------------------------------------------
// Multiple comparisons

inline std::vector<double> bonferroni(std::span<const double> p_values) {
  std::vector<double> out;
  out.reserve(p_values.size());
  const double k = static_cast<double>(p_values.size());
  for (double p : p_values) {
    if (!(p >= 0 && p <= 1)) throw Error(ErrorCode::kInvalidArgument, "p-value outside [0, 1]");
    out.push_back(std::min(1.0, p * k));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kruskal-Wallis

inline TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error(ErrorCode::kInvalidArgument, "kruskal_wallis needs >= 2 groups");
  std::vector<double> pooled;
  TestResult result;
  for (const auto& g : groups) {
    if (g.empty()) throw Error(ErrorCode::kInvalidArgument, "kruskal_wallis group is empty");
    pooled.insert(pooled.end(), g.begin(), g.end());
    result.n_per_group.push_back(g.size());
  }
  const double n = static_cast<double>(pooled.size());
  const auto ranks = MidRanks(pooled);
  double sum_term = 0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double r = 0;
    for (std::size_t i = 0; i < g.size(); ++i) r += ranks[offset + i];
    sum_term += r * r / static_cast<double>(g.size());
    offset += g.size();
  }
  double h = 12.0 / (n * (n + 1.0)) * sum_term - 3.0 * (n + 1.0);
  const double correction = 1.0 - TieTerm(pooled) / (n * n * n - n);
  result.method = "chi_square_approx";
  if (correction <= 0) {
    result.statistic = 0;
    result.p_value = 1;
    return result;
  }
  h /= correction;
  if (h < 0 && h > -1e-9) h = 0;
  result.statistic = h;
  result.p_value = std::clamp(ChiSquareSf(h, static_cast<double>(groups.size() - 1)), 0.0, 1.0);
  return result;
}

// ---------------------------------------------------------------------------
// Paired t-test

inline TestResult paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "paired_t_test length mismatch");
  if (x.size() < 2) throw Error(ErrorCode::kInvalidArgument, "paired_t_test needs >= 2 pairs");
  const std::size_t n = x.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = x[i] - y[i];
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
  double ss = 0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0)) {
    throw Error(ErrorCode::kDegenerate,
                "paired differences have zero variance; the pairing is degenerate");
  }
  TestResult result;
  result.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  result.p_value = StudentTTwoSided(result.statistic, static_cast<double>(n - 1));
  result.method = "student_t";
  result.n_per_group = {n, n};
  return result;
}

// ---------------------------------------------------------------------------
// Correlation and summaries

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "pearson length mismatch");
  if (x.size() < 2) throw Error(ErrorCode::kInvalidArgument, "pearson needs >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) {
    throw Error(ErrorCode::kDegenerate, "pearson is undefined for constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct Summary {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
  std::size_t n = 0;
};

// Linear interpolation between closest ranks (Hyndman-Fan type 7).
inline double Quantile(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline Summary descriptive(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::kInvalidArgument, "descriptive needs data");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  s.n = sorted.size();
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = Quantile(sorted, 0.25);
  s.median = Quantile(sorted, 0.5);
  s.q3 = Quantile(sorted, 0.75);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.n);
  return s;
}

inline double Median(std::span<const double> xs) { return descriptive(xs).median; }

}  // namespace memoprobe::stats

#endif  // MEMOPROBE_STATS_HPP_
