#pragma once

// Error analysis for correlated Monte Carlo series: block means, jackknife,
// split-chain R-hat, least squares and bootstrap confidence intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace layergibbs::stats {

inline double mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  long double s = 0.0L;
  for (double v : x) s += v;
  return static_cast<double>(s / x.size());
}

inline double variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  long double s = 0.0L;
  for (double v : x) s += (v - m) * (v - m);
  return static_cast<double>(s / (x.size() - 1));
}

/// Means of `nblocks` contiguous blocks (the tail that does not fill a
/// block is dropped).
inline std::vector<double> block_means(const std::vector<double>& x, int nblocks) {
  if (nblocks < 2) throw std::invalid_argument("block_means: need at least 2 blocks");
  const std::size_t len = x.size() / nblocks;
  if (len == 0) throw std::invalid_argument("block_means: series shorter than block count");
  std::vector<double> out(nblocks);
  for (int b = 0; b < nblocks; ++b) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < len; ++i) s += x[b * len + i];
    out[b] = static_cast<double>(s / len);
  }
  return out;
}

/// Standard error of the mean from block means.
inline double batch_means_error(const std::vector<double>& x, int nblocks = 32) {
  const auto bm = block_means(x, nblocks);
  return std::sqrt(variance(bm) / nblocks);
}

struct JackknifeResult {
  double value = 0.0;
  double error = 0.0;
};

/// Jackknife over blocks for a function of several means. `blocks[o][b]`
/// is the mean of observable o in block b (equal block sizes).
inline JackknifeResult jackknife(const std::vector<std::vector<double>>& blocks,
                                 const std::function<double(const std::vector<double>&)>& f) {
  if (blocks.empty()) throw std::invalid_argument("jackknife: no observables");
  const std::size_t nb = blocks[0].size();
  if (nb < 2) throw std::invalid_argument("jackknife: need at least 2 blocks");
  const std::size_t no = blocks.size();
  std::vector<double> total(no, 0.0);
  for (std::size_t o = 0; o < no; ++o) total[o] = mean(blocks[o]);
  JackknifeResult r;
  r.value = f(total);
  std::vector<double> loo(nb);
  std::vector<double> m(no);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t o = 0; o < no; ++o) m[o] = (total[o] * nb - blocks[o][b]) / (nb - 1);
    loo[b] = f(m);
  }
  const double lm = mean(loo);
  long double s = 0.0L;
  for (double v : loo) s += (v - lm) * (v - lm);
  r.error = std::sqrt(static_cast<double>(s) * (nb - 1) / nb);
  return r;
}

/// Split-chain potential scale reduction factor.
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) continue;
    halves.emplace_back(c.begin(), c.begin() + h);
    halves.emplace_back(c.begin() + h, c.begin() + 2 * h);
  }
  if (halves.size() < 2) return 1.0;
  const double n = static_cast<double>(halves[0].size());
  std::vector<double> means, vars;
  for (const auto& hh : halves) {
    means.push_back(mean(hh));
    vars.push_back(variance(hh));
  }
  const double w = mean(vars);
  const double b = n * variance(means);
  if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_error = 0.0;
  double residual_rms = 0.0;
};

/// Ordinary least squares y = intercept + slope x (optionally weighted).
inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y,
                             const std::vector<double>& w = {}) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("least_squares: need >= 2 points");
  long double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double wi = w.empty() ? 1.0L : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
    sxx += wi * x[i] * x[i];
    sxy += wi * x[i] * y[i];
  }
  const long double d = sw * sxx - sx * sx;
  if (d == 0) throw std::invalid_argument("least_squares: degenerate abscissae");
  LineFit f;
  f.slope = static_cast<double>((sw * sxy - sx * sy) / d);
  f.intercept = static_cast<double>((sy - f.slope * sx) / sw);
  long double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += (w.empty() ? 1.0L : w[i]) * r * r;
  }
  f.residual_rms = std::sqrt(static_cast<double>(rss / n));
  if (n > 2) f.slope_error = std::sqrt(static_cast<double>(rss / (n - 2) * sw / d));
  return f;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool excludes_zero() const { return lo > 0.0 || hi < 0.0; }
};

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, v.size() - 1);
  return v[i] + (pos - i) * (v[j] - v[i]);
}

/// Percentile bootstrap CI of the slope. Points are resampled in pairs;
/// when `y_err` is given each resample also perturbs y by its error.
inline Interval bootstrap_slope_ci(const std::vector<double>& x, const std::vector<double>& y,
                                   const std::vector<double>& y_err, int nboot, std::uint64_t seed,
                                   double level = 0.95) {
  const std::size_t n = x.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> slopes;
  slopes.reserve(nboot);
  std::vector<double> bx(n), by(n);
  for (int b = 0; b < nboot; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = pick(rng);
      bx[i] = x[k];
      by[i] = y[k] + (y_err.empty() ? 0.0 : y_err[k] * gauss(rng));
    }
    bool distinct = false;
    for (std::size_t i = 1; i < n; ++i) distinct |= (bx[i] != bx[0]);
    if (!distinct) continue;
    slopes.push_back(least_squares(bx, by).slope);
  }
  const double a = (1.0 - level) / 2.0;
  return {quantile(slopes, a), quantile(slopes, 1.0 - a)};
}

}  // namespace layergibbs::stats
