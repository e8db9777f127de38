#pragma once

// Typicality lengths, absolute-convergence sums and decay fits for layer
// potentials.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "estimate.hpp"
#include "lattice.hpp"
#include "potentials.hpp"
#include "stats.hpp"

namespace layergibbs {

enum class Direction { plus, minus };

inline std::string to_string(Direction d) { return d == Direction::plus ? "plus" : "minus"; }

/// Smallest n >= 1 such that every running average of k >= n spins
/// starting at i (rightwards for plus, leftwards for minus) is at least
/// alpha * 8/9 (strictly above it when `strict`). The fill must be +1.
inline int ell(int i, const LayerConfig& xi, double alpha, Direction dir, bool strict = false) {
  if (alpha < 1.0 || alpha >= 9.0 / 8.0) throw std::invalid_argument("ell: alpha must lie in [1, 9/8)");
  if (xi.fill() != 1) throw std::invalid_argument("ell: infinite under a minus fill");
  const double thr = alpha * 8.0 / 9.0;
  const int step = dir == Direction::plus ? 1 : -1;
  const auto& w = xi.window();
  // beyond the window only plus spins are added and the average increases
  const int reach = std::max(0, dir == Direction::plus ? w.k - i + 1 : i - w.j + 1);
  const int limit = reach + static_cast<int>(std::ceil(2.0 * reach / (1.0 - thr))) + 2;
  long sum = 0;
  int last_fail = 0;
  for (int k = 1; k <= limit; ++k) {
    sum += xi(i + step * (k - 1));
    const double avg = static_cast<double>(sum) / k;
    const bool ok = strict ? avg > thr : avg >= thr;
    if (!ok) last_fail = k;
  }
  return last_fail + 1;
}

struct EllProfile {
  double alpha = 1.0;
  Direction direction = Direction::plus;
  bool strict = false;
  std::map<int, int> values;

  int at(int i) const {
    auto it = values.find(i);
    if (it == values.end()) throw std::out_of_range("site outside the ell profile");
    return it->second;
  }
};

inline EllProfile ell_profile(const LayerConfig& xi, const LayerInterval& sites, double alpha, Direction dir,
                              bool strict = false) {
  EllProfile p{alpha, dir, strict, {}};
  for (int i = sites.j; i <= sites.k; ++i) p.values[i] = ell(i, xi, alpha, dir, strict);
  return p;
}

struct OmegaUWitness {
  bool member = false;
  bool strict = false;
  EllProfile plus;
  EllProfile minus;
};

/// Membership in the good set on a window. Under a plus fill every length
/// is finite, so the profiles carry the information.
inline OmegaUWitness omega_U_member(const LayerConfig& xi, const LayerInterval& sites, bool strict = false) {
  OmegaUWitness w;
  w.strict = strict;
  w.member = xi.fill() == 1;
  if (!w.member) return w;
  w.plus = ell_profile(xi, sites, 1.0, Direction::plus, strict);
  w.minus = ell_profile(xi, sites, 1.0, Direction::minus, strict);
  return w;
}

/// |{j >= i : ell(j) >= |j - i|}| over the sites of the profile.
inline int tata_count(int i, const EllProfile& p) {
  int c = 0;
  for (const auto& [j, l] : p.values)
    if (j >= i && l >= j - i) ++c;
  return c;
}

// ---- decay curves and fits

struct DecayPoint {
  int length = 0;
  double value = 0.0;  // |U|
  double error = 0.0;
};

struct DecayFit {
  double c = 0.0;
  double lambda = 0.0;
  stats::Interval lambda_ci;
  stats::Interval log_c_ci;
  std::vector<DecayPoint> used;

  bool positive() const { return lambda_ci.lo > 0.0; }
};

class DecayUnresolvable : public std::runtime_error {
 public:
  DecayUnresolvable() : std::runtime_error("decay faster than resolvable") {}
};

/// Points |U([k-L, k])| for every table entry with right endpoint k.
inline std::vector<DecayPoint> decay_curve(const PotentialTable& t, int k) {
  std::vector<DecayPoint> out;
  for (const auto& [a, e] : t.entries)
    if (a.k == k && a.j < k) out.push_back({a.length(), std::abs(e.value), e.error});
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.length < y.length; });
  return out;
}

struct DecayFitOptions {
  int min_length = 0;             // fit lengths strictly above this
  int max_length = 1 << 30;
  double noise_floor = 1e-13;     // absolute floor below which values are not resolved
  double sigma_floor = 2.0;       // and values within this many errors of zero
  int min_points = 4;
  int bootstrap = 2000;
  std::uint64_t seed = 7;
};

/// Least-squares fit of ln|U| = ln C - lambda L with a pairs bootstrap CI.
inline DecayFit decay_fit(const std::vector<DecayPoint>& curve, const DecayFitOptions& o = {}) {
  DecayFit f;
  std::vector<double> x, y, ye;
  for (const auto& p : curve) {
    if (p.length <= o.min_length || p.length > o.max_length) continue;
    if (!(p.value > o.noise_floor) || p.value <= o.sigma_floor * p.error) continue;
    f.used.push_back(p);
    x.push_back(p.length);
    y.push_back(std::log(p.value));
    ye.push_back(p.error / p.value);
  }
  int distinct = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (i == 0 || x[i] != x[i - 1]) ++distinct;
  if (distinct < o.min_points) throw DecayUnresolvable();
  const auto lf = stats::least_squares(x, y);
  f.lambda = -lf.slope;
  f.c = std::exp(lf.intercept);
  const bool noisy = std::any_of(ye.begin(), ye.end(), [](double v) { return v > 0.0; });
  const auto ci = stats::bootstrap_slope_ci(x, y, noisy ? ye : std::vector<double>{}, o.bootstrap, o.seed);
  f.lambda_ci = {-ci.hi, -ci.lo};
  const double xm = stats::mean(x);
  f.log_c_ci = {lf.intercept - 2.0 * lf.slope_error * xm - 2.0 * lf.residual_rms,
                lf.intercept + 2.0 * lf.slope_error * xm + 2.0 * lf.residual_rms};
  return f;
}

/// Fit restricted to lengths beyond ell^-_k of the profile.
inline DecayFit decay_fit(const PotentialTable& t, int k, const EllProfile& minus_profile, DecayFitOptions o = {}) {
  if (minus_profile.direction != Direction::minus) throw std::invalid_argument("decay_fit needs the minus profile");
  o.min_length = std::max(o.min_length, minus_profile.at(k));
  return decay_fit(decay_curve(t, k), o);
}

struct ConvergenceSum {
  double partial = 0.0;
  double tail = 0.0;
  bool tail_bounded = false;
  double total() const { return partial + tail; }
};

/// sum_{j >= i} sum_{m >= j - i} |U(L_{j,m})|, i.e. all intervals containing
/// i, up to length `cutoff`; beyond it (L+1) C e^{-lambda L} summed in closed form.
inline ConvergenceSum abs_convergence_sum(int i, const PotentialTable& t, int cutoff,
                                          const std::optional<DecayFit>& fit) {
  ConvergenceSum s;
  for (const auto& [a, e] : t.entries)
    if (a.contains(i) && a.length() <= cutoff) s.partial += std::abs(e.value);
  if (fit && fit->lambda > 0.0) {
    const double q = std::exp(-fit->lambda);
    const double c = cutoff;
    s.tail = fit->c * std::pow(q, c + 1) * ((c + 2) - (c + 1) * q) / ((1 - q) * (1 - q));
    s.tail_bounded = true;
  } else {
    s.tail = std::numeric_limits<double>::infinity();
  }
  return s;
}

struct HopeViolation {
  int j = 0;
  int m = 0;
  double value = 0.0;
  double bound = 0.0;
};

/// Every (j,m) where |U([j-m, j])| exceeds C1 (m <= ell_j) or
/// C2 e^{-lambda m} (m > ell_j); ell from the minus profile.
inline std::vector<HopeViolation> check_hope_bound(const PotentialTable& t, const EllProfile& minus_profile,
                                                   double c1, double c2, double lambda) {
  std::vector<HopeViolation> out;
  for (const auto& [a, e] : t.entries) {
    auto it = minus_profile.values.find(a.k);
    if (it == minus_profile.values.end()) continue;
    const int m = a.length();
    const double bound = m <= it->second ? c1 : c2 * std::exp(-lambda * m);
    if (std::abs(e.value) > bound) out.push_back({a.k, m, e.value, bound});
  }
  return out;
}

// ---- constrained covariances

struct CovarianceDecay {
  std::vector<Estimate> cov;  // cov[i-1] = cov(X(0,1); X(i,1)) under mu^xi
  double rate = 0.0;
  double prefactor = 0.0;
  int ell = 0;                // envelope 2 C e^{-rate i} holds for i > ell
  bool resolved = false;
};

/// Covariances of X(0,1) and X(i,1), i = 1..i_max, with the layer frozen to
/// xi, plus an exponential envelope fitted on the resolved values.
template <KernelEngine E>
CovarianceDecay constrained_cov_decay(const LayerConfig& xi, int i_max, const E& engine) {
  const int n = engine.half_width();
  if (i_max > n) throw std::invalid_argument("constrained_cov_decay: i_max exceeds the box");
  const auto c = LayerConstraint::frozen(xi.restricted({-n, n}, xi.fill()));
  CovarianceDecay d;
  const Observable x0 = Observable::spin({0, 1});
  for (int i = 1; i <= i_max; ++i) {
    const Observable xi1 = Observable::spin({i, 1});
    const Estimate e01 = engine.expectation(c, x0 * xi1);
    const Estimate e0 = engine.expectation(c, x0);
    const Estimate e1 = engine.expectation(c, xi1);
    Estimate cv = e01;
    cv.value = e01.value - e0.value * e1.value;
    cv.error = std::sqrt(e01.error * e01.error + std::pow(e1.value * e0.error, 2) + std::pow(e0.value * e1.error, 2));
    d.cov.push_back(cv);
  }
  std::vector<DecayPoint> pts;
  for (int i = 1; i <= i_max; ++i) pts.push_back({i, std::abs(d.cov[i - 1].value), d.cov[i - 1].error});
  try {
    DecayFitOptions o;
    o.min_points = 3;
    o.bootstrap = 200;
    const auto f = decay_fit(pts, o);
    d.rate = f.lambda;
    d.prefactor = f.c;
    d.resolved = true;
    d.ell = 0;
    for (const auto& p : pts)
      if (p.value > 2.0 * f.c * std::exp(-f.lambda * p.length) + 3.0 * p.error) d.ell = p.length;
  } catch (const DecayUnresolvable&) {
    d.resolved = false;
  }
  return d;
}

}  // namespace layergibbs
