#pragma once

// Regular and random (Bernoulli mask) decimations of the layer and the
// uniform-decay diagnostics of their potentials.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "convergence.hpp"
#include "estimate.hpp"
#include "lattice.hpp"
#include "potentials.hpp"

namespace layergibbs {

struct DecimationScheme {
  enum class Kind { regular, random };
  Kind kind = Kind::regular;
  int b = 0;
  double p = 0.0;
  std::uint64_t mask_seed = 0;

  static DecimationScheme regular(int b) {
    DecimationScheme s{Kind::regular, b, 0.0, 0};
    s.validate();
    return s;
  }
  static DecimationScheme random(double p, std::uint64_t seed) {
    DecimationScheme s{Kind::random, 0, p, seed};
    s.validate();
    return s;
  }

  void validate() const {
    if (kind == Kind::regular && b < 2) throw std::invalid_argument("decimation step must be at least 2");
    if (kind == Kind::random && !(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("keep probability outside [0,1]");
  }

  std::string to_string() const {
    return kind == Kind::regular ? "regular:b=" + std::to_string(b) : "random:p=" + std::to_string(p);
  }
};

namespace detail {
// splitmix64 finaliser; the keep decision of a site depends on (seed, site) only
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Kept sites of the window: bZ for regular schemes, i.i.d. Bernoulli(p)
/// for random ones.
inline SiteSet make_mask(const DecimationScheme& s, const LayerInterval& window) {
  s.validate();
  SiteSet out;
  for (int i = window.j; i <= window.k; ++i) {
    if (s.kind == DecimationScheme::Kind::regular) {
      if (((i % s.b) + s.b) % s.b == 0) out.push_back(i);
    } else {
      const std::uint64_t r = detail::mix64(s.mask_seed ^ detail::mix64(static_cast<std::uint64_t>(static_cast<std::int64_t>(i))));
      const double u = static_cast<double>(r >> 11) * 0x1.0p-53;
      if (u < s.p) out.push_back(i);
    }
  }
  return out;
}

/// Exponential-weight margin 2 beta k - 4 beta sum_{i in [0,k]} n_i w_i per
/// window length k. `literal` uses w_i = 1 - xi_i; the indicator variant uses
/// w_i = [xi_i = -1]. Values are kept as integer coefficients of beta.
struct MarginReport {
  std::vector<long> literal;    // index k = 0..kmax
  std::vector<long> indicator;
  int literal_onset = -1;       // smallest k beyond which the margin stays positive (-1: never)
  int indicator_onset = -1;
  double beta = 0.0;

  double literal_value(int k) const { return beta * literal.at(k); }
  double indicator_value(int k) const { return beta * indicator.at(k); }
};

inline MarginReport mask_margin(const SiteSet& kept, const LayerConfig& xi_kept, int kmax, double beta) {
  MarginReport r;
  r.beta = beta;
  long lit = 0, ind = 0;
  auto kept_at = [&](int i) { return std::binary_search(kept.begin(), kept.end(), i); };
  for (int k = 0; k <= kmax; ++k) {
    if (kept_at(k)) {
      lit += 1 - xi_kept(k);
      ind += xi_kept(k) < 0 ? 1 : 0;
    }
    r.literal.push_back(2L * k - 4L * lit);
    r.indicator.push_back(2L * k - 4L * ind);
  }
  auto onset = [kmax](const std::vector<long>& m) {
    int last_bad = kmax;
    for (int k = kmax; k >= 1; --k) {
      if (m[k] <= 0) break;
      last_bad = k - 1;
    }
    return last_bad == kmax ? -1 : last_bad + 1;
  };
  r.literal_onset = onset(r.literal);
  r.indicator_onset = onset(r.indicator);
  return r;
}

inline MarginReport mask_margin(const DecimationScheme& s, int kmax, const LayerConfig& xi_kept, double beta) {
  return mask_margin(make_mask(s, {0, kmax}), xi_kept, kmax, beta);
}

/// Thresholds on the regular step b beyond which the all-minus margin grows
/// linearly: b > 4 for the literal weight, b > 2 for the indicator weight.
struct MarginThresholds {
  int literal_b = 4;
  int indicator_b = 2;
};

struct ScanRow {
  int length = 0;
  double worst = 0.0;  // max over the stress set of |U|
  double error = 0.0;
  std::string worst_label;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  std::optional<DecayFit> fit;
  std::string failure;  // set when the fit is unresolvable
  bool pass() const { return fit && fit->positive(); }
};

struct StressConfig {
  std::string label;
  LayerConfig xi;
};

/// Worst case over a stress set of |U(interval)| for each length, then a
/// decay fit of the worst-case curve. `potential(xi, length)` returns the
/// potential values of all intervals of that length to be considered.
inline ScanResult worst_case_scan(const std::vector<int>& lengths, const std::vector<StressConfig>& stress,
                                  const std::function<std::vector<Estimate>(const LayerConfig&, int)>& potential,
                                  DecayFitOptions fit_options = {}) {
  ScanResult r;
  for (int len : lengths) {
    ScanRow row;
    row.length = len;
    for (const auto& s : stress)
      for (const auto& e : potential(s.xi, len))
        if (std::abs(e.value) > row.worst) {
          row.worst = std::abs(e.value);
          row.error = e.error;
          row.worst_label = s.label;
        }
    r.rows.push_back(row);
  }
  std::vector<DecayPoint> pts;
  for (const auto& row : r.rows) pts.push_back({row.length, row.worst, row.error});
  try {
    r.fit = decay_fit(pts, fit_options);
  } catch (const DecayUnresolvable& e) {
    r.failure = e.what();
  }
  return r;
}

/// Decimated potentials of intervals between kept sites, scanned for
/// uniform decay. For a regular scheme each interval [c - L/2, c + L/2] is
/// placed at the centre of the box (shifted by a multiple of b); for a
/// random scheme the mask is sampled on a long window and each interval of
/// kept sites is moved, together with its mask neighbourhood, into the box.
template <ExactKernelEngine E>
ScanResult decimated_decay_scan(const DecimationScheme& s, const E& engine, const std::vector<int>& lengths,
                                const std::vector<StressConfig>& stress, int anchors = 3,
                                DecayFitOptions fit_options = {}) {
  const int n = engine.half_width();
  if (s.kind == DecimationScheme::Kind::regular) {
    const LayerPotentials<E> lp(engine, make_mask(s, {-n, n}));
    auto pot = [&](const LayerConfig& xi, int len) {
      if (len % s.b != 0) throw std::invalid_argument("decimated lengths must be multiples of b");
      return std::vector<Estimate>{lp.telescope_closed_centered({0, len}, xi, s.b)};
    };
    return worst_case_scan(lengths, stress, pot, fit_options);
  }
  // random mask: right endpoints are the first `anchors` kept sites >= 0 of
  // a window long enough to hold every requested length to their left
  int lmax = 0;
  for (int l : lengths) lmax = std::max(lmax, l);
  if (lmax > 2 * n) throw std::invalid_argument("length exceeds the box layer");
  const SiteSet mask = make_mask(s, {-lmax - 4 * n, 4 * n * (anchors + 1)});
  std::vector<int> ends;
  for (int i : mask)
    if (i >= 0 && static_cast<int>(ends.size()) < anchors) ends.push_back(i);
  // one potential family per anchor: box centred at the midpoint of each interval
  std::vector<std::vector<std::pair<int, int>>> by_len(lengths.size());
  for (int k : ends)
    for (int j : mask) {
      if (j >= k) break;
      for (std::size_t a = 0; a < lengths.size(); ++a)
        if (k - j == lengths[a]) by_len[a].emplace_back(j, k);
    }
  std::map<int, std::unique_ptr<LayerPotentials<E>>> families;  // keyed by shift
  auto family = [&](int shift) -> const LayerPotentials<E>& {
    auto it = families.find(shift);
    if (it != families.end()) return *it->second;
    SiteSet kept;
    for (int i : mask)
      if (i - shift >= -n && i - shift <= n) kept.push_back(i - shift);
    return *families.emplace(shift, std::make_unique<LayerPotentials<E>>(engine, kept)).first->second;
  };
  auto pot = [&](const LayerConfig& xi, int len) {
    std::vector<Estimate> out;
    const auto idx = std::find(lengths.begin(), lengths.end(), len) - lengths.begin();
    for (const auto& [j, k] : by_len[idx]) {
      const int shift = (j + k) >> 1;
      const auto& lp = family(shift);
      out.push_back(lp.telescope_closed({j - shift, k - shift}, xi.shifted(-shift)));
    }
    return out;
  };
  std::vector<int> present;
  for (std::size_t a = 0; a < lengths.size(); ++a)
    if (!by_len[a].empty()) present.push_back(lengths[a]);
  return worst_case_scan(present, stress, pot, fit_options);
}

}  // namespace layergibbs
