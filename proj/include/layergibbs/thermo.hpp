#pragma once

// Thermodynamics of the layer potential: Hamiltonians with free and fixed
// boundary conditions, partition functions, pressure, energy density,
// entropy, relative entropy and the variational gap, plus a few
// sample-based diagnostics.
//
// Configurations on an interval V are encoded as bit masks: bit b set means
// site V.j + b carries -1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "convergence.hpp"
#include "estimate.hpp"
#include "kernel.hpp"
#include "lattice.hpp"
#include "potentials.hpp"
#include "stats.hpp"

namespace layergibbs {

using ConfigBits = std::uint32_t;

/// omega with the sites of v set according to `bits`.
inline LayerConfig embed(const LayerConfig& omega, const LayerInterval& v, ConfigBits bits) {
  int lo = std::min(v.j, omega.window().j), hi = std::max(v.k, omega.window().k);
  std::vector<Spin> vals;
  for (int i = lo; i <= hi; ++i)
    vals.push_back(v.contains(i) ? ((bits >> (i - v.j)) & 1u ? -1 : 1) : omega(i));
  return {LayerInterval(lo, hi), std::move(vals), omega.fill()};
}

inline ConfigBits bits_of(const LayerConfig& xi, const LayerInterval& v) {
  ConfigBits b = 0;
  for (int i = v.j; i <= v.k; ++i)
    if (xi(i) < 0) b |= ConfigBits(1) << (i - v.j);
  return b;
}

struct EmpiricalMarginal {
  LayerInterval v{0, 0};
  std::map<ConfigBits, double> probabilities;
  std::uint64_t n_samples = 0;  // 0 for an exact distribution

  static EmpiricalMarginal from_samples(const std::vector<LayerConfig>& samples, const LayerInterval& v) {
    if (v.size() > 20) throw std::invalid_argument("marginal volume too large");
    if (samples.empty()) throw std::invalid_argument("no samples");
    EmpiricalMarginal m;
    m.v = v;
    std::map<ConfigBits, std::uint64_t> counts;
    for (const auto& s : samples) ++counts[bits_of(s, v)];
    for (const auto& [b, c] : counts) m.probabilities[b] = static_cast<double>(c) / samples.size();
    m.n_samples = samples.size();
    return m;
  }

  static EmpiricalMarginal from_distribution(const LayerInterval& v, std::map<ConfigBits, double> p) {
    EmpiricalMarginal m;
    m.v = v;
    long double s = 0.0L;
    for (const auto& [b, q] : p) {
      if (q < 0.0) throw std::invalid_argument("negative probability");
      s += q;
    }
    if (std::abs(static_cast<double>(s) - 1.0) > 1e-12) throw std::invalid_argument("distribution does not sum to 1");
    for (const auto& [b, q] : p)
      if (q > 0.0) m.probabilities[b] = q;
    return m;
  }

  static EmpiricalMarginal uniform(const LayerInterval& v) {
    std::map<ConfigBits, double> p;
    const ConfigBits n = ConfigBits(1) << v.size();
    for (ConfigBits b = 0; b < n; ++b) p[b] = 1.0 / n;
    return from_distribution(v, std::move(p));
  }

  double at(ConfigBits b) const {
    auto it = probabilities.find(b);
    return it == probabilities.end() ? 0.0 : it->second;
  }
};

/// Plug-in Shannon entropy with the Miller-Madow correction for sampled marginals.
inline double entropy_empirical(const EmpiricalMarginal& m) {
  long double s = 0.0L;
  for (const auto& [b, p] : m.probabilities)
    if (p > 0.0) s -= p * std::log(p);
  double r = static_cast<double>(s);
  if (m.n_samples > 0) r += (static_cast<double>(m.probabilities.size()) - 1.0) / (2.0 * m.n_samples);
  return std::clamp(r, 0.0, m.v.size() * std::log(2.0));
}

/// sum p ln(p/q); infinite when p charges a configuration q does not.
inline double relative_entropy(const EmpiricalMarginal& m, const std::function<double(ConfigBits)>& reference) {
  long double s = 0.0L;
  for (const auto& [b, p] : m.probabilities) {
    if (p <= 0.0) continue;
    const double q = reference(b);
    if (q <= 0.0) return std::numeric_limits<double>::infinity();
    s += p * std::log(p / q);
  }
  return std::max(0.0, static_cast<double>(s));
}

inline double relative_entropy(const EmpiricalMarginal& m, const EmpiricalMarginal& reference) {
  return relative_entropy(m, [&](ConfigBits b) { return reference.at(b); });
}

// ---- Hamiltonians

/// Optional tail information for sums cut off at a maximal interval length.
struct TailBound {
  double value = 0.0;
  bool bounded = true;
};

/// H^f_V(sigma) = sum over intervals inside V of U(A, sigma), from a table
/// built for sigma.
inline Estimate hamiltonian_free_bc(const LayerInterval& v, const PotentialTable& t) {
  Estimate s = Estimate::exact(0.0);
  for (const auto& [a, e] : t.entries)
    if (v.contains(a)) s = s + e;
  return s;
}

/// Same from a potential family: only intervals with two minus endpoints
/// contribute.
template <KernelEngine E>
Estimate hamiltonian_free_bc(const LayerPotentials<E>& lp, const LayerInterval& v, const LayerConfig& sigma) {
  const SiteSet sites = lp.kept_in(v);
  SiteSet minus;
  for (int i : sites)
    if (sigma(i) < 0) minus.push_back(i);
  Estimate s = Estimate::exact(0.0);
  for (std::size_t b = 0; b < minus.size(); ++b)
    for (std::size_t a = 0; a <= b; ++a) s = s + lp.telescope_closed({minus[a], minus[b]}, sigma);
  return s;
}

/// H^omega_V(sigma): intervals meeting V, inside the box layer, of length
/// at most `cutoff`, evaluated on sigma_V omega_{V^c}. The tail beyond the
/// cutoff is bounded from a decay fit (zero once the cutoff spans the box).
template <KernelEngine E>
std::pair<Estimate, TailBound> hamiltonian_fixed_bc(const LayerPotentials<E>& lp, const LayerInterval& v,
                                                     const LayerConfig& sigma, const LayerConfig& omega, int cutoff,
                                                     const std::optional<DecayFit>& fit = std::nullopt) {
  const int n = lp.n();
  SiteSet minus;
  LayerConfig tau = omega;
  for (int i = v.j; i <= v.k; ++i) tau = tau.with(i, sigma(i));
  for (int i : lp.sites())
    if (tau(i) < 0) minus.push_back(i);
  Estimate s = Estimate::exact(0.0);
  for (std::size_t b = 0; b < minus.size(); ++b)
    for (std::size_t a = 0; a <= b; ++a) {
      const LayerInterval jk(minus[a], minus[b]);
      if (!jk.meets(v) || jk.length() > cutoff) continue;
      s = s + lp.telescope_closed(jk, tau);
    }
  TailBound tail;
  if (cutoff < 2 * n) {
    if (fit && fit->lambda > 0.0) {
      // intervals of length L meeting V: at most |V| + L of them
      long double t = 0.0L;
      for (int len = cutoff + 1; len <= 2 * n; ++len) t += (v.size() + len) * fit->c * std::exp(-fit->lambda * len);
      tail.value = static_cast<double>(t);
    } else {
      tail = {std::numeric_limits<double>::infinity(), false};
    }
  }
  return {s, tail};
}

// ---- partition functions and pressure

/// ln Z^f_V = ln sum_sigma exp(-H^f_V(sigma)) by direct summation.
template <KernelEngine E>
Estimate log_partition_free_table(const LayerPotentials<E>& lp, const LayerInterval& v) {
  if (v.size() > 20) throw std::invalid_argument("direct partition sum limited to |V| <= 20");
  for (int i = v.j; i <= v.k; ++i)
    if (!lp.is_kept(i)) throw std::invalid_argument("partition sum over a volume with non-kept sites");
  const ConfigBits n = ConfigBits(1) << v.size();
  std::vector<double> minus_h(n);
  double err2 = 0.0;
  for (ConfigBits b = 0; b < n; ++b) {
    const Estimate h = hamiltonian_free_bc(lp, v, embed(LayerConfig::all_plus(), v, b));
    minus_h[b] = -h.value;
    err2 = std::max(err2, h.error * h.error);
  }
  const double mx = *std::max_element(minus_h.begin(), minus_h.end());
  long double s = 0.0L;
  for (double x : minus_h) s += std::exp(static_cast<long double>(x - mx));
  Estimate r = Estimate::exact(mx + static_cast<double>(std::log(s)));
  if (err2 > 0.0) {
    r.engine = EngineTag::mc;
    r.error = std::sqrt(err2);
  }
  return r;
}

/// ln Z^f_V = -ln gamma_V(+|+).
template <KernelEngine E>
Estimate log_partition_free_kernel(const E& engine, const LayerInterval& v) {
  SiteSet s;
  for (int i = v.j; i <= v.k; ++i) s.push_back(i);
  const LayerConfig plus = LayerConfig::all_plus();
  if constexpr (ExactKernelEngine<E>) {
    return Estimate::exact(-log_layer_kernel(engine, s, plus, plus));
  } else {
    const Estimate g = layer_kernel(engine, s, plus, plus);
    Estimate r = g;
    r.value = -std::log(g.value);
    r.error = g.error / g.value;
    return r;
  }
}

/// ln Z^omega_V by direct summation over sigma_V.
template <KernelEngine E>
Estimate log_partition_fixed(const LayerPotentials<E>& lp, const LayerInterval& v, const LayerConfig& omega,
                             int cutoff) {
  if (v.size() > 20) throw std::invalid_argument("direct partition sum limited to |V| <= 20");
  const ConfigBits n = ConfigBits(1) << v.size();
  std::vector<double> minus_h(n);
  for (ConfigBits b = 0; b < n; ++b)
    minus_h[b] = -hamiltonian_fixed_bc(lp, v, embed(omega, v, b), omega, cutoff).first.value;
  const double mx = *std::max_element(minus_h.begin(), minus_h.end());
  long double s = 0.0L;
  for (double x : minus_h) s += std::exp(static_cast<long double>(x - mx));
  return Estimate::exact(mx + static_cast<double>(std::log(s)));
}

struct ThermoSeries {
  struct Entry {
    int n = 0;
    double value = 0.0;
    double error = 0.0;
  };
  std::string label;
  std::vector<Entry> entries;

  void add(int n, double value, double error = 0.0) {
    if (!entries.empty() && n <= entries.back().n) throw std::invalid_argument("series index must increase");
    entries.push_back({n, value, error});
  }
  /// Largest |x_{k+1} - x_k| over the last `tail` steps.
  double cauchy(int tail = 1) const {
    double m = 0.0;
    const int sz = static_cast<int>(entries.size());
    for (int k = std::max(1, sz - tail); k < sz; ++k) m = std::max(m, std::abs(entries[k].value - entries[k - 1].value));
    return m;
  }
  bool strictly_decreasing() const {
    for (std::size_t k = 1; k < entries.size(); ++k)
      if (!(entries[k].value < entries[k - 1].value)) return false;
    return true;
  }
};

/// P_n = |V_n|^{-1} ln Z^f_{V_n}, V_n = [-n, n], through the kernel route.
template <KernelEngine E>
ThermoSeries pressure_series(const E& engine, const std::vector<int>& n_list) {
  ThermoSeries s;
  s.label = "pressure_free";
  for (int n : n_list) {
    const Estimate z = log_partition_free_kernel(engine, {-n, n});
    s.add(n, z.value / (2 * n + 1), z.error / (2 * n + 1));
  }
  return s;
}

/// |V_n|^{-1} ln Z^omega_{V_n} by direct summation (small volumes).
template <KernelEngine E>
ThermoSeries pressure_series_fixed(const LayerPotentials<E>& lp, const std::vector<int>& n_list,
                                   const LayerConfig& omega) {
  ThermoSeries s;
  s.label = "pressure_fixed";
  for (int n : n_list) {
    const Estimate z = log_partition_fixed(lp, {-n, n}, omega, 2 * lp.n());
    s.add(n, z.value / (2 * n + 1), z.error / (2 * n + 1));
  }
  return s;
}

// ---- energy

/// f_U(sigma) = sum over intervals A containing `site`, of length at most
/// `cutoff`, of U(A, sigma) / |A| (|A| counts kept sites).
template <KernelEngine E>
Estimate energy_per_site(const LayerPotentials<E>& lp, const LayerConfig& sigma, int cutoff, int site = 0) {
  SiteSet minus;
  for (int i : lp.sites())
    if (sigma(i) < 0) minus.push_back(i);
  Estimate s = Estimate::exact(0.0);
  for (std::size_t b = 0; b < minus.size(); ++b)
    for (std::size_t a = 0; a <= b; ++a) {
      const LayerInterval jk(minus[a], minus[b]);
      if (!jk.contains(site) || jk.length() > cutoff) continue;
      const double size = static_cast<double>(lp.kept_in(jk).size());
      s = s + (1.0 / size) * lp.telescope_closed(jk, sigma);
    }
  return s;
}

struct EnergyDensity {
  Estimate ergodic;  // sample mean of f_U at the origin
  Estimate volume;   // sample mean of H^f_V / |V|
  double z() const {
    const double e = std::hypot(ergodic.error, volume.error);
    return e > 0.0 ? std::abs(ergodic.value - volume.value) / e : (ergodic.value == volume.value ? 0.0 : INFINITY);
  }
};

namespace detail {
inline Estimate batch_estimate(const std::vector<double>& x, int nblocks, std::optional<std::uint64_t> seed) {
  Estimate e;
  e.value = stats::mean(x);
  e.error = x.size() >= static_cast<std::size_t>(2 * nblocks) ? stats::batch_means_error(x, nblocks) : 0.0;
  e.n_samples = x.size();
  e.engine = EngineTag::mc;
  e.seed = seed;
  return e;
}
}  // namespace detail

/// Energy density by the ergodic route and by the volume route on the same
/// samples (in sampling order, so that batch means capture correlations).
template <KernelEngine E>
EnergyDensity energy_density_estimate(const std::vector<LayerConfig>& samples, const LayerPotentials<E>& lp,
                                      const LayerInterval& v, int cutoff, int nblocks = 32,
                                      std::optional<std::uint64_t> seed = std::nullopt) {
  std::vector<double> f, h;
  f.reserve(samples.size());
  h.reserve(samples.size());
  for (const auto& s : samples) {
    f.push_back(energy_per_site(lp, s, cutoff, 0).value);
    h.push_back(hamiltonian_free_bc(lp, v, s).value / v.size());
  }
  return {detail::batch_estimate(f, nblocks, seed), detail::batch_estimate(h, nblocks, seed)};
}

// ---- variational gap

/// -S(m) + m(H^omega_V) + ln Z^omega_V for a given marginal; equals the
/// relative entropy of m with respect to the finite-volume Gibbs law.
template <KernelEngine E>
Estimate variational_gap(const EmpiricalMarginal& m, const LayerConfig& omega, const LayerPotentials<E>& lp) {
  const int cutoff = 2 * lp.n();
  long double eh = 0.0L;
  for (const auto& [b, p] : m.probabilities)
    eh += p * hamiltonian_fixed_bc(lp, m.v, embed(omega, m.v, b), omega, cutoff).first.value;
  const double lz = log_partition_fixed(lp, m.v, omega, cutoff).value;
  return Estimate::exact(-entropy_empirical(m) + static_cast<double>(eh) + lz);
}

/// Gap on sampled marginals with a jackknife error over sample blocks.
template <KernelEngine E>
Estimate variational_gap_samples(const std::vector<LayerConfig>& samples, const LayerInterval& v,
                                 const LayerConfig& omega, const LayerPotentials<E>& lp, int nblocks = 32) {
  const int cutoff = 2 * lp.n();
  const double lz = log_partition_fixed(lp, v, omega, cutoff).value;
  std::map<ConfigBits, double> hcache;
  auto hv = [&](ConfigBits b) {
    auto it = hcache.find(b);
    if (it != hcache.end()) return it->second;
    const double x = hamiltonian_fixed_bc(lp, v, embed(omega, v, b), omega, cutoff).first.value;
    hcache.emplace(b, x);
    return x;
  };
  const std::size_t len = samples.size() / nblocks;
  if (len == 0) throw std::invalid_argument("fewer samples than blocks");
  std::vector<std::map<ConfigBits, std::uint64_t>> blocks(nblocks);
  for (int k = 0; k < nblocks; ++k)
    for (std::size_t t = 0; t < len; ++t) ++blocks[k][bits_of(samples[k * len + t], v)];
  auto gap_without = [&](int skip) {
    std::map<ConfigBits, std::uint64_t> c;
    std::uint64_t total = 0;
    for (int k = 0; k < nblocks; ++k) {
      if (k == skip) continue;
      for (const auto& [b, x] : blocks[k]) c[b] += x, total += x;
    }
    EmpiricalMarginal m;
    m.v = v;
    m.n_samples = total;
    long double eh = 0.0L;
    for (const auto& [b, x] : c) {
      m.probabilities[b] = static_cast<double>(x) / total;
      eh += m.probabilities[b] * hv(b);
    }
    return -entropy_empirical(m) + static_cast<double>(eh) + lz;
  };
  const double full = gap_without(-1);
  std::vector<double> loo(nblocks);
  for (int k = 0; k < nblocks; ++k) loo[k] = gap_without(k);
  const double lm = stats::mean(loo);
  long double s2 = 0.0L;
  for (double x : loo) s2 += (x - lm) * (x - lm);
  Estimate e;
  e.value = full;
  e.error = std::sqrt(static_cast<double>(s2) * (nblocks - 1) / nblocks);
  e.n_samples = len * nblocks;
  e.engine = EngineTag::mc;
  return e;
}

struct VariationalPoint {
  int n = 0;
  Estimate entropy_density;
  Estimate energy_density;
  double pressure = 0.0;
  Estimate gap;  // s_n - e_n - P_n
};

enum class EntropyEstimator {
  plug_in,        // Miller-Madow corrected frequencies
  exact_marginal  // -mean ln mu_V(sigma) with mu_V the layer marginal of the engine's box
};

/// s_n - e_n - P_n on V_n = [-n, n] for sampled mu: entropy and energy on
/// the samples, pressure through the kernel route of the same engine.
/// The exact-marginal entropy needs samples drawn from the engine's box.
template <ExactKernelEngine E>
std::vector<VariationalPoint> variational_functional(const std::vector<LayerConfig>& samples,
                                                     const LayerPotentials<E>& lp, const std::vector<int>& n_list,
                                                     int nblocks = 32,
                                                     EntropyEstimator est = EntropyEstimator::plug_in) {
  std::vector<VariationalPoint> out;
  const std::size_t len = samples.size() / nblocks;
  if (len == 0) throw std::invalid_argument("fewer samples than blocks");
  for (int n : n_list) {
    const LayerInterval v(-n, n);
    const double vol = v.size();
    const double p = log_partition_free_kernel(lp.engine(), v).value / vol;
    std::vector<std::map<ConfigBits, std::uint64_t>> blocks(nblocks);
    std::map<ConfigBits, double> hcache, lmu;
    SiteSet vs, rest;
    const int nb = lp.engine().half_width();
    for (int i = -nb; i <= nb; ++i) (v.contains(i) ? vs : rest).push_back(i);
    const LayerConfig plus = LayerConfig::all_plus();
    for (int k = 0; k < nblocks; ++k)
      for (std::size_t t = 0; t < len; ++t) {
        const auto& s = samples[k * len + t];
        const ConfigBits b = bits_of(s, v);
        if (!hcache.count(b)) {
          hcache[b] = hamiltonian_free_bc(lp, v, s).value;
          if (est == EntropyEstimator::exact_marginal) lmu[b] = log_layer_kernel(lp.engine(), vs, s, plus, rest);
        }
        ++blocks[k][b];
      }
    auto parts = [&](int skip) {
      std::map<ConfigBits, std::uint64_t> c;
      std::uint64_t total = 0;
      for (int k = 0; k < nblocks; ++k) {
        if (k == skip) continue;
        for (const auto& [b, x] : blocks[k]) c[b] += x, total += x;
      }
      EmpiricalMarginal m;
      m.v = v;
      m.n_samples = total;
      long double eh = 0.0L, el = 0.0L;
      for (const auto& [b, x] : c) {
        m.probabilities[b] = static_cast<double>(x) / total;
        eh += m.probabilities[b] * hcache.at(b);
        if (est == EntropyEstimator::exact_marginal) el -= m.probabilities[b] * lmu.at(b);
      }
      const double ent = est == EntropyEstimator::exact_marginal ? static_cast<double>(el) : entropy_empirical(m);
      return std::pair<double, double>{ent / vol, static_cast<double>(eh) / vol};
    };
    const auto [s0, e0] = parts(-1);
    std::vector<double> ls(nblocks), le(nblocks), lg(nblocks);
    for (int k = 0; k < nblocks; ++k) {
      const auto [s, e] = parts(k);
      ls[k] = s, le[k] = e, lg[k] = s - e - p;
    }
    auto jk_err = [nblocks](const std::vector<double>& x) {
      const double m = stats::mean(x);
      long double s2 = 0.0L;
      for (double y : x) s2 += (y - m) * (y - m);
      return std::sqrt(static_cast<double>(s2) * (nblocks - 1) / nblocks);
    };
    auto mk = [&](double v, double e) {
      Estimate r;
      r.value = v;
      r.error = e;
      r.n_samples = len * nblocks;
      r.engine = EngineTag::mc;
      return r;
    };
    out.push_back({n, mk(s0, jk_err(ls)), mk(e0, jk_err(le)), p, mk(s0 - e0 - p, jk_err(lg))});
  }
  return out;
}

// ---- sample diagnostics

/// 2^n e^{-beta n} * mean exp(2 beta sum_{|i| <= n} (1 - eta_i)) per n,
/// evaluated in the log domain with a jackknife error over sample blocks.
inline ThermoSeries theorem62_condition(const std::vector<LayerConfig>& samples, double beta,
                                        const std::vector<int>& n_list, int nblocks = 32) {
  ThermoSeries out;
  out.label = "condition_series";
  const std::size_t len = samples.size() / nblocks;
  if (len == 0) throw std::invalid_argument("fewer samples than blocks");
  for (int n : n_list) {
    std::vector<double> x;
    x.reserve(len * nblocks);
    for (std::size_t t = 0; t < len * nblocks; ++t) {
      long minus = 0;
      for (int i = -n; i <= n; ++i) minus += samples[t](i) < 0;
      x.push_back(4.0 * beta * minus);  // 2 beta (1 - eta) = 4 beta per minus spin
    }
    const double mx = *std::max_element(x.begin(), x.end());
    std::vector<std::vector<double>> blocks(1, std::vector<double>(nblocks));
    for (int k = 0; k < nblocks; ++k) {
      long double s = 0.0L;
      for (std::size_t t = 0; t < len; ++t) s += std::exp(static_cast<long double>(x[k * len + t] - mx));
      blocks[0][k] = static_cast<double>(s / len);
    }
    const auto jk = stats::jackknife(blocks, [&](const std::vector<double>& m) {
      return n * std::log(2.0) - beta * n + mx + std::log(m[0]);
    });
    out.add(n, std::exp(jk.value), std::exp(jk.value) * jk.error);
  }
  return out;
}

struct DominationReport {
  double rho_minus = 0.0;
  std::vector<Estimate> p_minus;  // per site of the window
  std::vector<int> failing_sites;
  int events_checked = 0;
  int events_failing = 0;
  bool pass() const { return failing_sites.empty() && events_failing == 0; }
};

/// Checks P(sigma_i = -) <= e^{-8 beta} per site and, on the cylinder
/// {0,1,2}, P(D) <= rho(D) for every decreasing event D, within 3 errors.
inline DominationReport bernoulli_domination_check(const std::vector<LayerConfig>& samples, double beta,
                                                   const LayerInterval& window, int nblocks = 32) {
  DominationReport r;
  r.rho_minus = std::exp(-8.0 * beta);
  for (int i = window.j; i <= window.k; ++i) {
    std::vector<double> x;
    for (const auto& s : samples) x.push_back(s(i) < 0 ? 1.0 : 0.0);
    const Estimate e = detail::batch_estimate(x, nblocks, std::nullopt);
    r.p_minus.push_back(e);
    if (e.value > r.rho_minus + 3.0 * e.error) r.failing_sites.push_back(i);
  }
  const LayerInterval cyl(0, 2);
  std::vector<std::vector<double>> ind(8);
  for (const auto& s : samples) {
    const ConfigBits b = bits_of(s, cyl);
    for (ConfigBits c = 0; c < 8; ++c) ind[c].push_back(b == c ? 1.0 : 0.0);
  }
  // a set of configurations is decreasing when it is closed under adding minus spins
  for (unsigned event = 1; event < 256; ++event) {
    bool down = true;
    for (ConfigBits c = 0; c < 8 && down; ++c)
      if (event & (1u << c))
        for (ConfigBits d = 0; d < 8; ++d)
          if ((d & c) == c && !(event & (1u << d))) down = false;
    if (!down) continue;
    ++r.events_checked;
    double rho = 0.0;
    std::vector<double> x(samples.size(), 0.0);
    for (ConfigBits c = 0; c < 8; ++c)
      if (event & (1u << c)) {
        const int k = __builtin_popcount(c);
        rho += std::pow(r.rho_minus, k) * std::pow(1.0 - r.rho_minus, 3 - k);
        for (std::size_t t = 0; t < x.size(); ++t) x[t] += ind[c][t];
      }
    const Estimate e = detail::batch_estimate(x, nblocks, std::nullopt);
    if (e.value > rho + 3.0 * e.error) ++r.events_failing;
  }
  return r;
}

/// omega: alternating on [-n, n] (site 0 irrelevant), `fill` elsewhere.
inline LayerConfig probe_boundary(int n, Spin fill) { return LayerConfig::alternating({-n, n}, fill); }

/// D_n = gamma_0(+ | alt on [-n,n], fill +) - gamma_0(+ | alt on [-n,n], fill -)
/// in the box of the engine.
template <KernelEngine E>
ThermoSeries quasilocality_probe(const E& engine, const std::vector<int>& n_list) {
  ThermoSeries s;
  s.label = "quasilocality_D";
  const LayerConfig plus_at_0 = LayerConfig::all_plus();
  for (int n : n_list) {
    if (n > engine.half_width()) throw std::invalid_argument("probe window larger than the box");
    const Estimate a = layer_kernel(engine, {0}, plus_at_0, probe_boundary(n, 1));
    const Estimate b = layer_kernel(engine, {0}, plus_at_0, probe_boundary(n, -1));
    s.add(n, a.value - b.value, std::hypot(a.error, b.error));
  }
  return s;
}

// ---- finite-volume Gibbs measure of the potential

struct DobrushinResult {
  Estimate value;
  TailBound truncation;
};

/// R^U_V(f)(omega) = sum_sigma f(sigma) exp(-H^omega_V(sigma)) / Z^omega_V.
template <KernelEngine E>
DobrushinResult dobrushin_expectation(const std::function<double(const LayerConfig&)>& f, const LayerInterval& v,
                                      const LayerConfig& omega, const LayerPotentials<E>& lp, int cutoff,
                                      const std::optional<DecayFit>& fit = std::nullopt) {
  if (v.size() > 20) throw std::invalid_argument("Dobrushin sum limited to |V| <= 20");
  const int n = lp.n();
  if (v.j < -n || v.k > n) throw std::invalid_argument("insufficient table coverage: V leaves the box layer");
  const ConfigBits nc = ConfigBits(1) << v.size();
  std::vector<double> mh(nc), fv(nc);
  TailBound tail;
  for (ConfigBits b = 0; b < nc; ++b) {
    const LayerConfig s = embed(omega, v, b);
    const auto [h, t] = hamiltonian_fixed_bc(lp, v, s, omega, cutoff, fit);
    mh[b] = -h.value;
    fv[b] = f(s);
    tail.value = std::max(tail.value, t.value);
    tail.bounded = tail.bounded && t.bounded;
  }
  const double mx = *std::max_element(mh.begin(), mh.end());
  long double z = 0.0L, num = 0.0L;
  for (ConfigBits b = 0; b < nc; ++b) {
    const long double w = std::exp(static_cast<long double>(mh[b] - mx));
    z += w;
    num += w * fv[b];
  }
  DobrushinResult r;
  r.value = Estimate::exact(static_cast<double>(num / z));
  // a shift of at most t in every energy moves a probability by at most e^{2t} - 1
  double fmax = 0.0;
  for (double x : fv) fmax = std::max(fmax, std::abs(x));
  r.truncation.bounded = tail.bounded;
  r.truncation.value = tail.bounded ? fmax * std::expm1(2.0 * tail.value) : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace layergibbs
