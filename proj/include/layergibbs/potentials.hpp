#pragma once

// Potentials of the layer restriction: relative Hamiltonian H_V, vacuum
// potential by Moebius inversion, telescoping potential from four kernel
// values, and its closed form as a log-ratio of constrained expectations.
//
// Closed form, for layer sites j < k both minus (zero otherwise), under the
// box measure with the layer frozen to xi^{[j,k]}:
//   U([j,k], xi) = -(1/4)(1-xi_j)(1-xi_k) ln E[G_j G_k] / (E[G_j] E[G_k])
//                  - beta (1-xi_j)(1-xi_k) [k = j+1]
//   U(j, xi)     = (1/2)(1-xi_j) (ln E[G_j] + 2 beta s_j + 2h)
// where G_x = exp(2 beta * sum of the free neighbours of (x,0)) and s_j is
// the sum of the fixed neighbours of (j,0), boundary included. With the
// full layer frozen G_x = exp(2 beta (X(x,1) + X(x,-1))).

#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "box.hpp"
#include "estimate.hpp"
#include "kernel.hpp"
#include "lattice.hpp"

namespace layergibbs {

enum class PotentialKind { vacuum, telescoping, telescoping_closed_form, decimated };

inline std::string to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::vacuum: return "vacuum";
    case PotentialKind::telescoping: return "telescoping";
    case PotentialKind::telescoping_closed_form: return "telescoping_closed_form";
    case PotentialKind::decimated: return "decimated";
  }
  return "?";
}

inline PotentialKind potential_kind_from_string(const std::string& s) {
  if (s == "vacuum") return PotentialKind::vacuum;
  if (s == "telescoping") return PotentialKind::telescoping;
  if (s == "telescoping_closed_form" || s == "closed") return PotentialKind::telescoping_closed_form;
  if (s == "decimated") return PotentialKind::decimated;
  throw std::invalid_argument("unknown potential kind '" + s + "'");
}

/// Interval-indexed potential values; absent entries read as zero.
struct PotentialTable {
  LayerConfig xi;
  double beta = 0.0;
  double h = 0.0;
  PotentialKind kind = PotentialKind::telescoping_closed_form;
  EngineTag engine = EngineTag::exact;
  std::string engine_name;
  int n = 0;
  int decimation = 1;  // b for regular decimation, 1 otherwise
  std::map<LayerInterval, Estimate> entries;

  Estimate at(const LayerInterval& a) const {
    auto it = entries.find(a);
    return it == entries.end() ? Estimate::exact(0.0) : it->second;
  }
  double value(const LayerInterval& a) const { return at(a).value; }
  void set(const LayerInterval& a, Estimate e) { entries[a] = e; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [k, e] : entries) m = std::max(m, std::abs(e.value));
    return m;
  }
};

template <KernelEngine E>
class LayerPotentials {
 public:
  /// `kept` lists the layer sites the measure lives on (all layer sites of
  /// the box when empty); the remaining layer sites are summed over.
  explicit LayerPotentials(const E& engine, SiteSet kept = {}, RadiusFunction g = {})
      : e_(engine), g_(std::move(g)) {
    if (e_.boundary() != Boundary::plus) throw std::invalid_argument("potentials need plus boundary conditions");
    const int n = e_.half_width();
    if (kept.empty())
      for (int i = -n; i <= n; ++i) kept.push_back(i);
    kept_ = normalized(std::move(kept));
    for (int i : kept_)
      if (i < -n || i > n) throw std::invalid_argument("kept site outside the layer of the box");
    for (int i = -n; i <= n; ++i)
      if (!is_kept(i)) others_.push_back(i);
  }

  const E& engine() const { return e_; }
  const SiteSet& sites() const { return kept_; }
  const SiteSet& others_free() const { return others_; }
  bool decimated() const { return !others_.empty(); }
  int n() const { return e_.half_width(); }
  double beta() const { return e_.beta(); }

  bool is_kept(int i) const { return std::binary_search(kept_.begin(), kept_.end(), i); }
  int rank(int i) const {
    auto it = std::lower_bound(kept_.begin(), kept_.end(), i);
    if (it == kept_.end() || *it != i) throw std::invalid_argument("site is not on the kept lattice");
    return static_cast<int>(it - kept_.begin());
  }

  /// xi on S, plus elsewhere.
  static LayerConfig plus_outside(const SiteSet& s, const LayerConfig& xi) {
    LayerConfig r = LayerConfig::all_plus();
    for (int i : s)
      if (xi(i) < 0) r = r.with(i, -1);
    return r;
  }

  // ---- abstract constructions (exact engines)

  double log_kernel(const SiteSet& v, const LayerConfig& sigma, const LayerConfig& omega) const
    requires ExactKernelEngine<E>
  {
    return log_layer_kernel(e_, v, sigma, omega, others_);
  }

  /// H_V(xi) = ln gamma_V(+|+) / gamma_V(xi^V|+).
  Estimate hamiltonian(const SiteSet& v, const LayerConfig& xi) const
    requires ExactKernelEngine<E>
  {
    if (v.empty()) return Estimate::exact(0.0);
    const LayerConfig plus = LayerConfig::all_plus();
    return Estimate::exact(log_kernel(v, plus, plus) - log_kernel(v, plus_outside(v, xi), plus));
  }
  Estimate hamiltonian(const LayerInterval& v, const LayerConfig& xi) const
    requires ExactKernelEngine<E>
  {
    return hamiltonian(kept_in(v), xi);
  }

  /// v(A, xi) = sum_{V subset A} (-1)^{|A \ V|} H_V(xi).
  Estimate vacuum(const SiteSet& a_in, const LayerConfig& xi) const
    requires ExactKernelEngine<E>
  {
    const SiteSet a = normalized(a_in);
    if (a.size() > 12) throw std::invalid_argument("vacuum potential: set too large");
    for (int i : a)
      if (!is_kept(i)) throw std::invalid_argument("vacuum potential: site not on the kept lattice");
    const int m = static_cast<int>(a.size());
    long double sum = 0.0L;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      SiteSet v;
      for (int b = 0; b < m; ++b)
        if (mask & (1u << b)) v.push_back(a[b]);
      const int sign = ((m - static_cast<int>(v.size())) % 2) ? -1 : 1;
      sum += sign * static_cast<long double>(hamiltonian(v, xi).value);
    }
    return Estimate::exact(static_cast<double>(sum));
  }

  /// Sites of L_{i,m} on the kept lattice, clipped to the box.
  SiteSet telescope_sites(int i, int m) const {
    const int r = rank(i);
    SiteSet s;
    for (int q = std::max(0, r - g_(m)); q <= r; ++q) s.push_back(kept_[q]);
    return s;
  }

  /// U_{L_{i,m}}(xi) from four kernel values.
  Estimate telescope_abstract(int i, int m, const LayerConfig& xi) const
    requires ExactKernelEngine<E>
  {
    if (m < 0) throw std::invalid_argument("telescope: m < 0");
    const LayerConfig plus = LayerConfig::all_plus();
    const SiteSet l = telescope_sites(i, m);
    if (m == 0) return Estimate::exact(log_kernel(l, plus, plus) - log_kernel(l, plus_outside(l, xi), plus));
    const SiteSet l1 = telescope_sites(i, m - 1);
    if (l1.size() == l.size()) return Estimate::exact(0.0);  // no new sites inside the box
    auto minus_i = [i](SiteSet s) {
      s.erase(std::remove(s.begin(), s.end(), i), s.end());
      return s;
    };
    const double v = log_kernel(l, plus_outside(l1, xi), plus) +
                     log_kernel(l, plus_outside(minus_i(l), xi), plus) -
                     log_kernel(l, plus_outside(minus_i(l1), xi), plus) -
                     log_kernel(l, plus_outside(l, xi), plus);
    return Estimate::exact(v);
  }

  /// Abstract potential of the interval [j,k] (j, k kept sites).
  Estimate interval_abstract(const LayerInterval& jk, const LayerConfig& xi) const
    requires ExactKernelEngine<E>
  {
    if (!g_.is_identity()) throw std::invalid_argument("interval form needs g(m) = m");
    return telescope_abstract(jk.k, rank(jk.k) - rank(jk.j), xi);
  }

  // ---- closed form (any engine)

  /// Constraint xi on the kept sites of [j,k], plus on the other kept sites.
  LayerConstraint closed_constraint(const LayerInterval& jk, const LayerConfig& xi) const {
    const int n = this->n();
    std::vector<Spin> vals(2 * n + 1, 1);
    for (int i : kept_)
      if (jk.contains(i)) vals[i + n] = xi(i);
    return LayerConstraint::frozen(LayerConfig({-n, n}, vals, 1), others_);
  }

  Observable g_factor(int x) const {
    const int n = this->n();
    Observable g;
    const double a = 2.0 * e_.beta();
    g = g * Observable::exp_spin({x, 1}, a) * Observable::exp_spin({x, -1}, a);
    for (int y : {x - 1, x + 1})
      if (y >= -n && y <= n && !is_kept(y)) g = g * Observable::exp_spin({y, 0}, a);
    return g;
  }

  /// Sum of the fixed neighbour spins of (j,0) under xi^{j} (all plus).
  int fixed_neighbour_sum(int j) const {
    const int n = this->n();
    int s = 0;
    for (int y : {j - 1, j + 1}) {
      if (y < -n || y > n) s += 1;  // plus boundary
      else if (is_kept(y)) s += 1;
    }
    return s;
  }

  Estimate telescope_closed(const LayerInterval& jk, const LayerConfig& xi) const {
    if (!is_kept(jk.j) || !is_kept(jk.k)) throw std::invalid_argument("closed form: endpoints must be kept sites");
    const double pj = 1.0 - xi(jk.j), pk = 1.0 - xi(jk.k);
    if (pj == 0.0 || pk == 0.0 || (e_.beta() == 0.0 && e_.h() == 0.0)) return Estimate::exact(0.0);
    const std::string key = std::to_string(jk.j) + ":" + std::to_string(jk.k) + ":" +
                            closed_constraint(jk, xi).to_string();
    {
      std::lock_guard<std::mutex> lock(memo_mutex_);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    Estimate r;
    const double beta = e_.beta();
    const LayerConstraint c = closed_constraint(jk, xi);
    if (jk.j == jk.k) {
      Estimate eg = e_.expectation(c, g_factor(jk.j));
      r = eg;
      r.value = 0.5 * pj * (std::log(eg.value) + 2.0 * beta * fixed_neighbour_sum(jk.j) + 2.0 * e_.h());
      r.error = 0.5 * pj * eg.error / eg.value;
    } else {
      Estimate lr = e_.log_ratio(c, g_factor(jk.j), g_factor(jk.k));
      r = -0.25 * pj * pk * lr;
      if (jk.k == jk.j + 1) r.value -= beta * pj * pk;
    }
    std::lock_guard<std::mutex> lock(memo_mutex_);
    memo_.emplace(key, r);
    return r;
  }

  /// Closed form evaluated with the interval shifted so that its midpoint
  /// sits at the centre of the box (translation-invariant surrogate).
  Estimate telescope_closed_centered(const LayerInterval& jk, const LayerConfig& xi, int period = 1) const {
    int s = (jk.j + jk.k) / 2;
    if (jk.j + jk.k < 0 && (jk.j + jk.k) % 2 != 0) s -= 1;
    s -= ((s % period) + period) % period;
    const LayerInterval moved(jk.j - s, jk.k - s);
    if (moved.j < -n() || moved.k > n()) throw std::invalid_argument("interval longer than the box layer");
    return telescope_closed(moved, xi.shifted(-s));
  }

  SiteSet kept_in(const LayerInterval& v) const {
    SiteSet s;
    for (int i : kept_)
      if (v.contains(i)) s.push_back(i);
    return s;
  }

 private:
  const E& e_;
  RadiusFunction g_;
  SiteSet kept_;
  SiteSet others_;
  mutable std::map<std::string, Estimate> memo_;
  mutable std::mutex memo_mutex_;
};

/// Potential table over every interval of kept sites inside the box layer
/// with k - j <= max_length.
template <KernelEngine E>
PotentialTable build_table(const LayerPotentials<E>& lp, const LayerConfig& xi, PotentialKind kind,
                           int max_length) {
  PotentialTable t;
  t.xi = xi;
  t.beta = lp.engine().beta();
  t.h = lp.engine().h();
  t.kind = kind;
  t.engine = lp.engine().tag();
  t.engine_name = lp.engine().name();
  t.n = lp.n();
  const auto& k = lp.sites();
  if (lp.decimated() && k.size() >= 2) t.decimation = k[1] - k[0];
  for (std::size_t b = 0; b < k.size(); ++b)
    for (std::size_t a = 0; a <= b; ++a) {
      const LayerInterval jk(k[a], k[b]);
      if (jk.length() > max_length) continue;
      Estimate v;
      switch (kind) {
        case PotentialKind::vacuum:
          if constexpr (ExactKernelEngine<E>) {
            v = lp.vacuum(lp.kept_in(jk), xi);
          } else {
            throw std::invalid_argument("vacuum potential needs an exact engine");
          }
          break;
        case PotentialKind::telescoping:
          if constexpr (ExactKernelEngine<E>) {
            v = lp.interval_abstract(jk, xi);
          } else {
            throw std::invalid_argument("abstract telescoping potential needs an exact engine");
          }
          break;
        case PotentialKind::telescoping_closed_form:
        case PotentialKind::decimated:
          v = lp.telescope_closed(jk, xi);
          break;
      }
      if (v.value != 0.0 || !v.is_exact()) t.set(jk, v);
    }
  return t;
}

/// max |H_V(xi) - sum_{A meets V} U(A, xi^V)| with U from the abstract
/// construction; the sum runs over intervals of kept sites in the box.
template <ExactKernelEngine E>
double verify_telescoping_identity(const LayerPotentials<E>& lp, const LayerInterval& v, const LayerConfig& xi) {
  const SiteSet vs = lp.kept_in(v);
  const LayerConfig xv = LayerPotentials<E>::plus_outside(vs, xi);
  const double h = lp.hamiltonian(vs, xi).value;
  long double sum = 0.0L;
  const auto& k = lp.sites();
  for (std::size_t b = 0; b < k.size(); ++b)
    for (std::size_t a = 0; a <= b; ++a) {
      const LayerInterval jk(k[a], k[b]);
      if (!jk.meets(v)) continue;
      sum += lp.interval_abstract(jk, xv).value;
    }
  return std::abs(h - static_cast<double>(sum));
}

/// |U_{L_{i,m}} - sum of v(R) over the cell of (i,m)|.
template <ExactKernelEngine E>
double verify_resummation(const LayerPotentials<E>& lp, int i, int m, const LayerConfig& xi,
                          const RadiusFunction& g = {}) {
  if (m > 6) throw std::invalid_argument("resummation check limited to m <= 6");
  if (lp.decimated()) throw std::invalid_argument("resummation check needs the full layer");
  const double u = lp.telescope_abstract(i, m, xi).value;
  long double sum = 0.0L;
  for (const auto& r : enumerate_telescope_cell(i, m, g)) {
    bool inside = true;
    for (int s : r) inside = inside && lp.is_kept(s);
    if (!inside) continue;  // sets leaving the box carry no potential
    sum += lp.vacuum(r, xi).value;
  }
  return std::abs(u - static_cast<double>(sum));
}

/// max over subsets V of an interval of |sum_{A subset V} v(A,xi) - H_V(xi)|.
template <ExactKernelEngine E>
double verify_moebius(const LayerPotentials<E>& lp, const SiteSet& v, const LayerConfig& xi) {
  const int m = static_cast<int>(v.size());
  long double sum = 0.0L;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    SiteSet a;
    for (int b = 0; b < m; ++b)
      if (mask & (1u << b)) a.push_back(v[b]);
    sum += lp.vacuum(a, xi).value;
  }
  return std::abs(static_cast<double>(sum) - lp.hamiltonian(v, xi).value);
}

}  // namespace layergibbs
