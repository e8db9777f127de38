#pragma once

// Layer geometry: sites, intervals, layer configurations and the
// telescoping sets L_{i,m} = [i - g(m), i].

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace layergibbs {

using Spin = int;  // +1 or -1

constexpr bool is_spin(int s) { return s == 1 || s == -1; }

struct Site2D {
  int x = 0;
  int y = 0;  // the layer is y == 0

  friend constexpr bool operator==(const Site2D&, const Site2D&) = default;
  friend constexpr auto operator<=>(const Site2D& a, const Site2D& b) {
    // row-major from the top row down, left to right
    if (a.y != b.y) return b.y <=> a.y;
    return a.x <=> b.x;
  }
};

struct LayerInterval {
  int j = 0;
  int k = 0;

  LayerInterval() = default;
  LayerInterval(int j_, int k_) : j(j_), k(k_) {
    if (j > k) throw std::invalid_argument("LayerInterval: j > k");
  }

  int length() const { return k - j; }  // |j - k|, zero for a single site
  int size() const { return k - j + 1; }
  bool contains(int i) const { return j <= i && i <= k; }
  bool contains(const LayerInterval& o) const { return j <= o.j && o.k <= k; }
  bool meets(const LayerInterval& o) const { return !(o.k < j || k < o.j); }

  friend bool operator==(const LayerInterval&, const LayerInterval&) = default;
  friend auto operator<=>(const LayerInterval& a, const LayerInterval& b) {
    if (a.k != b.k) return a.k <=> b.k;
    return b.j <=> a.j;  // shorter first for a fixed right endpoint
  }
};

/// A spin assignment on a finite window of the layer; every site outside
/// the window carries `fill`.
class LayerConfig {
 public:
  LayerConfig() : window_(0, 0), values_{1}, fill_(1) {}

  LayerConfig(LayerInterval window, std::vector<Spin> values, Spin fill = 1)
      : window_(window), values_(std::move(values)), fill_(fill) {
    if (static_cast<int>(values_.size()) != window_.size())
      throw std::invalid_argument("LayerConfig: values do not match window");
    if (!is_spin(fill_)) throw std::invalid_argument("LayerConfig: bad fill");
    for (Spin s : values_)
      if (!is_spin(s)) throw std::invalid_argument("LayerConfig: bad spin");
  }

  static LayerConfig constant(LayerInterval window, Spin value, Spin fill = 1) {
    return {window, std::vector<Spin>(window.size(), value), fill};
  }
  static LayerConfig all_plus() { return constant({0, 0}, 1, 1); }
  /// (-1)^i on the window.
  static LayerConfig alternating(LayerInterval window, Spin fill = 1) {
    std::vector<Spin> v;
    for (int i = window.j; i <= window.k; ++i) v.push_back((i % 2 == 0) ? 1 : -1);
    return {window, std::move(v), fill};
  }

  const LayerInterval& window() const { return window_; }
  const std::vector<Spin>& values() const { return values_; }
  Spin fill() const { return fill_; }

  Spin operator()(int i) const {
    return window_.contains(i) ? values_[i - window_.j] : fill_;
  }

  /// xi^V: this configuration on V, `outside` everywhere else.
  LayerConfig restricted(const LayerInterval& v, Spin outside = 1) const {
    std::vector<Spin> vals;
    vals.reserve(v.size());
    for (int i = v.j; i <= v.k; ++i) vals.push_back((*this)(i));
    return {v, std::move(vals), outside};
  }

  /// Same configuration with the given sites forced to `s` (window grows
  /// to cover them).
  LayerConfig with(const std::vector<int>& sites, Spin s) const {
    int lo = window_.j, hi = window_.k;
    for (int i : sites) lo = std::min(lo, i), hi = std::max(hi, i);
    std::vector<Spin> vals;
    for (int i = lo; i <= hi; ++i) vals.push_back((*this)(i));
    for (int i : sites) vals[i - lo] = s;
    return {LayerInterval(lo, hi), std::move(vals), fill_};
  }
  LayerConfig with(int site, Spin s) const { return with(std::vector<int>{site}, s); }

  /// Translation by a: (tau_a xi)(i) = xi(i - a).
  LayerConfig shifted(int a) const {
    return {LayerInterval(window_.j + a, window_.k + a), values_, fill_};
  }

  /// Smallest window outside of which the configuration equals the fill.
  LayerConfig trimmed() const {
    int lo = window_.j, hi = window_.k;
    while (lo < hi && (*this)(lo) == fill_) ++lo;
    while (hi > lo && (*this)(hi) == fill_) --hi;
    return restricted(LayerInterval(lo, hi), fill_);
  }

  /// Pointwise order: this <= other at every site.
  bool precedes(const LayerConfig& other) const {
    if (fill_ > other.fill_) return false;
    int lo = std::min(window_.j, other.window_.j);
    int hi = std::max(window_.k, other.window_.k);
    for (int i = lo; i <= hi; ++i)
      if ((*this)(i) > other(i)) return false;
    return true;
  }

  std::string to_string() const {
    std::string s;
    for (Spin v : values_) s += (v > 0 ? '+' : '-');
    return "[" + std::to_string(window_.j) + "," + std::to_string(window_.k) + "]" + s +
           (fill_ > 0 ? "|+" : "|-");
  }

  friend bool operator==(const LayerConfig& a, const LayerConfig& b) {
    if (a.fill_ != b.fill_) return false;
    int lo = std::min(a.window_.j, b.window_.j);
    int hi = std::max(a.window_.k, b.window_.k);
    for (int i = lo; i <= hi; ++i)
      if (a(i) != b(i)) return false;
    return true;
  }

 private:
  LayerInterval window_;
  std::vector<Spin> values_;
  Spin fill_;
};

/// Strictly increasing radius function for the telescoping family.
/// g(m) = m unless configured otherwise.
class RadiusFunction {
 public:
  RadiusFunction() : g_([](int m) { return m; }) {}
  explicit RadiusFunction(std::function<int(int)> g) : g_(std::move(g)) {
    if (g_(0) != 0) throw std::invalid_argument("RadiusFunction: g(0) must be 0");
  }

  int operator()(int m) const { return g_(m); }

  /// Smallest m with g(m) >= d.
  int inverse_ceil(int d) const {
    int m = 0;
    while (g_(m) < d) ++m;
    return m;
  }

  bool is_identity() const {
    for (int m = 0; m < 8; ++m)
      if (g_(m) != m) return false;
    return true;
  }

 private:
  std::function<int(int)> g_;
};

/// L_{i,m} = { j <= i : |j - i| <= g(m) }.
struct TelescopeSet {
  int i = 0;
  int m = 0;

  LayerInterval sites(const RadiusFunction& g = {}) const { return {i - g(m), i}; }
  friend bool operator==(const TelescopeSet&, const TelescopeSet&) = default;
};

using SiteSet = std::vector<int>;  // sorted, unique layer sites

inline SiteSet normalized(SiteSet a) {
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

/// The unique (i, m) with i in A, A inside L_{i,m} and not inside L_{i,m-1}.
/// Throws on an empty set.
inline std::optional<TelescopeSet> telescope_decompose(const SiteSet& set,
                                                       const RadiusFunction& g = {}) {
  if (set.empty()) throw std::invalid_argument("empty set has no decomposition");
  auto [lo, hi] = std::minmax_element(set.begin(), set.end());
  int i = *hi;
  int m = g.inverse_ceil(i - *lo);
  TelescopeSet t{i, m};
  if (!t.sites(g).contains(*lo)) return std::nullopt;
  return t;
}

/// All R with i in R, R inside L_{i,m}, R not inside L_{i,m-1}.
/// Sets are returned sorted, in lexicographic order of their bitmasks.
inline std::vector<SiteSet> enumerate_telescope_cell(int i, int m, const RadiusFunction& g = {}) {
  if (m < 0) throw std::invalid_argument("enumerate_telescope_cell: m < 0");
  if (m == 0) return {{i}};
  const int inner = g(m - 1);
  const int outer = g(m);
  // Sites strictly between i - outer and i - inner - 1 are optional; at
  // least one of the new sites [i - outer, i - inner - 1] must be present.
  const int width = outer;  // sites i - outer .. i - 1
  if (width > 30) throw std::invalid_argument("enumerate_telescope_cell: cell too large");
  std::vector<SiteSet> out;
  for (std::uint32_t mask = 0; mask < (1u << width); ++mask) {
    SiteSet r;
    bool touches_new = false;
    for (int b = 0; b < width; ++b) {
      if (mask & (1u << b)) {
        int site = i - outer + b;
        r.push_back(site);
        if (i - site > inner) touches_new = true;
      }
    }
    if (!touches_new) continue;
    r.push_back(i);
    out.push_back(std::move(r));
  }
  return out;
}

/// All nonempty subsets of the interval, as sorted site sets.
inline std::vector<SiteSet> subsets_of(const LayerInterval& v) {
  const int n = v.size();
  if (n > 24) throw std::invalid_argument("subsets_of: interval too large");
  std::vector<SiteSet> out;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    SiteSet s;
    for (int b = 0; b < n; ++b)
      if (mask & (1u << b)) s.push_back(v.j + b);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace layergibbs
