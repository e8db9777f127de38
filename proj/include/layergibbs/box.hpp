#pragma once

// Finite 2D Ising problems: the box, its boundary condition, the layer
// constraint, and product-form observables.
//
// Log-weight of a box configuration sigma:
//     beta * sum_{<xy> in box} (sigma_x sigma_y - 1)
//   + beta * sum_{x on the edge, y outside} (sigma_x b - 1)    (b = +-1, absent for free)
//   + h * sum_x sigma_x

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lattice.hpp"

namespace layergibbs {

enum class Boundary { plus, minus, free };

inline std::string to_string(Boundary b) {
  switch (b) {
    case Boundary::plus: return "plus";
    case Boundary::minus: return "minus";
    case Boundary::free: return "free";
  }
  return "?";
}

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "plus") return Boundary::plus;
  if (s == "minus") return Boundary::minus;
  if (s == "free") return Boundary::free;
  throw std::invalid_argument("unknown boundary '" + s + "'");
}

/// Spin value of the exterior, or 0 for free boundary.
constexpr int boundary_spin(Boundary b) {
  return b == Boundary::plus ? 1 : (b == Boundary::minus ? -1 : 0);
}

struct Box {
  int x_min = 0, x_max = 0, y_min = 0, y_max = 0;

  static Box square(int n) {
    if (n < 0) throw std::invalid_argument("Box::square: n < 0");
    return {-n, n, -n, n};
  }
  static Box rect(int x0, int x1, int y0, int y1) {
    if (x0 > x1 || y0 > y1) throw std::invalid_argument("Box::rect: empty box");
    return {x0, x1, y0, y1};
  }

  int width() const { return x_max - x_min + 1; }
  int height() const { return y_max - y_min + 1; }
  int volume() const { return width() * height(); }
  bool contains(Site2D s) const {
    return x_min <= s.x && s.x <= x_max && y_min <= s.y && s.y <= y_max;
  }
  bool has_layer() const { return y_min <= 0 && 0 <= y_max; }
  LayerInterval layer() const { return {x_min, x_max}; }
  bool is_square() const { return x_min == -x_max && y_min == -y_max && x_max == y_max; }
  int index(Site2D s) const { return (y_max - s.y) * width() + (s.x - x_min); }
  Site2D site(int idx) const { return {x_min + idx % width(), y_max - idx / width()}; }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Which layer spins are held fixed. Sites listed in `unfrozen` stay free;
/// every other layer site takes xi (window values, fill elsewhere). With no
/// xi the whole layer is free.
struct LayerConstraint {
  std::optional<LayerConfig> xi;
  SiteSet unfrozen;

  static LayerConstraint none() { return {}; }
  static LayerConstraint frozen(LayerConfig x, SiteSet free_sites = {}) {
    return {std::move(x), normalized(std::move(free_sites))};
  }

  bool active() const { return xi.has_value(); }
  bool is_free(int i) const {
    return !xi || std::binary_search(unfrozen.begin(), unfrozen.end(), i);
  }
  /// Frozen spin at layer site i, or 0 when free.
  int spin(int i) const { return is_free(i) ? 0 : (*xi)(i); }

  /// No free layer site inside [lo, hi].
  bool fully_frozen_on(int lo, int hi) const {
    if (!xi) return false;
    for (int u : unfrozen)
      if (lo <= u && u <= hi) return false;
    return true;
  }

  std::string to_string() const {
    if (!xi) return "free";
    std::string s = xi->to_string();
    if (!unfrozen.empty()) {
      s += " free{";
      for (std::size_t a = 0; a < unfrozen.size(); ++a)
        s += (a ? "," : "") + std::to_string(unfrozen[a]);
      s += "}";
    }
    return s;
  }
};

struct BoxProblem {
  Box box = Box::square(1);
  double beta = 0.0;
  double h = 0.0;
  Boundary boundary = Boundary::plus;
  LayerConstraint layer;

  static BoxProblem square(int n, double beta, double h, Boundary b = Boundary::plus,
                           LayerConstraint c = {}) {
    return {Box::square(n), beta, h, b, std::move(c)};
  }

  void validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta))
      throw std::invalid_argument("beta must be finite and >= 0");
    if (!std::isfinite(h)) throw std::invalid_argument("h must be finite");
    if (layer.xi) {
      if (!box.has_layer()) throw std::invalid_argument("frozen layer outside box");
      const auto& w = layer.xi->window();
      if (w.j < box.x_min || w.k > box.x_max)
        throw std::invalid_argument("frozen window not inside the layer of the box");
    }
  }

  /// Frozen spin at a site, or 0 when the site is free.
  int frozen_spin(Site2D s) const { return s.y == 0 ? layer.spin(s.x) : 0; }

  int free_spin_count() const {
    int n = box.volume();
    if (layer.xi && box.has_layer())
      for (int x = box.x_min; x <= box.x_max; ++x)
        if (!layer.is_free(x)) --n;
    return n;
  }
};

/// f(sigma) = constant * prod_k factor_k(sigma at site_k).
class Observable {
 public:
  struct Factor {
    Site2D site;
    double plus = 1.0;
    double minus = 1.0;
    double operator()(Spin s) const { return s > 0 ? plus : minus; }
  };

  Observable() = default;
  explicit Observable(double c) : constant_(c) {}

  static Observable spin(Site2D s) { return Observable().times({s, 1.0, -1.0}); }
  /// exp(a X(s)).
  static Observable exp_spin(Site2D s, double a) {
    return Observable().times({s, std::exp(a), std::exp(-a)});
  }
  static Observable indicator(Site2D s, Spin v) {
    return Observable().times({s, v > 0 ? 1.0 : 0.0, v > 0 ? 0.0 : 1.0});
  }

  Observable& times(Factor f) {
    for (auto& g : factors_)
      if (g.site == f.site) {
        g.plus *= f.plus;
        g.minus *= f.minus;
        return *this;
      }
    factors_.push_back(f);
    std::sort(factors_.begin(), factors_.end(),
              [](const Factor& a, const Factor& b) { return a.site < b.site; });
    return *this;
  }

  friend Observable operator*(Observable a, const Observable& b) {
    a.constant_ *= b.constant_;
    for (const auto& f : b.factors_) a.times(f);
    return a;
  }

  double constant() const { return constant_; }
  const std::vector<Factor>& factors() const { return factors_; }

  std::vector<Site2D> support() const {
    std::vector<Site2D> s;
    for (const auto& f : factors_) s.push_back(f.site);
    return s;
  }

  bool positive() const {
    if (!(constant_ > 0)) return false;
    for (const auto& f : factors_)
      if (!(f.plus > 0 && f.minus > 0)) return false;
    return true;
  }

  bool is_constant() const { return factors_.empty(); }

  template <class SpinAt>
  double evaluate(SpinAt&& spin_at) const {
    double v = constant_;
    for (const auto& f : factors_) v *= f(spin_at(f.site));
    return v;
  }

  void check_support(const Box& box) const {
    for (const auto& f : factors_)
      if (!box.contains(f.site)) throw std::invalid_argument("observable support outside box");
  }

 private:
  double constant_ = 1.0;
  std::vector<Factor> factors_;
};

/// Full log-weight of a box configuration (spins indexed by Box::index).
inline double log_weight(const BoxProblem& p, const std::vector<Spin>& sigma) {
  const Box& b = p.box;
  const int bs = boundary_spin(p.boundary);
  long bonds = 0;  // sum of (s s' - 1)
  long mag = 0;
  for (int y = b.y_max; y >= b.y_min; --y)
    for (int x = b.x_min; x <= b.x_max; ++x) {
      const int s = sigma[b.index({x, y})];
      mag += s;
      if (x < b.x_max) bonds += s * sigma[b.index({x + 1, y})] - 1;
      if (y > b.y_min) bonds += s * sigma[b.index({x, y - 1})] - 1;
      if (bs != 0) {
        int outside = (x == b.x_min) + (x == b.x_max) + (y == b.y_min) + (y == b.y_max);
        bonds += outside * (s * bs - 1);
      }
    }
  return p.beta * static_cast<double>(bonds) + p.h * static_cast<double>(mag);
}

/// Local field beta * sum_{y ~ x} sigma_y + h at site x, boundary included.
template <class SpinAt>
double local_field(const BoxProblem& p, Site2D x, SpinAt&& spin_at) {
  const int bs = boundary_spin(p.boundary);
  double f = 0.0;
  const Site2D nb[4] = {{x.x + 1, x.y}, {x.x - 1, x.y}, {x.x, x.y + 1}, {x.x, x.y - 1}};
  for (const auto& y : nb) f += p.box.contains(y) ? spin_at(y) : bs;
  return p.beta * f + p.h;
}

/// Heat-bath probability of +1 given a local field.
inline double heat_bath_plus(double field) { return 1.0 / (1.0 + std::exp(-2.0 * field)); }

}  // namespace layergibbs
