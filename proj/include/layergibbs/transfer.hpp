#pragma once

// Exact engine for square boxes {-n..n}^2: a site-by-site row transfer sweep.
// The weight of the rows strictly above the layer, as a function of row 1,
// is built once; by the y -> -y symmetry of the square the same vector
// serves the rows below. Queries with a fully frozen layer then cost
// O(2^w) and partially frozen layers O(w 2^w), w = 2n + 1.

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "box.hpp"
#include "estimate.hpp"

namespace layergibbs {

class ExactEngine {
 public:
  static constexpr int max_width = 21;

  ExactEngine(int n, double beta, double h, Boundary b = Boundary::plus)
      : n_(n), w_(2 * n + 1), beta_(beta), h_(h), boundary_(b) {
    if (n < 1) throw std::invalid_argument("ExactEngine: n must be >= 1");
    if (w_ > max_width) throw std::runtime_error("enumeration too large");
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    e2b_ = std::exp(-2.0 * beta_);
    pop_.resize(w_ + 1);
    for (int k = 0; k <= w_; ++k) pop_[k] = std::exp(-2.0 * beta_ * k);
    build_half();
  }

  EngineTag tag() const { return EngineTag::exact; }
  std::string name() const { return "transfer"; }
  int half_width() const { return n_; }
  double beta() const { return beta_; }
  double h() const { return h_; }
  Boundary boundary() const { return boundary_; }

  double log_partition(const LayerConstraint& c) const {
    const std::string key = c.to_string();
    {
      std::lock_guard<std::mutex> lock(memo_mutex_);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    const double v = log_z_with(c, Observable());
    std::lock_guard<std::mutex> lock(memo_mutex_);
    memo_.emplace(key, v);
    return v;
  }

  std::vector<double> expectations(const LayerConstraint& c, const std::vector<Observable>& fs) const {
    check(c);
    std::vector<double> out;
    if (fully_frozen(c) && all_near(fs)) {
      const auto top = half_weights(c, +1), bot = half_weights(c, -1);
      for (const auto& f : fs) out.push_back(frozen_expectation(c, f, top, bot));
      return out;
    }
    const double lz = log_partition(c);
    for (const auto& f : fs) {
      f.check_support(box());
      out.push_back(signed_ratio(c, f, lz));
    }
    return out;
  }

  Estimate expectation(const LayerConstraint& c, const Observable& f) const {
    return Estimate::exact(expectations(c, {f})[0]);
  }

  /// ln E[fg] / (E[f] E[g]) for strictly positive f, g.
  Estimate log_ratio(const LayerConstraint& c, const Observable& f, const Observable& g) const {
    check(c);
    if (!f.positive() || !g.positive()) throw std::invalid_argument("log_ratio needs positive observables");
    if (fully_frozen(c) && all_near({f, g})) {
      // halves are independent: the ratio factorizes, and each factor is
      // computed from a centred covariance to avoid cancellation
      double r = 0.0;
      for (int side : {+1, -1}) {
        const auto p = half_weights(c, side);
        const int row = side;
        double s0 = 0, sf = 0, sg = 0;
        const std::size_t ns = p.size();
        std::vector<double> fv(ns), gv(ns);
        for (std::size_t u = 0; u < ns; ++u) {
          fv[u] = row_factor(f, row, u);
          gv[u] = row_factor(g, row, u);
          s0 += p[u];
          sf += p[u] * fv[u];
          sg += p[u] * gv[u];
        }
        const double mf = sf / s0, mg = sg / s0;
        double cov = 0;
        for (std::size_t u = 0; u < ns; ++u) cov += p[u] * (fv[u] - mf) * (gv[u] - mg);
        cov /= s0;
        r += std::log1p(cov / (mf * mg));
      }
      return Estimate::exact(r);
    }
    const double lz = log_partition(c);
    const double lfg = log_z_with(c, f * g), lf = log_z_with(c, f), lg = log_z_with(c, g);
    return Estimate::exact(lfg + lz - lf - lg);
  }

  Box box() const { return Box::square(n_); }

 private:
  int n_, w_;
  double beta_, h_;
  Boundary boundary_;
  double e2b_;
  std::vector<double> pop_;
  std::vector<double> half_;  // rows n..1 as a function of row 1 (normalized)
  double half_log_ = 0.0;
  std::vector<double> below_;  // half_ pushed through the bonds to row 0
  mutable std::map<std::string, double> memo_;
  mutable std::mutex memo_mutex_;

  int col(int x) const { return x + n_; }

  void check(const LayerConstraint& c) const {
    if (c.xi) {
      const auto& w = c.xi->window();
      if (w.j < -n_ || w.k > n_) throw std::invalid_argument("frozen window not inside the layer of the box");
    }
  }

  bool fully_frozen(const LayerConstraint& c) const { return c.fully_frozen_on(-n_, n_); }

  static bool near(const Observable& f) {
    for (const auto& s : f.support())
      if (s.y < -1 || s.y > 1) return false;
    return true;
  }
  static bool all_near(const std::vector<Observable>& fs) {
    for (const auto& f : fs)
      if (!near(f)) return false;
    return true;
  }

  double bf(int s) const {  // boundary bond factor for spin s on an edge
    const int b = boundary_spin(boundary_);
    return b == 0 ? 1.0 : (s == b ? 1.0 : e2b_);
  }

  // Product of the factors of f sitting on `row`, for row configuration u
  // (bit c set means minus at column c).
  double row_factor(const Observable& f, int row, std::uint64_t u) const {
    double v = 1.0;
    for (const auto& fac : f.factors())
      if (fac.site.y == row) v *= ((u >> col(fac.site.x)) & 1u) ? fac.minus : fac.plus;
    return v;
  }

  // Add one site at column c of row y. Bit c of the state holds the spin
  // above; after the update it holds the new spin. sf[0], sf[1] are the
  // single-site factors for +, -.
  void apply_site(std::vector<double>& v, int c, int y, const double sf[2]) const {
    const std::size_t m = std::size_t{1} << c;
    const bool top = (y == n_);
    double K[2][2];  // K[new][old]
    if (top) {
      K[0][0] = K[0][1] = bf(+1);
      K[1][0] = K[1][1] = bf(-1);
    } else {
      K[0][0] = K[1][1] = 1.0;
      K[0][1] = K[1][0] = e2b_;
    }
    double L[2][2];  // L[new][left]
    const bool edge = (c == 0);
    for (int a = 0; a < 2; ++a)
      for (int l = 0; l < 2; ++l) L[a][l] = edge ? bf(a ? -1 : 1) : (a == l ? 1.0 : e2b_);
    const std::size_t ns = v.size();
    for (std::size_t s = 0; s < ns; ++s) {
      if (s & m) continue;
      const double a0 = v[s], a1 = v[s | m];
      const int l = edge ? 0 : static_cast<int>((s >> (c - 1)) & 1u);
      v[s] = (a0 * K[0][0] + a1 * K[0][1]) * L[0][l] * sf[0];
      v[s | m] = (a0 * K[1][0] + a1 * K[1][1]) * L[1][l] * sf[1];
    }
  }

  double renormalize(std::vector<double>& v) const {
    double mx = 0.0;
    for (double a : v) mx = std::max(mx, std::abs(a));
    if (mx == 0.0) return 0.0;
    for (double& a : v) a /= mx;
    return std::log(mx);
  }

  void site_factors(int x, int y, const LayerConstraint& c, const Observable& f, double sf[2]) const {
    for (int a = 0; a < 2; ++a) {
      const int s = a ? -1 : 1;
      double v = std::exp(h_ * s);
      if (x == n_) v *= bf(s);
      if (y == -n_) v *= bf(s);
      if (y == 0) {
        const int fr = c.spin(x);
        if (fr != 0 && fr != s) v = 0.0;
      }
      for (const auto& fac : f.factors())
        if (fac.site.x == x && fac.site.y == y) v *= fac(s);
      sf[a] = v;
    }
  }

  void build_half() {
    std::vector<double> v(std::size_t{1} << w_, 0.0);
    v[0] = 1.0;
    half_log_ = 0.0;
    const LayerConstraint none;
    const Observable one;
    for (int y = n_; y >= 1; --y) {
      for (int x = -n_; x <= n_; ++x) {
        double sf[2];
        site_factors(x, y, none, one, sf);
        apply_site(v, col(x), y, sf);
      }
      half_log_ += renormalize(v);
    }
    half_ = v;
    below_ = v;
    butterfly(below_);
  }

  // W[s] <- sum_u W[u] prod_c exp(beta (s_c u_c - 1))
  void butterfly(std::vector<double>& W) const {
    const std::size_t ns = W.size();
    for (int c = 0; c < w_; ++c) {
      const std::size_t m = std::size_t{1} << c;
      for (std::size_t s = 0; s < ns; ++s) {
        if (s & m) continue;
        const double a = W[s], b = W[s | m];
        W[s] = a + e2b_ * b;
        W[s | m] = e2b_ * a + b;
      }
    }
  }

  std::uint64_t layer_bits(const LayerConstraint& c) const {
    std::uint64_t eta = 0;
    for (int x = -n_; x <= n_; ++x)
      if (c.spin(x) < 0) eta |= std::uint64_t{1} << col(x);
    return eta;
  }

  // log-weight of the frozen layer row by itself
  double layer_constant(const LayerConstraint& c) const {
    double lw = 0.0;
    for (int x = -n_; x <= n_; ++x) {
      const int s = c.spin(x);
      lw += h_ * s;
      if (x < n_ && s != c.spin(x + 1)) lw -= 2.0 * beta_;
    }
    lw += std::log(bf(c.spin(-n_))) + std::log(bf(c.spin(n_)));
    return lw;
  }

  // Unnormalized weights over the row-side configuration given a frozen layer.
  std::vector<double> half_weights(const LayerConstraint& c, int /*side*/) const {
    const std::uint64_t eta = layer_bits(c);
    std::vector<double> p(half_.size());
    for (std::size_t u = 0; u < p.size(); ++u) p[u] = half_[u] * pop_[std::popcount(u ^ eta)];
    return p;
  }

  double frozen_expectation(const LayerConstraint& c, const Observable& f, const std::vector<double>& top,
                            const std::vector<double>& bot) const {
    double v = f.constant();
    for (const auto& fac : f.factors())
      if (fac.site.y == 0) v *= fac(c.spin(fac.site.x));
    for (int side : {+1, -1}) {
      const auto& p = side > 0 ? top : bot;
      double s0 = 0, s1 = 0;
      for (std::size_t u = 0; u < p.size(); ++u) {
        s0 += p[u];
        s1 += p[u] * row_factor(f, side, u);
      }
      v *= s1 / s0;
    }
    return v;
  }

  // log of the (possibly signed) sum Z_f; for signed f returns the ratio via signed_ratio.
  double log_z_with(const LayerConstraint& c, const Observable& f) const {
    const auto [val, lg] = weighted_sum(c, f);
    if (!(val > 0)) throw std::domain_error("non-positive weighted sum");
    return std::log(val) + lg;
  }

  double signed_ratio(const LayerConstraint& c, const Observable& f, double log_z) const {
    const auto [val, lg] = weighted_sum(c, f);
    return val * std::exp(lg - log_z);
  }

  // Returns (value, log scale) with Z_f = value * exp(log scale).
  std::pair<double, double> weighted_sum(const LayerConstraint& c, const Observable& f) const {
    f.check_support(box());
    if (fully_frozen(c) && near(f)) {
      const auto p = half_weights(c, +1);
      double st = 0, sb = 0;
      for (std::size_t u = 0; u < p.size(); ++u) {
        st += p[u] * row_factor(f, +1, u);
        sb += p[u] * row_factor(f, -1, u);
      }
      double v = f.constant();
      for (const auto& fac : f.factors())
        if (fac.site.y == 0) v *= fac(c.spin(fac.site.x));
      return {v * st * sb, 2.0 * half_log_ + layer_constant(c)};
    }
    if (near(f)) {
      // rows 1 and -1 enter diagonally; only the layer row is swept
      std::vector<double> v = half_;
      for (std::size_t u = 0; u < v.size(); ++u) v[u] *= row_factor(f, +1, u);
      for (int x = -n_; x <= n_; ++x) {
        double sf[2];
        site_factors(x, 0, c, f, sf);
        apply_site(v, col(x), 0, sf);
      }
      const std::vector<double>* W = &below_;
      std::vector<double> wb;
      bool has_bottom = false;
      for (const auto& fac : f.factors()) has_bottom |= (fac.site.y == -1);
      if (has_bottom) {
        wb = half_;
        for (std::size_t u = 0; u < wb.size(); ++u) wb[u] *= row_factor(f, -1, u);
        butterfly(wb);
        W = &wb;
      }
      long double acc = 0.0L;
      for (std::size_t s = 0; s < v.size(); ++s) acc += static_cast<long double>(v[s]) * (*W)[s];
      return {static_cast<double>(acc) * f.constant(), 2.0 * half_log_};
    }
    // full sweep over every row
    std::vector<double> v(std::size_t{1} << w_, 0.0);
    v[0] = 1.0;
    double lg = 0.0;
    for (int y = n_; y >= -n_; --y) {
      for (int x = -n_; x <= n_; ++x) {
        double sf[2];
        site_factors(x, y, c, f, sf);
        apply_site(v, col(x), y, sf);
      }
      lg += renormalize(v);
    }
    long double acc = 0.0L;
    for (double a : v) acc += a;
    return {static_cast<double>(acc) * f.constant(), lg};
  }
};

}  // namespace layergibbs
