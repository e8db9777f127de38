#pragma once

// Brute-force oracle: Gray-code enumeration of every free spin of a box.
// When the whole layer row is frozen the halves above and below it are
// conditionally independent and are enumerated separately.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "box.hpp"
#include "estimate.hpp"

namespace layergibbs {

struct EnumerationResult {
  double log_z = 0.0;
  std::vector<double> expectations;
};

namespace detail {

// One block of free sites with everything else fixed.
struct GrayBlock {
  std::vector<Site2D> sites;
  std::vector<std::vector<int>> nbr;  // free neighbours inside the block
  std::vector<int> fixed_field;       // sum of fixed neighbour spins (boundary included)
  int var_bonds = 0;                  // bond terms touching a free site
};

inline GrayBlock make_block(const BoxProblem& p, const std::vector<Site2D>& sites,
                            const std::vector<int>& fixed_spin /* by Box::index, 0 = free */) {
  GrayBlock g;
  g.sites = sites;
  const Box& b = p.box;
  std::vector<int> pos(b.volume(), -1);
  for (std::size_t a = 0; a < sites.size(); ++a) pos[b.index(sites[a])] = static_cast<int>(a);
  const int bs = boundary_spin(p.boundary);
  g.nbr.resize(sites.size());
  g.fixed_field.assign(sites.size(), 0);
  for (std::size_t a = 0; a < sites.size(); ++a) {
    const Site2D s = sites[a];
    const Site2D nb[4] = {{s.x + 1, s.y}, {s.x - 1, s.y}, {s.x, s.y + 1}, {s.x, s.y - 1}};
    for (const auto& t : nb) {
      if (!b.contains(t)) {
        if (bs != 0) {
          g.fixed_field[a] += bs;
          ++g.var_bonds;
        }
        continue;
      }
      const int q = pos[b.index(t)];
      if (q >= 0) {
        g.nbr[a].push_back(q);
        if (q > static_cast<int>(a)) ++g.var_bonds;
      } else {
        const int f = fixed_spin[b.index(t)];
        if (f == 0) throw std::logic_error("enumeration block leaks into a free site");
        g.fixed_field[a] += f;
        ++g.var_bonds;
      }
    }
  }
  return g;
}

// Returns log of sum over block configurations of exp(variable log-weight),
// and fills sums[o] with the weighted sum of the block part of observable o
// divided by the partition sum.
inline double enumerate_block(const BoxProblem& p, const GrayBlock& g,
                              const std::vector<Observable>& obs, std::vector<double>& means) {
  const int m = static_cast<int>(g.sites.size());
  means.assign(obs.size(), 1.0);
  if (m == 0) return 0.0;
  std::vector<int> s(m, 1);
  long bsum = 0;
  for (int a = 0; a < m; ++a) {
    for (int q : g.nbr[a])
      if (q > a) bsum += 1;
    bsum += g.fixed_field[a];
  }
  long mag = m;
  long b_max = 0;
  for (int a = 0; a < m; ++a) {
    b_max += std::abs(g.fixed_field[a]);
    for (int q : g.nbr[a])
      if (q > a) ++b_max;
  }
  std::vector<double> eb(2 * b_max + 1), em(2 * m + 1);
  for (long v = -b_max; v <= b_max; ++v) eb[v + b_max] = std::exp(p.beta * double(v - b_max));
  for (int v = -m; v <= m; ++v) em[v + m] = std::exp(p.h * v - std::abs(p.h) * m);

  // map each observable factor onto block positions
  std::vector<std::vector<std::pair<int, const Observable::Factor*>>> ofac(obs.size());
  {
    const Box& b = p.box;
    std::vector<int> pos(b.volume(), -1);
    for (int a = 0; a < m; ++a) pos[b.index(g.sites[a])] = a;
    for (std::size_t o = 0; o < obs.size(); ++o)
      for (const auto& f : obs[o].factors())
        if (b.contains(f.site) && pos[b.index(f.site)] >= 0)
          ofac[o].push_back({pos[b.index(f.site)], &f});
  }

  long double z = 0.0L;
  std::vector<long double> acc(obs.size(), 0.0L);
  const std::uint64_t total = std::uint64_t{1} << m;
  for (std::uint64_t t = 0;; ++t) {
    const long double w = static_cast<long double>(eb[bsum + b_max]) * em[mag + m];
    z += w;
    for (std::size_t o = 0; o < obs.size(); ++o) {
      double v = 1.0;
      for (const auto& [a, f] : ofac[o]) v *= (*f)(s[a]);
      acc[o] += w * v;
    }
    if (t + 1 == total) break;
    const int a = __builtin_ctzll(t + 1);
    long local = g.fixed_field[a];
    for (int q : g.nbr[a]) local += s[q];
    bsum -= 2 * s[a] * local;
    mag -= 2 * s[a];
    s[a] = -s[a];
  }
  for (std::size_t o = 0; o < obs.size(); ++o) means[o] = static_cast<double>(acc[o] / z);
  return static_cast<double>(std::log(z)) + p.beta * double(b_max - g.var_bonds) +
         std::abs(p.h) * m;
}

}  // namespace detail

/// log Z and exact expectations by exhaustive summation. The cap bounds the
/// number of free spins in each independently enumerated block.
inline EnumerationResult enumerate(const BoxProblem& p, const std::vector<Observable>& obs = {},
                                   int cap = 26) {
  p.validate();
  for (const auto& f : obs) f.check_support(p.box);
  const Box& b = p.box;
  std::vector<int> fixed(b.volume(), 0);
  for (int y = b.y_max; y >= b.y_min; --y)
    for (int x = b.x_min; x <= b.x_max; ++x) fixed[b.index({x, y})] = p.frozen_spin({x, y});

  std::vector<std::vector<Site2D>> blocks;
  const bool split = p.layer.xi && b.has_layer() && p.layer.fully_frozen_on(b.x_min, b.x_max);
  if (split) {
    blocks.resize(2);
    for (int y = b.y_max; y >= b.y_min; --y)
      for (int x = b.x_min; x <= b.x_max; ++x)
        if (y > 0) blocks[0].push_back({x, y});
        else if (y < 0) blocks[1].push_back({x, y});
  } else {
    blocks.resize(1);
    for (int y = b.y_max; y >= b.y_min; --y)
      for (int x = b.x_min; x <= b.x_max; ++x)
        if (fixed[b.index({x, y})] == 0) blocks[0].push_back({x, y});
  }
  for (const auto& blk : blocks)
    if (static_cast<int>(blk.size()) > cap) throw std::runtime_error("enumeration too large");

  // constant part: terms among fixed sites only
  const int bs = boundary_spin(p.boundary);
  double log_const = 0.0;
  for (int y = b.y_max; y >= b.y_min; --y)
    for (int x = b.x_min; x <= b.x_max; ++x) {
      const int s = fixed[b.index({x, y})];
      if (s == 0) continue;
      log_const += p.h * s;
      if (x < b.x_max && fixed[b.index({x + 1, y})] != 0)
        log_const += p.beta * (s * fixed[b.index({x + 1, y})] - 1);
      if (y > b.y_min && fixed[b.index({x, y - 1})] != 0)
        log_const += p.beta * (s * fixed[b.index({x, y - 1})] - 1);
      if (bs != 0) {
        const int outside = (x == b.x_min) + (x == b.x_max) + (y == b.y_min) + (y == b.y_max);
        log_const += p.beta * outside * (s * bs - 1);
      }
    }

  EnumerationResult r;
  r.log_z = log_const;
  r.expectations.assign(obs.size(), 0.0);
  for (std::size_t o = 0; o < obs.size(); ++o) {
    double c = obs[o].constant();
    for (const auto& f : obs[o].factors()) {
      const int s = fixed[b.index(f.site)];
      if (s != 0) c *= f(s);
    }
    r.expectations[o] = c;
  }
  std::vector<double> means;
  for (const auto& blk : blocks) {
    const auto g = detail::make_block(p, blk, fixed);
    r.log_z += detail::enumerate_block(p, g, obs, means);
    for (std::size_t o = 0; o < obs.size(); ++o) r.expectations[o] *= means[o];
  }
  return r;
}

inline double partition_function(const BoxProblem& p, int cap = 26) {
  return enumerate(p, {}, cap).log_z;
}

inline Estimate expectation(const BoxProblem& p, const Observable& f, int cap = 26) {
  return Estimate::exact(enumerate(p, {f}, cap).expectations[0]);
}

inline Estimate covariance(const BoxProblem& p, const Observable& f, const Observable& g,
                           int cap = 26) {
  auto r = enumerate(p, {f, g, f * g}, cap);
  return Estimate::exact(r.expectations[2] - r.expectations[0] * r.expectations[1]);
}

/// Enumeration oracle behind the kernel-engine interface (square box).
class EnumerationEngine {
 public:
  EnumerationEngine(int n, double beta, double h, Boundary b = Boundary::plus, int cap = 26)
      : n_(n), beta_(beta), h_(h), boundary_(b), cap_(cap) {
    if (n < 1) throw std::invalid_argument("EnumerationEngine: n must be >= 1");
  }

  EngineTag tag() const { return EngineTag::exact; }
  std::string name() const { return "enumeration"; }
  int half_width() const { return n_; }
  double beta() const { return beta_; }
  double h() const { return h_; }
  Boundary boundary() const { return boundary_; }

  BoxProblem problem(const LayerConstraint& c) const {
    return BoxProblem::square(n_, beta_, h_, boundary_, c);
  }

  double log_partition(const LayerConstraint& c) const { return enumerate(problem(c), {}, cap_).log_z; }

  std::vector<double> expectations(const LayerConstraint& c, const std::vector<Observable>& f) const {
    return enumerate(problem(c), f, cap_).expectations;
  }
  Estimate expectation(const LayerConstraint& c, const Observable& f) const {
    return Estimate::exact(expectations(c, {f})[0]);
  }
  Estimate log_ratio(const LayerConstraint& c, const Observable& f, const Observable& g) const {
    auto e = expectations(c, {f * g, f, g});
    return Estimate::exact(std::log(e[0] / (e[1] * e[2])));
  }

 private:
  int n_;
  double beta_, h_;
  Boundary boundary_;
  int cap_;
};

}  // namespace layergibbs
