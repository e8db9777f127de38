#pragma once

// Kernel-engine contract and the layer kernels gamma_V built on it.

#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <vector>

#include "box.hpp"
#include "enumerate.hpp"
#include "estimate.hpp"

namespace layergibbs {

template <class E>
concept KernelEngine = requires(const E& e, const LayerConstraint& c, const Observable& f) {
  { e.tag() } -> std::same_as<EngineTag>;
  { e.beta() } -> std::convertible_to<double>;
  { e.h() } -> std::convertible_to<double>;
  { e.half_width() } -> std::convertible_to<int>;
  { e.boundary() } -> std::same_as<Boundary>;
  { e.expectation(c, f) } -> std::same_as<Estimate>;
  { e.log_ratio(c, f, f) } -> std::same_as<Estimate>;
};

/// Engines that also return log partition functions exactly.
template <class E>
concept ExactKernelEngine = KernelEngine<E> && requires(const E& e, const LayerConstraint& c) {
  { e.log_partition(c) } -> std::convertible_to<double>;
};

/// Configuration that agrees with sigma on V and with omega elsewhere.
inline LayerConfig splice(const SiteSet& v, const LayerConfig& sigma, const LayerConfig& omega) {
  LayerConfig r = omega;
  for (int i : v) r = r.with(i, sigma(i));
  return r;
}

/// ln gamma_V(sigma_V | omega) for the layer restriction of the box measure,
/// conditioned on the layer sites in `kept` (all layer sites when empty);
/// the other layer sites are summed over.
template <ExactKernelEngine E>
double log_layer_kernel(const E& e, const SiteSet& v, const LayerConfig& sigma, const LayerConfig& omega,
                        const SiteSet& others_free = {}) {
  const int n = e.half_width();
  for (int i : v)
    if (i < -n || i > n) throw std::invalid_argument("kernel volume outside the layer of the box");
  const LayerConfig joint = splice(v, sigma, omega).restricted({-n, n}, 1);
  const LayerConfig cond = omega.restricted({-n, n}, 1);
  SiteSet free_all = others_free;
  free_all.insert(free_all.end(), v.begin(), v.end());
  return e.log_partition(LayerConstraint::frozen(joint, others_free)) -
         e.log_partition(LayerConstraint::frozen(cond, free_all));
}

/// gamma_V(sigma_V | omega): exact, or estimated as a frequency by an MC engine.
template <KernelEngine E>
Estimate layer_kernel(const E& e, const SiteSet& v, const LayerConfig& sigma, const LayerConfig& omega) {
  if constexpr (ExactKernelEngine<E>) {
    return Estimate::exact(std::exp(log_layer_kernel(e, v, sigma, omega)));
  } else {
    const int n = e.half_width();
    Observable f;
    for (int i : v) f = f * Observable::indicator({i, 0}, sigma(i));
    return e.expectation(LayerConstraint::frozen(omega.restricted({-n, n}, 1), v), f);
  }
}

/// Max deviation between the exact single-site conditional law and the
/// heat-bath formula, over every neighbour configuration of positive weight.
inline double dlr_check(const BoxProblem& p, Site2D x, int cap = 26) {
  if (!p.box.contains(x) || p.frozen_spin(x) != 0) throw std::invalid_argument("dlr_check needs a free site");
  const Site2D nb[4] = {{x.x + 1, x.y}, {x.x - 1, x.y}, {x.x, x.y + 1}, {x.x, x.y - 1}};
  std::vector<Site2D> inner;
  for (const auto& y : nb)
    if (p.box.contains(y)) inner.push_back(y);
  std::vector<Observable> obs;
  const int k = static_cast<int>(inner.size());
  for (int mask = 0; mask < (1 << k); ++mask) {
    Observable g;
    for (int a = 0; a < k; ++a) g = g * Observable::indicator(inner[a], (mask >> a) & 1 ? -1 : 1);
    obs.push_back(g);
    obs.push_back(g * Observable::indicator(x, 1));
  }
  const auto r = enumerate(p, obs, cap);
  double worst = 0.0;
  for (int mask = 0; mask < (1 << k); ++mask) {
    const double pn = r.expectations[2 * mask], pj = r.expectations[2 * mask + 1];
    if (pn < 1e-300) continue;
    auto spin_at = [&](Site2D s) {
      for (int a = 0; a < k; ++a)
        if (inner[a] == s) return (mask >> a) & 1 ? -1 : 1;
      return 0;
    };
    const double expect = heat_bath_plus(local_field(p, x, spin_at));
    worst = std::max(worst, std::abs(pj / pn - expect));
  }
  return worst;
}

}  // namespace layergibbs
