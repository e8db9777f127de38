#pragma once

// Heat-bath Monte Carlo for square boxes with frozen layer spins.
// Checkerboard sweeps; every chain owns an independent stream seeded from
// (seed, chain index), and chains are merged in chain order.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "box.hpp"
#include "estimate.hpp"
#include "stats.hpp"

namespace layergibbs {

struct McConfig {
  std::uint64_t sweeps = 20000;  // total sweeps per chain, burn-in included
  std::uint64_t burn_in = 2000;
  int chains = 4;
  std::uint64_t seed = 20240611;
  int thinning = 1;

  void validate() const {
    if (sweeps == 0) throw std::invalid_argument("McConfig: sweeps must be positive");
    if (burn_in == 0 || burn_in >= sweeps) throw std::invalid_argument("McConfig: need 0 < burn_in < sweeps");
    if (chains < 2) throw std::invalid_argument("McConfig: need at least 2 chains");
    if (thinning < 1) throw std::invalid_argument("McConfig: thinning must be positive");
  }
  std::uint64_t measurements_per_chain() const { return (sweeps - burn_in) / thinning; }
};

/// Worker threads: LAYERGIBBS_THREADS if set, else the hardware count.
inline int thread_count() {
  if (const char* s = std::getenv("LAYERGIBBS_THREADS")) {
    const int v = std::atoi(s);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// State of one chain.
class McLattice {
 public:
  McLattice(int n, double beta, double h, Boundary b, const LayerConstraint& c, std::uint64_t seed, int chain)
      : n_(n), w_(2 * n + 1), stride_(w_ + 2), beta_(beta), h_(h), boundary_(b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chain), 0x9e3779b9u};
    rng_.seed(seq);
    s_.assign(stride_ * stride_, static_cast<std::int8_t>(boundary_spin(b)));
    frozen_.assign(stride_ * stride_, 0);
    for (int y = -n; y <= n; ++y)
      for (int x = -n; x <= n; ++x) s_[idx(x, y)] = 1;
    for (int x = -n; x <= n; ++x) {
      const int f = c.spin(x);
      if (f != 0) {
        s_[idx(x, 0)] = static_cast<std::int8_t>(f);
        frozen_[idx(x, 0)] = 1;
      }
    }
    for (int k = -4; k <= 4; ++k) p_plus_[k + 4] = heat_bath_plus(beta_ * k + h_);
    for (int y = -n; y <= n; ++y)
      for (int x = -n; x <= n; ++x)
        if (!frozen_[idx(x, y)]) sites_[(x + y) & 1].push_back(idx(x, y));
  }

  int n() const { return n_; }
  int spin(int x, int y) const { return s_[idx(x, y)]; }
  int spin(Site2D s) const { return s_[idx(s.x, s.y)]; }
  bool frozen(Site2D s) const { return frozen_[idx(s.x, s.y)] != 0; }

  /// Heat-bath probability of + at a site given its current neighbours.
  double cond_plus(Site2D s) const { return p_plus_[neighbour_sum(idx(s.x, s.y)) + 4]; }

  void sweep() {
    for (int parity = 0; parity < 2; ++parity)
      for (int i : sites_[parity]) {
        const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        s_[i] = u < p_plus_[neighbour_sum(i) + 4] ? 1 : -1;
      }
  }

  LayerConfig layer() const {
    std::vector<Spin> v;
    for (int x = -n_; x <= n_; ++x) v.push_back(spin(x, 0));
    return LayerConfig({-n_, n_}, std::move(v), 1);
  }

  /// Conditional expectation of f given everything outside its support when
  /// no two free support sites are adjacent; the raw value otherwise.
  double rao_blackwell(const Observable& f) const {
    const auto& fac = f.factors();
    bool ok = true;
    for (std::size_t a = 0; a < fac.size() && ok; ++a)
      for (std::size_t b = a + 1; b < fac.size() && ok; ++b) {
        const int d = std::abs(fac[a].site.x - fac[b].site.x) + std::abs(fac[a].site.y - fac[b].site.y);
        if (d == 1 && !frozen(fac[a].site) && !frozen(fac[b].site)) ok = false;
      }
    double v = f.constant();
    for (const auto& g : fac) {
      if (!ok || frozen(g.site)) {
        v *= g(spin(g.site));
      } else {
        const double p = cond_plus(g.site);
        v *= p * g.plus + (1.0 - p) * g.minus;
      }
    }
    return v;
  }

 private:
  int n_, w_, stride_;
  double beta_, h_;
  Boundary boundary_;
  std::vector<std::int8_t> s_;
  std::vector<std::uint8_t> frozen_;
  std::vector<int> sites_[2];
  double p_plus_[9];
  std::mt19937_64 rng_;

  int idx(int x, int y) const { return (n_ + 1 - y) * stride_ + (x + n_ + 1); }
  int neighbour_sum(int i) const { return s_[i - 1] + s_[i + 1] + s_[i - stride_] + s_[i + stride_]; }
};

/// series[o][chain][t] for each measured quantity.
using McSeries = std::vector<std::vector<std::vector<double>>>;

class McEngine {
 public:
  McEngine(int n, double beta, double h, Boundary b = Boundary::plus, McConfig cfg = {}, int threads = 0)
      : n_(n), beta_(beta), h_(h), boundary_(b), cfg_(cfg), threads_(threads > 0 ? threads : thread_count()) {
    if (n < 1) throw std::invalid_argument("McEngine: n must be >= 1");
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    cfg_.validate();
  }

  EngineTag tag() const { return EngineTag::mc; }
  std::string name() const { return "mc"; }
  int half_width() const { return n_; }
  double beta() const { return beta_; }
  double h() const { return h_; }
  Boundary boundary() const { return boundary_; }
  const McConfig& config() const { return cfg_; }
  McEngine with_config(const McConfig& c) const { return McEngine(n_, beta_, h_, boundary_, c, threads_); }
  Box box() const { return Box::square(n_); }

  /// Run every chain; `measure(lattice, out)` fills `nobs` values after each
  /// retained sweep.
  McSeries run(const LayerConstraint& c, int nobs,
               const std::function<void(const McLattice&, double*)>& measure) const {
    check(c);
    McSeries out(nobs, std::vector<std::vector<double>>(cfg_.chains));
    auto work = [&](int chain) {
      McLattice lat(n_, beta_, h_, boundary_, c, cfg_.seed, chain);
      std::vector<double> buf(nobs);
      for (int o = 0; o < nobs; ++o) out[o][chain].reserve(cfg_.measurements_per_chain());
      for (std::uint64_t t = 0; t < cfg_.sweeps; ++t) {
        lat.sweep();
        if (t < cfg_.burn_in || (t - cfg_.burn_in + 1) % cfg_.thinning != 0) continue;
        measure(lat, buf.data());
        for (int o = 0; o < nobs; ++o) out[o][chain].push_back(buf[o]);
      }
    };
    parallel_chains(work);
    return out;
  }

  /// Box samples: callback(lattice, chain) after each retained sweep, in
  /// chain order.
  void for_each_sample(const LayerConstraint& c, const std::function<void(const McLattice&, int)>& cb) const {
    check(c);
    for (int chain = 0; chain < cfg_.chains; ++chain) {
      McLattice lat(n_, beta_, h_, boundary_, c, cfg_.seed, chain);
      for (std::uint64_t t = 0; t < cfg_.sweeps; ++t) {
        lat.sweep();
        if (t < cfg_.burn_in || (t - cfg_.burn_in + 1) % cfg_.thinning != 0) continue;
        cb(lat, chain);
      }
    }
  }

  /// Layer rows of plus-boundary samples without a frozen layer.
  std::vector<LayerConfig> sample_layer() const {
    if (boundary_ != Boundary::plus) throw std::invalid_argument("sample_layer needs plus boundary conditions");
    std::vector<std::vector<LayerConfig>> per(cfg_.chains);
    auto work = [&](int chain) {
      McLattice lat(n_, beta_, h_, boundary_, LayerConstraint::none(), cfg_.seed, chain);
      for (std::uint64_t t = 0; t < cfg_.sweeps; ++t) {
        lat.sweep();
        if (t < cfg_.burn_in || (t - cfg_.burn_in + 1) % cfg_.thinning != 0) continue;
        per[chain].push_back(lat.layer());
      }
    };
    parallel_chains(work);
    std::vector<LayerConfig> all;
    for (auto& v : per) all.insert(all.end(), v.begin(), v.end());
    return all;
  }

  std::vector<Estimate> estimates(const LayerConstraint& c, const std::vector<Observable>& fs) const {
    for (const auto& f : fs) f.check_support(box());
    const auto s = run(c, static_cast<int>(fs.size()), [&](const McLattice& lat, double* out) {
      for (std::size_t o = 0; o < fs.size(); ++o) out[o] = lat.rao_blackwell(fs[o]);
    });
    std::vector<Estimate> r;
    for (std::size_t o = 0; o < fs.size(); ++o) {
      const auto blocks = std::vector<std::vector<double>>{block_means(s[o])};
      const auto jk = stats::jackknife(blocks, [](const std::vector<double>& m) { return m[0]; });
      r.push_back(make(jk.value, jk.error));
      rhat_ = stats::split_rhat(s[o]);
    }
    return r;
  }

  std::vector<double> expectations(const LayerConstraint& c, const std::vector<Observable>& fs) const {
    std::vector<double> v;
    for (const auto& e : estimates(c, fs)) v.push_back(e.value);
    return v;
  }

  Estimate expectation(const LayerConstraint& c, const Observable& f) const { return estimates(c, {f})[0]; }

  /// ln E[fg] / (E[f] E[g]) with a jackknife error over 32 blocks.
  Estimate log_ratio(const LayerConstraint& c, const Observable& f, const Observable& g) const {
    if (!f.positive() || !g.positive()) throw std::invalid_argument("log_ratio needs positive observables");
    if (f.is_constant() || g.is_constant()) return make(0.0, 0.0);
    f.check_support(box());
    g.check_support(box());
    const Observable fg = f * g;
    const auto s = run(c, 3, [&](const McLattice& lat, double* out) {
      out[0] = lat.rao_blackwell(fg);
      out[1] = lat.rao_blackwell(f);
      out[2] = lat.rao_blackwell(g);
    });
    const std::vector<std::vector<double>> blocks{block_means(s[0]), block_means(s[1]), block_means(s[2])};
    const auto jk = stats::jackknife(blocks, [](const std::vector<double>& m) { return std::log(m[0] / (m[1] * m[2])); });
    rhat_ = stats::split_rhat(s[0]);
    return make(jk.value, jk.error);
  }

  /// Split-chain R-hat of the last estimated quantity.
  double last_rhat() const { return rhat_; }

  static constexpr int jackknife_blocks = 32;

 private:
  int n_;
  double beta_, h_;
  Boundary boundary_;
  McConfig cfg_;
  int threads_;
  mutable double rhat_ = 1.0;

  void check(const LayerConstraint& c) const {
    if (c.xi) {
      const auto& w = c.xi->window();
      if (w.j < -n_ || w.k > n_) throw std::invalid_argument("frozen window not inside the layer of the box");
    }
  }

  Estimate make(double v, double err) const {
    Estimate e;
    e.value = v;
    e.error = err;
    e.engine = EngineTag::mc;
    e.n_samples = cfg_.measurements_per_chain() * cfg_.chains;
    e.seed = cfg_.seed;
    return e;
  }

  static std::vector<double> concat(const std::vector<std::vector<double>>& chains) {
    std::vector<double> all;
    for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
    return all;
  }

  static std::vector<double> block_means(const std::vector<std::vector<double>>& chains) {
    return stats::block_means(concat(chains), jackknife_blocks);
  }

  void parallel_chains(const std::function<void(int)>& work) const {
    const int nt = std::min(threads_, cfg_.chains);
    if (nt <= 1) {
      for (int c = 0; c < cfg_.chains; ++c) work(c);
      return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (int c = t; c < cfg_.chains; c += nt) work(c);
      });
    for (auto& th : pool) th.join();
  }
};

}  // namespace layergibbs
