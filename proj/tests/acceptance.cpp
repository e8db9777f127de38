// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [id ...]   (all criteria when no id is given)

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "layergibbs/layergibbs.hpp"

using namespace layergibbs;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string f3(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

std::vector<LayerConfig> all_configs(const LayerInterval& w) {
  std::vector<LayerConfig> out;
  for (ConfigBits b = 0; b < (ConfigBits(1) << w.size()); ++b) out.push_back(embed(LayerConfig::all_plus(), w, b).restricted(w, 1));
  return out;
}

McConfig mc_config(std::uint64_t sweeps, std::uint64_t seed, int chains = 4) {
  McConfig c;
  c.sweeps = sweeps;
  c.burn_in = std::max<std::uint64_t>(1000, sweeps / 10);
  c.chains = chains;
  c.seed = seed;
  return c;
}

std::vector<LayerConfig> layer_samples(int n, double beta, double h, std::uint64_t sweeps, std::uint64_t seed) {
  return McEngine(n, beta, h, Boundary::plus, mc_config(sweeps, seed)).sample_layer();
}

/// all-minus, alternating, all-plus and eight layer samples.
std::vector<StressConfig> stress_set(double beta, double h, std::uint64_t seed, int width = 60) {
  std::vector<StressConfig> s{{"all-minus", LayerConfig::constant({-width, width}, -1)},
                              {"alternating", LayerConfig::alternating({-width, width})},
                              {"all-plus", LayerConfig::all_plus()}};
  const auto samples = layer_samples(24, beta, h, 8000, seed);
  for (int q = 0; q < 8; ++q) s.push_back({"sample" + std::to_string(q), samples[(q + 1) * samples.size() / 9]});
  return s;
}

// ---- criteria

Outcome c1_moebius() {
  double worst_moebius = 0.0, worst_vacuum = 0.0;
  const LayerInterval w(-2, 2);
  for (double beta : {0.0, 0.3, 0.6}) {
    ExactEngine e(3, beta, 0.0, Boundary::plus);
    LayerPotentials lp(e);
    for (const auto& xi : all_configs(w)) {
      for (int a = w.j; a <= w.k; ++a)
        for (int b = a; b <= w.k; ++b) {
          SiteSet v;
          for (int i = a; i <= b; ++i) v.push_back(i);
          worst_moebius = std::max(worst_moebius, verify_moebius(lp, v, xi));
        }
      for (const auto& a : subsets_of(w)) {
        bool has_plus = false;
        for (int i : a) has_plus |= xi(i) > 0;
        if (has_plus) worst_vacuum = std::max(worst_vacuum, std::abs(lp.vacuum(a, xi).value));
      }
    }
  }
  return {worst_moebius < 1e-9 && worst_vacuum < 1e-12,
          "max Moebius residual " + f3(worst_moebius) + ", max vacuum value " + f3(worst_vacuum)};
}

Outcome c2_telescoping() {
  double worst_tel = 0.0, worst_res = 0.0, worst_closed = 0.0;
  const LayerInterval w(-2, 2);
  for (double beta : {0.0, 0.3, 0.6}) {
    ExactEngine e(3, beta, 0.0, Boundary::plus);
    LayerPotentials lp(e);
    for (const auto& xi : all_configs(w)) {
      for (int a = w.j; a <= w.k; ++a)
        for (int b = a; b <= w.k; ++b) worst_tel = std::max(worst_tel, verify_telescoping_identity(lp, {a, b}, xi));
      for (int m = 0; m <= 4; ++m) worst_res = std::max(worst_res, verify_resummation(lp, 2, m, xi));
    }
    for (const auto& xi : all_configs({-3, 3}))
      for (int j = -3; j <= 3; ++j)
        for (int k = j; k <= std::min(3, j + 3); ++k)
          worst_closed = std::max(worst_closed, std::abs(lp.telescope_closed({j, k}, xi).value -
                                                         lp.interval_abstract({j, k}, xi).value));
  }
  return {worst_tel < 1e-9 && worst_res < 1e-9 && worst_closed < 1e-6,
          "telescoping " + f3(worst_tel) + ", resummation " + f3(worst_res) + ", closed vs abstract " + f3(worst_closed)};
}

Outcome c3_sign_magnitude() {
  double max_pair = -1e300, max_ratio = 0.0;
  int cases = 0;
  for (int n : {3, 4}) {
    const LayerInterval w(-n, n);
    for (double beta : {0.1, 0.3, 0.6, 1.0}) {
      ExactEngine e(n, beta, 0.0, Boundary::plus);
      LayerPotentials lp(e);
      for (const auto& xi : all_configs(w))
        for (int j = -n; j <= n; ++j)
          for (int k = j; k <= n; ++k) {
            const double u = lp.telescope_closed({j, k}, xi).value;
            if (j < k) max_pair = std::max(max_pair, u);
            max_ratio = std::max(max_ratio, std::abs(u) / beta);
            ++cases;
          }
    }
  }
  return {max_pair <= 1e-10 && max_ratio <= 10.0,
          std::to_string(cases) + " values; max U(j<k) " + f3(max_pair) + ", max |U|/beta " + f3(max_ratio)};
}

/// Activated potential: U([k-L, k]) with both endpoints set to minus.
std::vector<DecayPoint> activated_curve(const LayerPotentials<ExactEngine>& lp, const LayerConfig& xi, int k,
                                        int lmin, int lmax) {
  std::vector<DecayPoint> pts;
  for (int len = lmin; len <= lmax; ++len) {
    const LayerConfig act = xi.with(std::vector<int>{k - len, k}, -1);
    pts.push_back({len, std::abs(lp.telescope_closed_centered({k - len, k}, act).value), 0.0});
  }
  return pts;
}

Outcome c4_decay() {
  const double beta = 0.7;
  const auto samples = layer_samples(24, beta, 0.0, 40000, 404);
  ExactEngine e(10, beta, 0.0, Boundary::plus);
  LayerPotentials lp(e);
  int ok = 0;
  std::string lam;
  for (int q = 0; q < 8; ++q) {
    const LayerConfig& xi = samples[(q + 1) * samples.size() / 9];
    const auto prof = ell_profile(xi, {-8, 8}, 1.0, Direction::minus);
    // anchor: site nearest the origin whose ell^- leaves at least four lengths
    int k = 0;
    for (int d = 0; d <= 8; ++d) {
      if (prof.at(d) <= 8) { k = d; break; }
      if (prof.at(-d) <= 8) { k = -d; break; }
    }
    const int l = prof.at(k);
    int minus = 0;
    for (int i = -10; i <= 10; ++i) minus += xi(i) < 0;
    lam += " (k=" + std::to_string(k) + " ell=" + std::to_string(l) + " minus=" + std::to_string(minus) + ")";
    try {
      DecayFitOptions o;
      o.min_length = l;
      const auto fit = decay_fit(activated_curve(lp, xi, k, std::max(2, l + 1), 12), o);
      ok += fit.positive();
      lam += " " + f3(fit.lambda) + "[" + f3(fit.lambda_ci.lo) + "," + f3(fit.lambda_ci.hi) + "]";
    } catch (const DecayUnresolvable&) {
      lam += " unresolved";
    }
  }
  return {ok == 8, std::to_string(ok) + "/8 fits with CI above 0;" + lam};
}

Outcome uniform_regime(double beta, double h, std::uint64_t seed) {
  ExactEngine e(10, beta, h, Boundary::plus);
  LayerPotentials lp(e);
  const auto stress = stress_set(beta, h, seed);
  std::vector<int> lengths;
  for (int l = 2; l <= 12; ++l) lengths.push_back(l);
  auto pot = [&](const LayerConfig& xi, int len) {
    std::vector<Estimate> out;
    for (int k : {-1, 0, 1}) out.push_back(lp.telescope_closed_centered({k - len, k}, xi));
    return out;
  };
  const auto worst = worst_case_scan(lengths, stress, pot);
  const auto minus = worst_case_scan(lengths, {stress[0]}, pot);
  const bool pass = worst.pass() && minus.pass();
  std::string d = "beta=" + f3(beta) + " h=" + f3(h) + ": ";
  if (worst.fit) d += "worst lambda " + f3(worst.fit->lambda) + " CI [" + f3(worst.fit->lambda_ci.lo) + "," + f3(worst.fit->lambda_ci.hi) + "]";
  else d += "worst " + worst.failure;
  if (minus.fit) d += ", all-minus lambda " + f3(minus.fit->lambda) + " CI [" + f3(minus.fit->lambda_ci.lo) + "," + f3(minus.fit->lambda_ci.hi) + "]";
  else d += ", all-minus " + minus.failure;
  return {pass, d};
}

Outcome c5_uniform() {
  const auto a = uniform_regime(0.8, 0.5, 505);
  const auto b = uniform_regime(0.3, 0.0, 506);
  return {a.pass && b.pass, a.detail + "; " + b.detail};
}

Outcome c6_decimation() {
  const double beta = 0.8;
  ExactEngine e(10, beta, 0.0, Boundary::plus);
  const auto stress = stress_set(beta, 0.0, 606);
  const auto reg = decimated_decay_scan(DecimationScheme::regular(5), e, {5, 10, 15, 20}, stress);
  std::vector<int> lengths;
  for (int l = 2; l <= 12; ++l) lengths.push_back(l);
  const auto rnd = decimated_decay_scan(DecimationScheme::random(0.2, 2024), e, lengths, stress, 10);
  // margin identity, in units of beta, for all k <= 100
  bool identity = true, thresholds = true;
  const LayerConfig minus = LayerConfig::constant({0, 100}, -1);
  for (int b = 2; b <= 10; ++b) {
    const auto m = mask_margin(DecimationScheme::regular(b), 100, minus, beta);
    const auto p = mask_margin(DecimationScheme::regular(b), 100, LayerConfig::all_plus(), beta);
    for (int k = 0; k <= 100; ++k) {
      const long kept = k / b + 1;
      identity &= m.literal[k] == 2L * k - 8L * kept && m.indicator[k] == 2L * k - 4L * kept && p.literal[k] == 2L * k;
    }
    thresholds &= (m.literal_onset >= 0) == (b > 4) && (m.indicator_onset >= 0) == (b > 2);
  }
  {
    const auto s = DecimationScheme::random(0.25, 99);
    const auto mask = make_mask(s, {0, 100});
    const auto m = mask_margin(s, 100, minus, beta);
    for (int k = 0; k <= 100; ++k) {
      long kept = 0;
      for (int i : mask) kept += i <= k;
      identity &= m.literal[k] == 2L * k - 8L * kept;
    }
  }
  auto desc = [](const ScanResult& r) {
    return r.fit ? f3(r.fit->lambda) + " CI [" + f3(r.fit->lambda_ci.lo) + "," + f3(r.fit->lambda_ci.hi) + "]" +
                       " on " + std::to_string(r.fit->used.size()) + " lengths"
                 : r.failure;
  };
  return {reg.pass() && rnd.pass() && identity && thresholds,
          "b=5 lambda " + desc(reg) + "; p=0.2 lambda " + desc(rnd) + "; margin identity " +
              (identity ? "ok" : "BROKEN") + ", thresholds b>4/b>2 " + (thresholds ? "ok" : "BROKEN")};
}

Outcome c7_dobrushin() {
  const int n = 6;
  ExactEngine e(n, 0.6, 0.0, Boundary::plus);
  LayerPotentials lp(e);
  std::mt19937_64 rng(707);
  std::vector<LayerConfig> omegas{LayerConfig::all_plus(), LayerConfig::constant({-n, n}, -1),
                                  LayerConfig::alternating({-n, n})};
  for (int r = 0; r < 2; ++r) {
    std::vector<Spin> v;
    for (int i = -n; i <= n; ++i) v.push_back(rng() % 3 == 0 ? -1 : 1);
    omegas.emplace_back(LayerInterval(-n, n), v, 1);
  }
  double worst = 0.0, trunc = 0.0;
  for (const auto& w : omegas) {
    const auto r = dobrushin_expectation([](const LayerConfig& s) { return s(0) > 0 ? 1.0 : 0.0; }, {0, 0}, w, lp, 2 * n);
    const double g = std::exp(log_layer_kernel(e, {0}, LayerConfig::all_plus(), w));
    worst = std::max(worst, std::abs(r.value.value - g) - r.truncation.value);
    trunc = std::max(trunc, r.truncation.value);
  }
  return {worst < 1e-6, "max |R - gamma| minus truncation " + f3(worst) + " (truncation " + f3(trunc) + ")"};
}

Outcome c8_thermo() {
  std::vector<std::string> notes;
  bool pass = true;
  // partition identity
  double worst_z = 0.0;
  for (double beta : {0.3, 0.6}) {
    ExactEngine e(3, beta, 0.0, Boundary::plus);
    LayerPotentials lp(e);
    for (int r = 1; r <= 3; ++r)
      worst_z = std::max(worst_z, std::abs(log_partition_free_table(lp, {-r, r}).value -
                                           log_partition_free_kernel(e, {-r, r}).value));
  }
  pass &= worst_z < 1e-8;
  notes.push_back("partition identity " + f3(worst_z));
  // exact variational gap grid
  const double beta = 0.6;
  ExactEngine e(3, beta, 0.0, Boundary::plus);
  LayerPotentials lp(e);
  const LayerInterval v(-1, 1);
  std::vector<LayerConfig> omegas{LayerConfig::all_plus(), LayerConfig::constant({-3, 3}, -1),
                                  LayerConfig::alternating({-3, 3}), LayerConfig({-3, 3}, {1, -1, -1, 1, 1, -1, 1}, 1)};
  std::vector<EmpiricalMarginal> ms{EmpiricalMarginal::uniform(v)};
  {
    ExactEngine em(3, beta, 0.0, Boundary::minus);
    const double lz = em.log_partition(LayerConstraint::none());
    std::map<ConfigBits, double> p;
    for (ConfigBits b = 0; b < 8; ++b) {
      SiteSet others{-3, -2, 2, 3};
      p[b] = std::exp(em.log_partition(LayerConstraint::frozen(embed(LayerConfig::all_plus(), v, b).restricted({-3, 3}, 1), others)) - lz);
    }
    long double s = 0.0L;
    for (auto& [b, q] : p) s += q;
    for (auto& [b, q] : p) q /= static_cast<double>(s);
    ms.push_back(EmpiricalMarginal::from_distribution(v, p));
  }
  std::mt19937_64 rng(808);
  std::gamma_distribution<double> gam(0.5, 1.0);
  for (int r = 0; r < 3; ++r) {
    std::map<ConfigBits, double> p;
    double s = 0.0;
    for (ConfigBits b = 0; b < 8; ++b) s += (p[b] = gam(rng));
    for (auto& [b, q] : p) q /= s;
    ms.push_back(EmpiricalMarginal::from_distribution(v, p));
  }
  double min_gap = 1e300, self_gap = 0.0;
  for (const auto& w : omegas) {
    std::map<ConfigBits, double> g;
    for (ConfigBits b = 0; b < 8; ++b)
      g[b] = std::exp(log_layer_kernel(e, {-1, 0, 1}, embed(LayerConfig::all_plus(), v, b), w));
    long double s = 0.0L;
    for (auto& [b, q] : g) s += q;
    for (auto& [b, q] : g) q /= static_cast<double>(s);
    self_gap = std::max(self_gap, std::abs(variational_gap(EmpiricalMarginal::from_distribution(v, g), w, lp).value));
    for (const auto& m : ms) min_gap = std::min(min_gap, variational_gap(m, w, lp).value);
  }
  pass &= min_gap >= -1e-9 && self_gap < 1e-9;
  notes.push_back("exact gap min " + f3(min_gap) + ", |gap| at the Gibbs marginal " + f3(self_gap));
  // sampled marginals of the plus and minus phases
  double worst_z_gap = 1e300;
  for (Boundary bc : {Boundary::plus, Boundary::minus}) {
    McEngine mc(24, 0.7, 0.0, bc, mc_config(20000, bc == Boundary::plus ? 881 : 882));
    std::vector<LayerConfig> samples;
    mc.for_each_sample(LayerConstraint::none(), [&](const McLattice& l, int) { samples.push_back(l.layer()); });
    for (const auto& w : omegas) {
      const auto g = variational_gap_samples(samples, v, w, lp);
      worst_z_gap = std::min(worst_z_gap, g.error > 0 ? g.value / g.error : (g.value >= 0 ? 1e300 : -1e300));
    }
  }
  pass &= worst_z_gap >= -3.0;
  notes.push_back("sampled gap min z " + f3(worst_z_gap));
  // beta = 0 pressure
  {
    ExactEngine e0(10, 0.0, 0.0, Boundary::plus);
    const auto p = pressure_series(e0, {1, 4, 10});
    double dev = 0.0;
    for (const auto& x : p.entries) dev = std::max(dev, std::abs(x.value - std::log(2.0)));
    pass &= dev < 1e-12;
    notes.push_back("beta=0 |P - ln 2| " + f3(dev));
  }
  // energy density, two routes
  {
    ExactEngine e10(10, 0.7, 0.0, Boundary::plus);
    LayerPotentials lp10(e10);
    const auto samples = layer_samples(24, 0.7, 0.0, 50000, 889);
    const auto ed = energy_density_estimate(samples, lp10, {-5, 5}, 20);
    pass &= ed.z() <= 3.0;
    notes.push_back("energy ergodic " + f3(ed.ergodic.value) + "+-" + f3(ed.ergodic.error) + " volume " +
                    f3(ed.volume.value) + "+-" + f3(ed.volume.error) + " (z " + f3(ed.z()) + ")");
  }
  std::string d;
  for (const auto& s : notes) d += (d.empty() ? "" : "; ") + s;
  return {pass, d};
}

Outcome c9_variational() {
  ExactEngine e(10, 0.7, 0.0, Boundary::plus);
  LayerPotentials lp(e);
  const auto samples = layer_samples(10, 0.7, 0.0, 500000, 909);
  const auto pts = variational_functional(samples, lp, {3, 5, 7}, 32, EntropyEstimator::exact_marginal);
  bool decreasing = true;
  std::string d;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    d += " n=" + std::to_string(pts[a].n) + ": " + f3(pts[a].gap.value) + "+-" + f3(pts[a].gap.error);
    if (a > 0) decreasing &= std::abs(pts[a].gap.value) < std::abs(pts[a - 1].gap.value);
  }
  const double last = std::abs(pts.back().gap.value);
  return {decreasing && last < 0.05, "s-e-P:" + d};
}

Outcome c10_condition() {
  const double beta = 1.2;
  const auto samples = layer_samples(24, beta, 0.0, 20000, 1010);
  const auto s = theorem62_condition(samples, beta, {4, 8, 12, 16});
  std::string d;
  for (const auto& x : s.entries) d += " n=" + std::to_string(x.n) + ": " + f3(x.value) + "+-" + f3(x.error);
  return {s.strictly_decreasing(), "series:" + d};
}

Outcome c11_probe() {
  const std::vector<int> ns{2, 4, 6, 8};
  auto run = [&](double h, std::uint64_t seed) {
    McEngine mc(32, 0.9, h, Boundary::plus, mc_config(40000, seed));
    return quasilocality_probe(mc, ns);
  };
  const auto s0 = run(0.0, 1111), s5 = run(0.5, 1112);
  bool above = true;
  std::string d = "h=0:";
  for (const auto& x : s0.entries) {
    above &= x.value > 10.0 * x.error;
    d += " D" + std::to_string(x.n) + "=" + f3(x.value) + "+-" + f3(x.error);
  }
  d += "; h=0.5:";
  for (const auto& x : s5.entries) d += " D" + std::to_string(x.n) + "=" + f3(x.value) + "+-" + f3(x.error);
  const auto& last = s5.entries.back();
  const bool decays = std::abs(last.value) < 3.0 * last.error || last.value == 0.0;
  d += std::string("; h=0 above 10 sigma: ") + (above ? "yes" : "no") + ", h=0.5 below 3 sigma at n=8: " + (decays ? "yes" : "no");
  return {above && decays, d};
}

Outcome c12_cross_engine() {
  std::mt19937_64 rng(1212);
  std::uniform_real_distribution<double> ub(0.0, 0.8), uh(-0.5, 0.5), u01(0.0, 1.0);
  double worst = 0.0;
  int cases = 0;
  for (int c = 0; c < 50; ++c) {
    const double beta = ub(rng), h = uh(rng);
    const Boundary bc = static_cast<Boundary>(rng() % 3);
    LayerConstraint con;
    if (rng() % 2) {
      std::vector<Spin> v;
      SiteSet free_sites;
      for (int i = -2; i <= 2; ++i) {
        v.push_back(rng() % 2 ? 1 : -1);
        if (u01(rng) < 0.4) free_sites.push_back(i);
      }
      con = LayerConstraint::frozen(LayerConfig({-2, 2}, v, 1), free_sites);
    }
    auto free_site = [&]() {
      for (;;) {
        Site2D s{static_cast<int>(rng() % 5) - 2, static_cast<int>(rng() % 5) - 2};
        if (s.y != 0 || !con.active() || con.is_free(s.x)) return s;
      }
    };
    Observable f;
    switch (c % 4) {
      case 0: f = Observable::spin(free_site()); break;
      case 1: f = Observable::spin(free_site()) * Observable::spin(free_site()); break;
      case 2: f = Observable::indicator(free_site(), -1); break;
      default: f = Observable::exp_spin(free_site(), 2.0 * beta); break;
    }
    EnumerationEngine ex(2, beta, h, bc);
    McEngine mc(2, beta, h, bc, mc_config(20000, 1300 + c));
    const double exact = ex.expectation(con, f).value;
    const Estimate est = mc.expectation(con, f);
    const double z = est.error > 0 ? std::abs(est.value - exact) / est.error : (std::abs(est.value - exact) < 1e-12 ? 0.0 : 1e300);
    worst = std::max(worst, z);
    ++cases;
  }
  return {worst <= 4.0, std::to_string(cases) + " cases, max |z| " + f3(worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Moebius and vacuum identities", c1_moebius},
      {"telescoping identity, resummation, closed vs abstract", c2_telescoping},
      {"sign and magnitude of U", c3_sign_magnitude},
      {"decay on sampled configurations at beta=0.7", c4_decay},
      {"uniform decay at h=0.5 and at beta=0.3", c5_uniform},
      {"decimated potentials (b=5, p=0.2) and margin arithmetic", c6_decimation},
      {"weak-Gibbs consistency of the Dobrushin expectation", c7_dobrushin},
      {"partition identity, variational gap, pressure, energy density", c8_thermo},
      {"variational functional s - e - P", c9_variational},
      {"condition series at beta=1.2", c10_condition},
      {"quasilocality probe", c11_probe},
      {"cross-engine agreement", c12_cross_engine},
  };
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("error: ") + ex.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] C%-2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), dt);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
