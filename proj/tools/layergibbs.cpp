// layergibbs: command-line driver for the layer potential computations.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <layergibbs/layergibbs.hpp>

using namespace layergibbs;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  double beta = 0.6;
  double h = 0.0;
  int n = 3;
  std::string engine = "exact";
  std::string xi = "all-minus";
  std::string out = "out";
  int threads = 0;
  std::uint64_t seed = 20240611;
  std::uint64_t sweeps = 20000;
  int chains = 4;
};

void add_model(CLI::App* c, Common& o) {
  c->add_option("--beta", o.beta, "inverse temperature")->check(CLI::NonNegativeNumber);
  c->add_option("--h", o.h, "external field");
  c->add_option("--n", o.n, "box half-width")->check(CLI::PositiveNumber);
}

void add_engine(CLI::App* c, Common& o) {
  c->add_option("--engine", o.engine, "exact or mc")->check(CLI::IsMember({"exact", "mc"}));
  c->add_option("--seed", o.seed, "MC seed");
  c->add_option("--sweeps", o.sweeps, "MC sweeps per chain");
  c->add_option("--chains", o.chains, "MC chains");
}

void add_output(CLI::App* c, Common& o) { c->add_option("--out", o.out, "output directory"); }

McConfig mc_config(const Common& o) {
  McConfig c;
  c.sweeps = o.sweeps;
  c.burn_in = std::max<std::uint64_t>(1, o.sweeps / 10);
  c.chains = o.chains;
  c.seed = o.seed;
  return c;
}

/// all-plus | all-minus | alternating | sample:SEED | a file holding "[j,k]+-..|+"
LayerConfig parse_xi(const std::string& s, const Common& o) {
  const int w = std::max(o.n, 1) * 4;
  if (s == "all-plus") return LayerConfig::all_plus();
  if (s == "all-minus") return LayerConfig::constant({-w, w}, -1);
  if (s == "alternating") return LayerConfig::alternating({-w, w});
  if (s.rfind("sample:", 0) == 0) {
    McConfig c;
    c.sweeps = 4000;
    c.burn_in = 2000;
    c.chains = 2;
    c.seed = std::stoull(s.substr(7));
    const auto samples = McEngine(std::max(o.n, 8), o.beta, o.h, Boundary::plus, c, o.threads).sample_layer();
    return samples.back().trimmed();
  }
  if (fs::exists(s)) {
    std::string t = read_text(s);
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
    return parse_layer_config(t);
  }
  try {
    return parse_layer_config(s);
  } catch (const std::exception&) {
    throw UsageError("unknown --xi value '" + s + "'");
  }
}

struct Writer {
  RunManifest manifest;
  fs::path dir;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  Writer(std::string command, json config, std::vector<std::uint64_t> seeds, const std::string& out) : dir(out) {
    manifest.command = std::move(command);
    manifest.config = std::move(config);
    manifest.seeds = std::move(seeds);
    fs::create_directories(dir);
  }
  std::string hash() const { return manifest.hash(); }

  void json_file(const std::string& name, json j) {
    j["manifest_hash"] = hash();
    write_text((dir / name).string(), j.dump(2) + "\n");
    manifest.outputs.push_back((dir / name).string());
  }
  void csv_file(const std::string& name, const std::string& body) {
    write_text((dir / name).string(), "# manifest " + hash() + "\n" + body);
    manifest.outputs.push_back((dir / name).string());
  }
  void plot_file(const std::string& name, const std::vector<PlotPoint>& pts) {
    write_text((dir / name).string(), plot_csv(pts, hash()));
    manifest.outputs.push_back((dir / name).string());
  }
  void finish() {
    manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text((dir / (manifest.command + ".manifest.json")).string(), manifest.to_json().dump(2) + "\n");
    std::cout << "manifest " << hash() << " -> " << (dir / (manifest.command + ".manifest.json")).string() << "\n";
  }
};

json model_json(const Common& o) {
  return {{"beta", o.beta}, {"h", o.h}, {"n", o.n}, {"engine", o.engine}, {"xi", o.xi}};
}

// ---- potential

PotentialKind parse_kind(const std::string& k, int& b) {
  b = 1;
  if (k == "vacuum") return PotentialKind::vacuum;
  if (k == "telescoping") return PotentialKind::telescoping;
  if (k == "closed") return PotentialKind::telescoping_closed_form;
  if (k.rfind("decimated:", 0) == 0) {
    b = std::stoi(k.substr(10));
    if (b < 2) throw UsageError("decimation step must be at least 2");
    return PotentialKind::decimated;
  }
  throw UsageError("unknown --kind '" + k + "'");
}

template <KernelEngine E>
PotentialTable potential_table(const E& e, const LayerConfig& xi, PotentialKind kind, int b, int max_length) {
  SiteSet kept;
  if (kind == PotentialKind::decimated) kept = make_mask(DecimationScheme::regular(b), {-e.half_width(), e.half_width()});
  LayerPotentials<E> lp(e, kept);
  return build_table(lp, xi, kind, max_length);
}

int cmd_potential(const Common& o, const std::string& kind_s, int max_length) {
  int b = 1;
  const PotentialKind kind = parse_kind(kind_s, b);
  const LayerConfig xi = parse_xi(o.xi, o);
  json cfg = model_json(o);
  cfg["kind"] = kind_s;
  cfg["max_length"] = max_length;
  std::vector<std::uint64_t> seeds;
  if (o.engine == "mc") {
    cfg["sweeps"] = o.sweeps, cfg["chains"] = o.chains;
    seeds.push_back(o.seed);
  }
  Writer w("potential", cfg, seeds, o.out);
  PotentialTable t;
  if (o.engine == "exact") {
    t = potential_table(ExactEngine(o.n, o.beta, o.h), xi, kind, b, max_length);
  } else {
    if (kind == PotentialKind::vacuum || kind == PotentialKind::telescoping)
      throw UsageError("the abstract constructions need --engine exact");
    t = potential_table(McEngine(o.n, o.beta, o.h, Boundary::plus, mc_config(o), o.threads), xi, kind, b, max_length);
  }
  w.json_file("potential.json", to_json(t));
  w.csv_file("potential.csv", table_csv(t));
  w.finish();
  std::cout << t.entries.size() << " intervals, max |U| = " << fmt(t.max_abs()) << "\n";
  return 0;
}

// ---- verify

struct Check {
  std::string name;
  double residual;
  double tolerance;
  bool ok() const { return residual <= tolerance; }
};

std::vector<std::pair<std::string, double>> golden_values() {
  std::vector<std::pair<std::string, double>> g;
  g.emplace_back("enumeration logZ n=1 beta=0.5 h=0 plus", partition_function(BoxProblem::square(1, 0.5, 0.0)));
  EnumerationEngine e2(2, 0.6, 0.0);
  g.emplace_back("enumeration E[exp(1.2 X(0,1))] n=2 beta=0.6 layer=all-minus",
                 e2.expectation(LayerConstraint::frozen(LayerConfig::constant({-2, 2}, -1)), Observable::exp_spin({0, 1}, 1.2)).value);
  g.emplace_back("enumeration cov(X(-1,1),X(1,1)) n=2 beta=0.6 layer=alternating",
                 covariance(e2.problem(LayerConstraint::frozen(LayerConfig::alternating({-2, 2}))), Observable::spin({-1, 1}),
                            Observable::spin({1, 1}))
                     .value);
  ExactEngine e3(3, 0.6, 0.0);
  LayerPotentials lp(e3);
  const LayerConfig plus = LayerConfig::all_plus(), minus = LayerConfig::constant({-5, 5}, -1);
  g.emplace_back("kernel gamma_{0}(+|+) n=3 beta=0.6", layer_kernel(e3, {0}, plus, plus).value);
  g.emplace_back("H_[-1,1] all-minus n=3 beta=0.6", lp.hamiltonian(LayerInterval(-1, 1), minus).value);
  g.emplace_back("vacuum {0,1} all-minus n=3 beta=0.6", lp.vacuum({0, 1}, minus).value);
  g.emplace_back("telescoping (0,1) all-minus n=3 beta=0.6", lp.telescope_abstract(0, 1, minus).value);
  g.emplace_back("closed [0,2] all-minus n=3 beta=0.6", lp.telescope_closed({0, 2}, minus).value);
  g.emplace_back("free hamiltonian [-2,2] alternating n=3 beta=0.6",
                 hamiltonian_free_bc(lp, {-2, 2}, LayerConfig::alternating({-2, 2})).value);
  g.emplace_back("log Z^f [-2,2] n=3 beta=0.6", log_partition_free_table(lp, {-2, 2}).value);
  ExactEngine e5(5, 0.6, 0.0);
  LayerPotentials ld(e5, {-5, 0, 5});
  g.emplace_back("decimated b=5 [0,5] all-minus n=5 beta=0.6", ld.telescope_closed({0, 5}, minus).value);
  return g;
}

int cmd_verify(const Common& o, const std::string& golden) {
  if (o.n > 4) throw UsageError("verify runs the exact identities at n <= 4");
  ExactEngine e(o.n, o.beta, o.h);
  LayerPotentials lp(e);
  std::vector<Check> checks;
  const LayerConfig minus = LayerConfig::constant({-o.n, o.n}, -1);
  const LayerConfig alt = LayerConfig::alternating({-o.n, o.n});
  double tel = 0.0, res = 0.0, moeb = 0.0, closed = 0.0;
  for (const auto& xi : {minus, alt, alt.shifted(1)}) {
    tel = std::max(tel, verify_telescoping_identity(lp, {-1, 1}, xi));
    for (int m = 0; m <= std::min(4, 2 * o.n); ++m) res = std::max(res, verify_resummation(lp, o.n, m, xi));
    moeb = std::max(moeb, verify_moebius(lp, {-1, 0, 1}, xi));
    for (int j = -o.n; j <= o.n; ++j)
      for (int k = j; k <= std::min(o.n, j + 3); ++k)
        closed = std::max(closed, std::abs(lp.telescope_closed({j, k}, xi).value - lp.interval_abstract({j, k}, xi).value));
  }
  checks.push_back({"telescoping identity H_V = sum U", tel, 1e-9});
  checks.push_back({"resummation of the vacuum potential", res, 1e-9});
  checks.push_back({"Moebius round trip", moeb, 1e-9});
  checks.push_back({"closed form vs abstract construction", closed, 1e-9});
  checks.push_back({"partition function routes", std::abs(log_partition_free_table(lp, {-1, 1}).value -
                                                           log_partition_free_kernel(e, {-1, 1}).value),
                    1e-8});
  checks.push_back({"heat-bath conditional", dlr_check(BoxProblem::square(1, o.beta, o.h), {0, 0}), 1e-12});
  if (!golden.empty()) {
    const auto store = GoldenStore::load(golden);
    double worst = 0.0;
    for (const auto& [k, v] : golden_values()) {
      const auto g = store.get(k);
      worst = std::max(worst, g ? std::abs(*g - v) : INFINITY);
    }
    checks.push_back({"golden store", worst, 1e-12});
  }
  json cfg = model_json(o);
  cfg["golden"] = golden;
  Writer w("verify", cfg, {}, o.out);
  json rep = json::array();
  bool all = true;
  for (const auto& c : checks) {
    std::printf("%s %-40s residual %.3g (tol %.0e)\n", c.ok() ? "ok  " : "FAIL", c.name.c_str(), c.residual, c.tolerance);
    rep.push_back({{"check", c.name}, {"residual", c.residual}, {"tolerance", c.tolerance}, {"ok", c.ok()}});
    all &= c.ok();
  }
  w.json_file("verify.json", {{"checks", rep}, {"ok", all}});
  w.finish();
  return all ? 0 : 1;
}

// ---- decay

int cmd_decay(const Common& o, int k, int max_length) {
  const LayerConfig xi = parse_xi(o.xi, o);
  json cfg = model_json(o);
  cfg["k"] = k;
  cfg["max_length"] = max_length;
  Writer w("decay", cfg, o.engine == "mc" ? std::vector<std::uint64_t>{o.seed} : std::vector<std::uint64_t>{}, o.out);
  auto run = [&](const auto& engine) {
    LayerPotentials lp(engine);
    PotentialTable t;
    t.xi = xi;
    t.beta = o.beta;
    t.h = o.h;
    t.n = o.n;
    for (int len = 0; len <= std::min(max_length, k + o.n); ++len)
      if (k - len >= -o.n) t.set({k - len, k}, lp.telescope_closed({k - len, k}, xi));
    return t;
  };
  const PotentialTable t = o.engine == "exact" ? run(ExactEngine(o.n, o.beta, o.h))
                                               : run(McEngine(o.n, o.beta, o.h, Boundary::plus, mc_config(o), o.threads));
  const LayerInterval sites(-o.n, o.n);
  const auto plus = ell_profile(xi.fill() > 0 ? xi : LayerConfig::all_plus(), sites, 1.0, Direction::plus);
  const auto minus = ell_profile(xi.fill() > 0 ? xi : LayerConfig::all_plus(), sites, 1.0, Direction::minus);
  std::string prof = "i,ell_plus,ell_minus\n";
  for (int i = sites.j; i <= sites.k; ++i)
    prof += std::to_string(i) + "," + std::to_string(plus.at(i)) + "," + std::to_string(minus.at(i)) + "\n";
  w.csv_file("ell_profile.csv", prof);
  std::vector<PlotPoint> pts;
  for (const auto& p : decay_curve(t, k)) pts.push_back({double(p.length), p.value, p.error, "abs_U"});
  w.plot_file("decay_curve.csv", pts);
  json fit;
  try {
    const auto f = decay_fit(decay_curve(t, k));
    fit = {{"C", f.c}, {"lambda", f.lambda}, {"lambda_ci", {f.lambda_ci.lo, f.lambda_ci.hi}}, {"points", f.used.size()}};
    std::printf("lambda = %.4g  CI [%.4g, %.4g]\n", f.lambda, f.lambda_ci.lo, f.lambda_ci.hi);
  } catch (const DecayUnresolvable& e) {
    fit = {{"failure", e.what()}};
    std::printf("%s\n", e.what());
  }
  w.json_file("decay_fit.json", fit);
  w.finish();
  return 0;
}

// ---- thermo

int cmd_thermo(const Common& o, const std::vector<int>& ns) {
  for (int m : ns)
    if (m > o.n) throw UsageError("series volume exceeds the box");
  json cfg = model_json(o);
  cfg["series_n"] = ns;
  Writer w("thermo", cfg, {o.seed}, o.out);
  ExactEngine e(o.n, o.beta, o.h);
  LayerPotentials lp(e);
  const auto free = pressure_series(e, ns);
  const auto fixed = pressure_series_fixed(lp, ns, LayerConfig::all_plus());
  std::vector<PlotPoint> pts;
  for (const auto& x : free.entries) pts.push_back({double(x.n), x.value, x.error, "pressure_free"});
  for (const auto& x : fixed.entries) pts.push_back({double(x.n), x.value, x.error, "pressure_plus"});
  McConfig c = mc_config(o);
  const auto samples = McEngine(o.n, o.beta, o.h, Boundary::plus, c, o.threads).sample_layer();
  for (const auto& x : variational_functional(samples, lp, ns, 32, EntropyEstimator::exact_marginal)) {
    pts.push_back({double(x.n), x.entropy_density.value, x.entropy_density.error, "entropy_density"});
    pts.push_back({double(x.n), x.energy_density.value, x.energy_density.error, "energy_density"});
    pts.push_back({double(x.n), x.gap.value, x.gap.error, "variational_gap"});
  }
  for (const auto& x : theorem62_condition(samples, o.beta, ns).entries)
    pts.push_back({double(x.n), x.value, x.error, "condition_series"});
  w.plot_file("thermo.csv", pts);
  w.json_file("thermo.json", {{"pressure_free_cauchy", free.cauchy()}, {"pressure_plus_cauchy", fixed.cauchy()}});
  w.finish();
  return 0;
}

// ---- decimate

int cmd_decimate(const Common& o, int b, double p, std::uint64_t mask_seed, const std::vector<int>& lengths) {
  const DecimationScheme s = p > 0.0 ? DecimationScheme::random(p, mask_seed) : DecimationScheme::regular(b);
  json cfg = model_json(o);
  cfg["scheme"] = s.to_string();
  cfg["lengths"] = lengths;
  Writer w("decimate", cfg, {mask_seed}, o.out);
  ExactEngine e(o.n, o.beta, o.h);
  const std::vector<StressConfig> stress{{"all-minus", LayerConfig::constant({-4 * o.n, 4 * o.n}, -1)},
                                         {"alternating", LayerConfig::alternating({-4 * o.n, 4 * o.n})}};
  DecayFitOptions fo;
  fo.min_points = 3;
  const auto r = decimated_decay_scan(s, e, lengths, stress, 10, fo);
  std::vector<PlotPoint> pts;
  for (const auto& row : r.rows) pts.push_back({double(row.length), row.worst, row.error, "worst_" + row.worst_label});
  w.plot_file("decimated_scan.csv", pts);
  const int kmax = 100;
  const auto m = mask_margin(s, kmax, LayerConfig::constant({0, kmax}, -1), o.beta);
  std::string mc = "k,literal,indicator\n";
  for (int k = 0; k <= kmax; ++k) mc += std::to_string(k) + "," + fmt(m.literal_value(k)) + "," + fmt(m.indicator_value(k)) + "\n";
  w.csv_file("margin.csv", mc);
  json out = {{"pass", r.pass()}, {"literal_onset", m.literal_onset}, {"indicator_onset", m.indicator_onset}};
  if (r.fit) out["fit"] = {{"lambda", r.fit->lambda}, {"lambda_ci", {r.fit->lambda_ci.lo, r.fit->lambda_ci.hi}}};
  else out["failure"] = r.failure;
  w.json_file("decimate.json", out);
  w.finish();
  if (r.fit)
    std::printf("%s: lambda = %.4g  CI [%.4g, %.4g]\n", r.pass() ? "uniform decay" : "no uniform decay", r.fit->lambda,
                r.fit->lambda_ci.lo, r.fit->lambda_ci.hi);
  else
    std::printf("no uniform decay: %s\n", r.failure.c_str());
  return 0;
}

// ---- probe

int cmd_probe(const Common& o, const std::vector<int>& ns) {
  json cfg = model_json(o);
  cfg["windows"] = ns;
  Writer w("probe", cfg, o.engine == "mc" ? std::vector<std::uint64_t>{o.seed} : std::vector<std::uint64_t>{}, o.out);
  const ThermoSeries s = o.engine == "exact"
                             ? quasilocality_probe(ExactEngine(o.n, o.beta, o.h), ns)
                             : quasilocality_probe(McEngine(o.n, o.beta, o.h, Boundary::plus, mc_config(o), o.threads), ns);
  std::vector<PlotPoint> pts;
  for (const auto& x : s.entries) {
    pts.push_back({double(x.n), x.value, x.error, "D"});
    std::printf("n=%d  D=%.4g +- %.2g\n", x.n, x.value, x.error);
  }
  w.plot_file("probe.csv", pts);
  w.finish();
  return 0;
}

// ---- golden-regen

int cmd_golden(const std::string& path) {
  GoldenStore g;
  for (const auto& [k, v] : golden_values()) g.put(k, v);
  g.save(path);
  std::cout << g.size() << " golden values -> " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer potentials of the two-dimensional Ising plus phase"};
  app.set_help_flag("--help", "print this help message and exit");
  app.require_subcommand(1);
  Common o;
  app.add_option("--threads", o.threads, "worker threads (default: LAYERGIBBS_THREADS or all cores)");

  auto* pot = app.add_subcommand("potential", "build a potential table");
  add_model(pot, o), add_engine(pot, o), add_output(pot, o);
  std::string kind = "closed";
  int max_length = 6;
  pot->add_option("--xi", o.xi, "all-plus|all-minus|alternating|sample:SEED|FILE|[j,k]..|f");
  pot->add_option("--kind", kind, "vacuum|telescoping|closed|decimated:B");
  pot->add_option("--max-length", max_length, "largest interval length")->check(CLI::NonNegativeNumber);

  auto* ver = app.add_subcommand("verify", "check the exact identities");
  add_model(ver, o), add_output(ver, o);
  std::string golden;
  ver->add_option("--golden", golden, "golden store to compare against")->check(CLI::ExistingFile);

  auto* dec = app.add_subcommand("decay", "decay curve and fit of U([k-L,k])");
  add_model(dec, o), add_engine(dec, o), add_output(dec, o);
  int k = 0;
  dec->add_option("--xi", o.xi, "layer configuration");
  dec->add_option("--k", k, "right endpoint");
  dec->add_option("--max-length", max_length, "largest length");

  auto* th = app.add_subcommand("thermo", "pressure, entropy, energy and variational gap series");
  add_model(th, o), add_engine(th, o), add_output(th, o);
  std::vector<int> ns{1, 2, 3};
  th->add_option("--series", ns, "volumes [-m,m]")->delimiter(',');

  auto* dm = app.add_subcommand("decimate", "uniform decay scan of decimated potentials");
  add_model(dm, o), add_output(dm, o);
  int b = 5;
  double p = 0.0;
  std::uint64_t mask_seed = 2024;
  std::vector<int> lengths{5, 10};
  dm->add_option("--b", b, "regular step")->check(CLI::Range(2, 1000));
  dm->add_option("--p", p, "keep probability of a random mask")->check(CLI::Range(0.0, 1.0));
  dm->add_option("--mask-seed", mask_seed, "random mask seed");
  dm->add_option("--lengths", lengths, "interval lengths")->delimiter(',');

  auto* pr = app.add_subcommand("probe", "quasilocality probe D_n");
  add_model(pr, o), add_engine(pr, o), add_output(pr, o);
  std::vector<int> windows{1, 2};
  pr->add_option("--windows", windows, "window half-widths")->delimiter(',');

  auto* gr = app.add_subcommand("golden-regen", "recompute the golden store");
  std::string golden_out = "golden.json";
  gr->add_option("--out", golden_out, "store path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (*pot) return cmd_potential(o, kind, max_length);
    if (*ver) return cmd_verify(o, golden);
    if (*dec) return cmd_decay(o, k, max_length);
    if (*th) return cmd_thermo(o, ns);
    if (*dm) return cmd_decimate(o, b, p, mask_seed, lengths);
    if (*pr) return cmd_probe(o, windows);
    if (*gr) return cmd_golden(golden_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
