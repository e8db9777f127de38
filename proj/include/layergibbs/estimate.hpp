#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

namespace layergibbs {

enum class EngineTag { exact, mc };

inline std::string to_string(EngineTag t) { return t == EngineTag::exact ? "exact" : "mc"; }

/// A numerically obtained real with its provenance.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
  std::uint64_t n_samples = 0;
  EngineTag engine = EngineTag::exact;
  std::optional<std::uint64_t> seed;

  static Estimate exact(double v) { return {v, 0.0, 0, EngineTag::exact, std::nullopt}; }

  bool is_exact() const { return engine == EngineTag::exact; }

  /// Sum of independent estimates (errors in quadrature).
  friend Estimate operator+(const Estimate& a, const Estimate& b) {
    Estimate r = a;
    r.value = a.value + b.value;
    r.error = std::hypot(a.error, b.error);
    r.n_samples = std::max(a.n_samples, b.n_samples);
    if (!a.is_exact() || !b.is_exact()) r.engine = EngineTag::mc;
    if (!r.seed) r.seed = b.seed;
    return r;
  }
  friend Estimate operator-(const Estimate& a, const Estimate& b) {
    Estimate nb = b;
    nb.value = -b.value;
    return a + nb;
  }
  friend Estimate operator*(double c, const Estimate& a) {
    Estimate r = a;
    r.value *= c;
    r.error *= std::abs(c);
    return r;
  }
};

}  // namespace layergibbs
