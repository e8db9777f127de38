#pragma once

// Serialization: potential tables (JSON, CSV), plot-data CSV, run
// manifests and the golden-value store.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "estimate.hpp"
#include "lattice.hpp"
#include "potentials.hpp"

#ifndef LAYERGIBBS_GIT_DESCRIBE
#define LAYERGIBBS_GIT_DESCRIBE "unknown"
#endif

namespace layergibbs {

using json = nlohmann::ordered_json;

inline constexpr const char* code_version = "0.1.0";

/// 64-bit FNV-1a, used as a stable content hash.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << v;
  return o.str();
}

/// Shortest round-trip representation of a double.
inline std::string fmt(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

// ---- layer configurations

/// Inverse of LayerConfig::to_string: "[j,k]+-+|+".
inline LayerConfig parse_layer_config(const std::string& s) {
  const auto close = s.find(']');
  const auto bar = s.rfind('|');
  if (s.empty() || s[0] != '[' || close == std::string::npos || bar == std::string::npos || bar < close)
    throw std::invalid_argument("malformed layer configuration '" + s + "'");
  const auto comma = s.find(',');
  const int j = std::stoi(s.substr(1, comma - 1));
  const int k = std::stoi(s.substr(comma + 1, close - comma - 1));
  std::vector<Spin> v;
  for (std::size_t i = close + 1; i < bar; ++i) {
    if (s[i] != '+' && s[i] != '-') throw std::invalid_argument("bad spin character in '" + s + "'");
    v.push_back(s[i] == '+' ? 1 : -1);
  }
  if (bar + 1 >= s.size()) throw std::invalid_argument("missing fill in '" + s + "'");
  return {LayerInterval(j, k), std::move(v), s[bar + 1] == '+' ? 1 : -1};
}

inline json to_json(const Estimate& e) {
  json j;
  j["value"] = e.value;
  j["stderr"] = e.error;
  j["n_samples"] = e.n_samples;
  j["engine"] = to_string(e.engine);
  if (e.seed) j["seed"] = *e.seed;
  return j;
}

inline Estimate estimate_from_json(const json& j) {
  Estimate e;
  e.value = j.at("value").get<double>();
  e.error = j.at("stderr").get<double>();
  e.n_samples = j.at("n_samples").get<std::uint64_t>();
  e.engine = j.at("engine").get<std::string>() == "exact" ? EngineTag::exact : EngineTag::mc;
  if (j.contains("seed")) e.seed = j.at("seed").get<std::uint64_t>();
  return e;
}

// ---- potential tables

inline json to_json(const PotentialTable& t) {
  json j;
  j["kind"] = to_string(t.kind);
  j["xi"] = t.xi.to_string();
  j["beta"] = t.beta;
  j["h"] = t.h;
  j["engine"] = to_string(t.engine);
  j["engine_name"] = t.engine_name;
  j["n"] = t.n;
  j["decimation"] = t.decimation;
  j["code_version"] = code_version;
  json rows = json::array();
  for (const auto& [a, e] : t.entries) {
    json r = to_json(e);
    r["j"] = a.j;
    r["k"] = a.k;
    rows.push_back(std::move(r));
  }
  j["entries"] = std::move(rows);
  return j;
}

inline PotentialTable table_from_json(const json& j) {
  PotentialTable t;
  t.kind = potential_kind_from_string(j.at("kind").get<std::string>());
  t.xi = parse_layer_config(j.at("xi").get<std::string>());
  t.beta = j.at("beta").get<double>();
  t.h = j.at("h").get<double>();
  t.engine = j.at("engine").get<std::string>() == "exact" ? EngineTag::exact : EngineTag::mc;
  t.engine_name = j.at("engine_name").get<std::string>();
  t.n = j.at("n").get<int>();
  t.decimation = j.at("decimation").get<int>();
  for (const auto& r : j.at("entries")) t.set({r.at("j").get<int>(), r.at("k").get<int>()}, estimate_from_json(r));
  return t;
}

inline std::string table_csv(const PotentialTable& t) {
  std::ostringstream o;
  o << "j,k,value,stderr\n";
  for (const auto& [a, e] : t.entries) o << a.j << ',' << a.k << ',' << fmt(e.value) << ',' << fmt(e.error) << '\n';
  return o.str();
}

// ---- plot data

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  double y_err = 0.0;
  std::string label;
};

inline std::string plot_csv(const std::vector<PlotPoint>& pts, const std::string& manifest_hash = "") {
  std::ostringstream o;
  if (!manifest_hash.empty()) o << "# manifest " << manifest_hash << '\n';
  o << "x,y,y_err,series_label\n";
  for (const auto& p : pts) o << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(p.y_err) << ',' << p.label << '\n';
  return o.str();
}

// ---- manifests

struct RunManifest {
  std::string command;
  json config = json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;

  /// Hash of everything that determines the outputs.
  std::string hash() const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["seeds"] = seeds;
    j["code_version"] = code_version;
    return hex64(fnv1a(j.dump()));
  }

  json to_json() const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["seeds"] = seeds;
    j["code_version"] = code_version;
    j["git_describe"] = LAYERGIBBS_GIT_DESCRIBE;
    j["outputs"] = outputs;
    j["wall_seconds"] = wall_seconds;
    j["hash"] = hash();
    return j;
  }

  static RunManifest from_json(const json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.wall_seconds = j.at("wall_seconds").get<double>();
    return m;
  }
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream o;
  o << f.rdbuf();
  return o.str();
}

// ---- golden store

/// Canonical key -> exact value, keyed by the hash of the key text.
class GoldenStore {
 public:
  struct Entry {
    std::string key;
    double value = 0.0;
  };

  static std::string hash_of(const std::string& key) { return hex64(fnv1a(key)); }

  void put(const std::string& key, double value) { entries_[hash_of(key)] = {key, value}; }

  std::optional<double> get(const std::string& key) const {
    auto it = entries_.find(hash_of(key));
    if (it == entries_.end()) return std::nullopt;
    return it->second.value;
  }

  std::size_t size() const { return entries_.size(); }

  json to_json() const {
    json j = json::object();
    for (const auto& [h, e] : entries_) {
      json r;
      r["key"] = e.key;
      r["value"] = e.value;
      r["engine"] = "exact";
      r["code_version"] = code_version;
      j[h] = std::move(r);
    }
    return j;
  }

  static GoldenStore from_json(const json& j) {
    GoldenStore g;
    for (const auto& [h, r] : j.items()) g.entries_[h] = {r.at("key").get<std::string>(), r.at("value").get<double>()};
    return g;
  }

  void save(const std::string& path) const { write_text(path, to_json().dump(2) + "\n"); }
  static GoldenStore load(const std::string& path) { return from_json(json::parse(read_text(path))); }

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace layergibbs
