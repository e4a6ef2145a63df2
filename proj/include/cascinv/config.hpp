#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cascinv/activation.hpp"
#include "cascinv/error.hpp"
#include "cascinv/evaluation.hpp"

namespace cascinv {

// Line-oriented "key = value" configuration. '#' starts a comment; later
// assignments override earlier ones.
class KeyValueConfig {
public:
  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto text = trim(line);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      const auto key = trim(text.substr(0, eq));
      if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty key");
      cfg.values_[std::string(key)] = std::string(trim(text.substr(eq + 1)));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    KeyValueConfig cfg = parse(in);
    cfg.base_dir_ = path.parent_path();
    return cfg;
  }

  /// Applies "key=value" overrides (command-line --set).
  void set(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw UsageError("--set expects key=value, got '" + std::string(assignment) + "'");
    values_[std::string(trim(assignment.substr(0, eq)))] = std::string(trim(assignment.substr(eq + 1)));
  }

  bool has(std::string_view key) const { return values_.contains(std::string(key)); }
  const std::string& get(std::string_view key) const {
    auto it = values_.find(std::string(key));
    if (it == values_.end()) throw UsageError("config is missing '" + std::string(key) + "'");
    return it->second;
  }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  /// Relative paths in a config file resolve against the file's directory.
  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
  }

  static std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

namespace detail {

inline std::size_t parse_count(std::string_view s, std::string_view key) {
  const double v = parse_double(s, key);
  if (v < 0.0 || v != std::floor(v)) throw UsageError(std::string(key) + " must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

inline std::vector<double> parse_values(std::string_view s) {
  std::vector<double> out;
  // start:stop:step
  if (s.find(':') != std::string_view::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw UsageError("range must be start:stop:step");
    const double a = parse_double(parts[0], "values");
    const double b = parse_double(parts[1], "values");
    const double step = parse_double(parts[2], "values");
    if (!(step > 0.0)) throw UsageError("range step must be positive");
    const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  for (const auto& part : split(s, ',')) {
    if (!KeyValueConfig::trim(part).empty()) out.push_back(parse_double(KeyValueConfig::trim(part), "values"));
  }
  return out;
}

} // namespace detail

inline std::vector<Method> parse_methods(std::string_view s) {
  std::vector<Method> out;
  for (const auto& part : detail::split(s, ',')) out.push_back(parse_method(KeyValueConfig::trim(part)));
  if (out.empty()) throw UsageError("no methods given");
  return out;
}

inline GammaSource parse_gamma_source(std::string_view s) {
  if (s == "truth") return GammaSource::truth;
  if (s == "bootstrap") return GammaSource::bootstrap;
  throw UsageError("gamma_from must be truth or bootstrap, got '" + std::string(s) + "'");
}

/// Trial configuration from config keys; absent keys keep their defaults.
inline TrialConfig trial_config_from(const KeyValueConfig& cfg) {
  TrialConfig c;
  if (cfg.has("graph")) {
    const std::string& g = cfg.get("graph");
    if (g.rfind("file:", 0) == 0) {
      c.graph.file = cfg.resolve(g.substr(5));
    } else if (g.rfind("random:", 0) == 0) {
      const auto parts = detail::split(std::string_view(g).substr(7), ',');
      if (parts.size() != 2) throw UsageError("graph = random:<nodes>,<edges>");
      c.graph.n_nodes = detail::parse_count(parts[0], "graph nodes");
      c.graph.n_edges = detail::parse_count(parts[1], "graph edges");
    } else {
      throw UsageError("graph must be file:<path> or random:<nodes>,<edges>");
    }
  }
  if (cfg.has("density")) c.graph.density = detail::parse_double(cfg.get("density"), "density");
  if (cfg.has("model")) c.model = parse_activation(cfg.get("model"));
  if (cfg.has("cascades")) c.n_cascades = detail::parse_count(cfg.get("cascades"), "cascades");
  if (cfg.has("seed")) c.seed = detail::parse_count(cfg.get("seed"), "seed");
  if (cfg.has("step_cap")) c.step_cap = detail::parse_count(cfg.get("step_cap"), "step_cap");
  if (cfg.has("methods")) c.methods = parse_methods(cfg.get("methods"));
  if (cfg.has("gamma_from")) c.gamma_source = parse_gamma_source(cfg.get("gamma_from"));
  if (cfg.has("surrogate_cascades")) c.surrogate_cascades = detail::parse_count(cfg.get("surrogate_cascades"), "surrogate_cascades");
  if (cfg.has("surrogate_graphs")) c.surrogate_graphs = detail::parse_count(cfg.get("surrogate_graphs"), "surrogate_graphs");
  if (cfg.has("t_limit")) c.t_limit = detail::parse_count(cfg.get("t_limit"), "t_limit");
  if (cfg.has("heuristic_cascades")) c.heuristic_cascades = detail::parse_count(cfg.get("heuristic_cascades"), "heuristic_cascades");
  if (c.n_cascades < 1) throw UsageError("cascades must be positive");
  if (c.step_cap < 1) throw UsageError("step_cap must be positive");
  if (c.surrogate_cascades < 1) throw UsageError("surrogate_cascades must be positive");
  if (c.surrogate_graphs < 1) throw UsageError("surrogate_graphs must be positive");
  return c;
}

/// Sweep keys on top of the trial keys:
///   sweep = gamma | epsilon | f_c | n_experiments | n_nodes | n_edges | density
///   values = v1,v2,... | start:stop:step
///   replicates = 3
///   cascade_policy = fixed | edges | pairs:<fraction>
inline SweepSpec sweep_spec_from(const KeyValueConfig& cfg) {
  SweepSpec spec;
  spec.base = trial_config_from(cfg);
  spec.parameter = parse_sweep_parameter(cfg.get("sweep"));
  spec.values = detail::parse_values(cfg.get("values"));
  if (spec.values.empty()) throw UsageError("values must list at least one value");
  if (cfg.has("replicates")) spec.replicates = detail::parse_count(cfg.get("replicates"), "replicates");
  if (spec.replicates < 1) throw UsageError("replicates must be positive");
  if (cfg.has("cascade_policy")) {
    const std::string& p = cfg.get("cascade_policy");
    if (p == "fixed") {
      spec.policy = CascadePolicy::fixed;
    } else if (p == "edges") {
      spec.policy = CascadePolicy::equal_edges;
    } else if (p.rfind("pairs:", 0) == 0) {
      spec.policy = CascadePolicy::pair_fraction;
      spec.pair_fraction = detail::parse_double(std::string_view(p).substr(6), "cascade_policy");
    } else {
      throw UsageError("cascade_policy must be fixed, edges or pairs:<fraction>");
    }
  }
  return spec;
}

} // namespace cascinv
