#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "cascinv/error.hpp"

namespace cascinv {

/// f = gamma below the critical fraction, epsilon at or above it.
struct Threshold {
  double gamma = 0.04;
  double epsilon = 0.6;
  double critical_fraction = 0.4;
  friend bool operator==(const Threshold&, const Threshold&) = default;
};

enum class Saturation { linear, square, complement_square, exponential };

/// f = base + scale * g(x) with g one of the saturation shapes:
///   linear             x
///   square             x^2
///   complement_square  1 - (1 - x)^2
///   exponential        1 - exp(-rate x)
struct AffineG {
  double base = 0.04;
  double scale = 0.96;
  Saturation shape = Saturation::linear;
  double rate = 1.0;
  friend bool operator==(const AffineG&, const AffineG&) = default;
};

/// Piecewise-constant table: f(x) is the value at the largest key <= x.
struct Tabulated {
  std::map<double, double> values;
  friend bool operator==(const Tabulated&, const Tabulated&) = default;
};

namespace detail {

inline double saturate(Saturation shape, double rate, double x) {
  switch (shape) {
  case Saturation::linear: return x;
  case Saturation::square: return x * x;
  case Saturation::complement_square: return 1.0 - (1.0 - x) * (1.0 - x);
  case Saturation::exponential: return 1.0 - std::exp(-rate * x);
  }
  return x;
}

inline void require_probability(double p, std::string_view what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError(std::string(what) + " must lie in [0,1]");
  }
}

} // namespace detail

// Per-step activation probability of an inactive node as a function of the
// fraction m/k of its providers that are already active.
class ActivationFunction {
public:
  using Variant = std::variant<Threshold, AffineG, Tabulated>;

  ActivationFunction() : ActivationFunction(Threshold{}) {}

  ActivationFunction(Threshold t) : model_(t) {
    detail::require_probability(t.gamma, "threshold gamma");
    detail::require_probability(t.epsilon, "threshold epsilon");
    detail::require_probability(t.critical_fraction, "threshold critical fraction");
  }

  ActivationFunction(AffineG a) : model_(a) {
    detail::require_probability(a.base, "affine base");
    if (a.scale < 0.0 || a.base + a.scale > 1.0 + 1e-12) {
      throw ValidationError("affine model needs scale >= 0 and base + scale <= 1");
    }
    if (a.shape == Saturation::exponential && !(a.rate > 0.0)) {
      throw ValidationError("exponential saturation rate must be positive");
    }
  }

  ActivationFunction(Tabulated t) : model_(std::move(t)) {
    const auto& v = std::get<Tabulated>(model_).values;
    if (v.empty()) throw ValidationError("tabulated model needs at least one entry");
    for (auto [x, p] : v) {
      detail::require_probability(x, "tabulated key");
      detail::require_probability(p, "tabulated value");
    }
  }

  static ActivationFunction constant(double p) { return Tabulated{{{0.0, p}}}; }

  const Variant& model() const noexcept { return model_; }

  /// f(x) for x in [0,1].
  double at_fraction(double x) const {
    return std::visit(
        [x](const auto& m) -> double {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, Threshold>) {
            return x < m.critical_fraction ? m.gamma : m.epsilon;
          } else if constexpr (std::is_same_v<M, AffineG>) {
            return std::min(1.0, m.base + m.scale * detail::saturate(m.shape, m.rate, x));
          } else {
            auto it = m.values.upper_bound(x);
            if (it == m.values.begin()) return it->second;
            return std::prev(it)->second;
          }
        },
        model_);
  }

  /// f(m/k); nodes without providers (k = 0) use f(0).
  double operator()(std::size_t m, std::size_t k) const {
    if (m > k) {
      throw DomainError("active providers m=" + std::to_string(m) + " exceed in-degree k=" +
                        std::to_string(k));
    }
    if (k == 0) return at_fraction(0.0);
    return at_fraction(static_cast<double>(m) / static_cast<double>(k));
  }

  friend bool operator==(const ActivationFunction&, const ActivationFunction&) = default;

private:
  Variant model_;
};

inline double evaluate_f(const ActivationFunction& f, std::size_t m, std::size_t k) {
  return f(m, k);
}

/// Dense f(m/k) lookup for all k <= max_k, indexed [k][m].
class ActivationTable {
public:
  ActivationTable(const ActivationFunction& f, std::size_t max_k) : rows_(max_k + 1) {
    for (std::size_t k = 0; k <= max_k; ++k) {
      rows_[k].resize(k + 1);
      for (std::size_t m = 0; m <= k; ++m) rows_[k][m] = f(m, k);
    }
  }
  double operator()(std::size_t m, std::size_t k) const { return rows_[k][m]; }
  const std::vector<double>& row(std::size_t k) const { return rows_[k]; }

private:
  std::vector<std::vector<double>> rows_;
};

// ---------------------------------------------------------------------------
// Text specs:
//   threshold:<gamma>,<epsilon>,<f_c>
//   affine:<shape>[,base=<b>][,scale=<s>]   shape = linear | square |
//                                            complement-square | exp=<rate>
//   constant:<p>
//   table:<x>=<p>,<x>=<p>,...

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline double parse_double(std::string_view s, std::string_view context) {
  std::string text(s);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (text.empty() || pos != text.size()) {
    throw UsageError("bad number '" + text + "' in " + std::string(context));
  }
  return v;
}

// Shortest round-trip form; plain notation where that is shorter.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

} // namespace detail

inline ActivationFunction parse_activation(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw UsageError("model spec '" + std::string(spec) + "' needs the form <kind>:<params>");
  }
  const std::string kind(spec.substr(0, colon));
  const auto params = detail::split(spec.substr(colon + 1), ',');
  const std::string context = "model spec '" + std::string(spec) + "'";

  if (kind == "threshold") {
    if (params.size() != 3) throw UsageError(context + " needs gamma,epsilon,f_c");
    return Threshold{detail::parse_double(params[0], context), detail::parse_double(params[1], context),
                     detail::parse_double(params[2], context)};
  }
  if (kind == "constant") {
    if (params.size() != 1) throw UsageError(context + " needs one probability");
    return ActivationFunction::constant(detail::parse_double(params[0], context));
  }
  if (kind == "affine") {
    AffineG a;
    const std::string& shape = params.at(0);
    if (shape == "linear") {
      a.shape = Saturation::linear;
    } else if (shape == "square") {
      a.shape = Saturation::square;
    } else if (shape == "complement-square") {
      a.shape = Saturation::complement_square;
    } else if (shape.rfind("exp=", 0) == 0) {
      a.shape = Saturation::exponential;
      a.rate = detail::parse_double(std::string_view(shape).substr(4), context);
    } else {
      throw UsageError(context + ": unknown shape '" + shape + "'");
    }
    for (std::size_t i = 1; i < params.size(); ++i) {
      const auto kv = detail::split(params[i], '=');
      if (kv.size() != 2) throw UsageError(context + ": expected key=value, got '" + params[i] + "'");
      if (kv[0] == "base") {
        a.base = detail::parse_double(kv[1], context);
      } else if (kv[0] == "scale") {
        a.scale = detail::parse_double(kv[1], context);
      } else {
        throw UsageError(context + ": unknown key '" + kv[0] + "'");
      }
    }
    return a;
  }
  if (kind == "table") {
    Tabulated t;
    for (const auto& entry : params) {
      const auto kv = detail::split(entry, '=');
      if (kv.size() != 2) throw UsageError(context + ": expected x=p, got '" + entry + "'");
      t.values[detail::parse_double(kv[0], context)] = detail::parse_double(kv[1], context);
    }
    return t;
  }
  throw UsageError("unknown model kind '" + kind + "' in " + context);
}

/// Inverse of parse_activation.
inline std::string to_string(const ActivationFunction& f) {
  using detail::format_double;
  return std::visit(
      [](const auto& m) -> std::string {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Threshold>) {
          return "threshold:" + format_double(m.gamma) + "," + format_double(m.epsilon) + "," +
                 format_double(m.critical_fraction);
        } else if constexpr (std::is_same_v<M, AffineG>) {
          std::string shape;
          switch (m.shape) {
          case Saturation::linear: shape = "linear"; break;
          case Saturation::square: shape = "square"; break;
          case Saturation::complement_square: shape = "complement-square"; break;
          case Saturation::exponential: shape = "exp=" + format_double(m.rate); break;
          }
          return "affine:" + shape + ",base=" + format_double(m.base) +
                 ",scale=" + format_double(m.scale);
        } else {
          std::string out = "table:";
          bool first = true;
          for (auto [x, p] : m.values) {
            if (!first) out += ',';
            first = false;
            out += format_double(x) + "=" + format_double(p);
          }
          return out;
        }
      },
      f.model());
}

} // namespace cascinv
