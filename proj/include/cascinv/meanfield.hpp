#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cascinv/activation.hpp"
#include "cascinv/cascade.hpp"
#include "cascinv/error.hpp"
#include "cascinv/graph.hpp"

namespace cascinv {

/// C(k, m) as a double, built multiplicatively and rounded while the value
/// is still an exactly representable integer.
inline double binomial_coefficient(std::size_t k, std::size_t m) {
  if (m > k) return 0.0;
  m = std::min(m, k - m);
  double c = 1.0;
  for (std::size_t i = 1; i <= m; ++i) {
    c = c * static_cast<double>(k - m + i) / static_cast<double>(i);
  }
  return c < 0x1.0p53 ? std::round(c) : c;
}

/// Probability that exactly m of k independent providers are active when
/// each is active with probability q.
inline double binomial_weight(std::size_t m, std::size_t k, double q) {
  if (m > k) throw DomainError("binomial_weight: m > k");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("binomial_weight: q outside [0,1]");
  return binomial_coefficient(k, m) * std::pow(q, static_cast<double>(m)) *
         std::pow(1.0 - q, static_cast<double>(k - m));
}

/// All k+1 binomial weights for (k, q).
inline std::vector<double> binomial_pmf(std::size_t k, double q) {
  std::vector<double> w(k + 1);
  for (std::size_t m = 0; m <= k; ++m) w[m] = binomial_weight(m, k, q);
  return w;
}

// D(t) and Q(t) = sum_{s<=t} D(s) for t = 1..horizon. Index 0 holds the
// all-inactive state D(0) = Q(0) = 0.
class MeanFieldCurves {
public:
  MeanFieldCurves() : d_(1, 0.0), q_(1, 0.0) {}

  /// Builds the cumulative curve from D(1..T).
  static MeanFieldCurves from_increments(std::span<const double> d) {
    MeanFieldCurves c;
    for (double x : d) c.push(x);
    return c;
  }

  std::size_t horizon() const noexcept { return d_.size() - 1; }

  double D(std::size_t t) const { return d_.at(t); }
  double Q(std::size_t t) const { return q_.at(t); }

  std::span<const double> d() const { return d_; }
  std::span<const double> q() const { return q_; }

  void push(double d) {
    d_.push_back(d);
    q_.push_back(q_.back() + d);
  }

private:
  std::vector<double> d_;
  std::vector<double> q_;
};

namespace detail {

// Binomial point masses B(x; r, p) for r = 0..max_r, packed row by row.
class BinomialRows {
public:
  BinomialRows() = default;
  BinomialRows(std::size_t max_r, double p) : offsets_(max_r + 2, 0) {
    for (std::size_t r = 0; r <= max_r; ++r) offsets_[r + 1] = offsets_[r] + r + 1;
    mass_.resize(offsets_.back());
    for (std::size_t r = 0; r <= max_r; ++r) {
      for (std::size_t x = 0; x <= r; ++x) mass_[offsets_[r] + x] = binomial_weight(x, r, p);
    }
  }
  std::span<const double> row(std::size_t r) const {
    return {mass_.data() + offsets_[r], r + 1};
  }

private:
  std::vector<std::size_t> offsets_;
  std::vector<double> mass_;
};

// v[m] = P(node still inactive and m of its n providers active), m = 0..n.
// Advances one step in which every inactive provider activates
// independently with the probability the rows were built for.
inline void grow_providers(std::vector<double>& v, const BinomialRows& rows,
                           std::vector<double>& scratch) {
  const std::size_t n = v.size() - 1;
  scratch.assign(n + 1, 0.0);
  for (std::size_t m = 0; m <= n; ++m) {
    if (v[m] == 0.0) continue;
    const auto b = rows.row(n - m);
    for (std::size_t x = 0; x < b.size(); ++x) scratch[m + x] += v[m] * b[x];
  }
  v.swap(scratch);
}

/// Probability that a provider inactive at the end of step s-1 activates at
/// step s, from the population curves.
inline double provider_hazard(double d, double q_prev) {
  const double rest = 1.0 - q_prev;
  return rest > 0.0 ? std::clamp(d / rest, 0.0, 1.0) : 1.0;
}

} // namespace detail

enum class Recursion {
  /// D(t) = sum_k Gamma(k) sum_m B(m,k,Q(t-1)) f(m/k) applied to every node,
  /// whether or not it already fired; Q is clamped at 1.
  literal,
  /// Providers activate independently at the population rate, so the number
  /// of active providers of a degree-k node is B(m,k,Q(t-1)) a priori; the
  /// distribution is carried jointly with the node's own survival, so only
  /// still-inactive nodes fire and their providers are weighted by having
  /// failed to trigger them. Matches the simulator on locally tree-like
  /// graphs. Default.
  conditioned,
};

inline MeanFieldCurves meanfield_forward(const DegreeDistribution& dist, const ActivationFunction& f,
                                         std::size_t horizon,
                                         Recursion mode = Recursion::conditioned) {
  if (horizon < 1) throw ValidationError("mean-field horizon must be at least 1");
  if (dist.empty()) throw ValidationError("mean-field needs a non-empty degree distribution");
  const ActivationTable table(f, dist.max_degree());
  const std::vector<std::pair<std::size_t, double>> classes(dist.begin(), dist.end());
  MeanFieldCurves curves;

  if (mode == Recursion::literal) {
    for (std::size_t t = 1; t <= horizon; ++t) {
      const double q_prev = curves.Q(t - 1);
      double d = 0.0;
      for (const auto& [k, gamma] : classes) {
        const auto weights = binomial_pmf(k, std::clamp(q_prev, 0.0, 1.0));
        const auto& fk = table.row(k);
        double hazard = 0.0;
        for (std::size_t m = 0; m <= k; ++m) hazard += weights[m] * fk[m];
        d += gamma * hazard;
      }
      curves.push(std::clamp(d, 0.0, 1.0 - q_prev));
    }
    return curves;
  }

  std::vector<std::vector<double>> state;
  for (const auto& [k, gamma] : classes) {
    state.emplace_back(k + 1, 0.0);
    state.back()[0] = 1.0;
  }
  std::vector<double> scratch;
  for (std::size_t t = 1; t <= horizon; ++t) {
    const double q_prev = curves.Q(t - 1);
    double d = 0.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const auto& fk = table.row(classes[c].first);
      auto& v = state[c];
      double fire = 0.0;
      for (std::size_t m = 0; m < v.size(); ++m) {
        fire += v[m] * fk[m];
        v[m] *= 1.0 - fk[m];
      }
      d += classes[c].second * fire;
    }
    d = std::clamp(d, 0.0, 1.0 - q_prev);
    const detail::BinomialRows rows(dist.max_degree(), detail::provider_hazard(d, q_prev));
    for (auto& v : state) detail::grow_providers(v, rows, scratch);
    curves.push(d);
  }
  return curves;
}

/// D(t) = activations at step t over all cascades / (N * cascades), for
/// t = 1..t_max. Censored entries count toward no step.
inline MeanFieldCurves empirical_curves(const CascadeTraceSet& traces) {
  std::vector<std::size_t> counts(traces.t_max() + 1, 0);
  for (std::size_t c = 0; c < traces.n_cascades(); ++c) {
    for (Time t : traces.cascade(c)) {
      if (!is_censored(t)) ++counts[t];
    }
  }
  const double denom = static_cast<double>(traces.n_nodes()) * static_cast<double>(traces.n_cascades());
  MeanFieldCurves curves;
  for (std::size_t t = 1; t < counts.size(); ++t) {
    curves.push(denom > 0.0 ? static_cast<double>(counts[t]) / denom : 0.0);
  }
  return curves;
}

} // namespace cascinv
