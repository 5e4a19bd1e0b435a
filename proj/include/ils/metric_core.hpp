#pragma once

// Quotient-map / section model and sampling estimators for intrinsic
// Lipschitz constants and intrinsic slopes. No group structure assumed;
// the Carnot machinery plugs in through the same Quotient interface.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ils {

using Vec = Eigen::VectorXd;
using Rng = std::mt19937_64;

inline constexpr double kDegenerateTol = 1e-12;

inline bool all_finite(const Vec& v) { return v.allFinite(); }

/// Evaluable quotient map pi : X -> Y with a point-to-fiber distance solver.
/// fiber_distance(x, y) computes d(x, pi^{-1}(y)); fiber_set_distance, when
/// supplied, computes d(pi^{-1}(y1), pi^{-1}(y2)) in closed form.
/// The distance is allowed to be a quasi-metric; metric_axiom_audit measures
/// the triangle defect so reports can carry it.
struct Quotient {
  int total_dim = 0;
  int base_dim = 0;
  std::function<Vec(const Vec&)> project;
  std::function<double(const Vec&, const Vec&)> fiber_distance;
  std::function<double(const Vec&, const Vec&)> distance;
  std::function<double(const Vec&, const Vec&)> fiber_set_distance;  // optional
  std::function<Vec(Rng&)> sample_total;                             // optional
  std::optional<double> scaling;  // exponent of the weak-linearity condition
};

/// A map base -> total space declared against a Quotient, with a seeded
/// base-point sampler. perturb produces a point in the coordinate ball of
/// radius r around y, used by the slope estimator; when absent a Euclidean
/// ball sample is used. domain_contains rejects out-of-domain ball samples.
struct Section {
  std::shared_ptr<const Quotient> quotient;
  std::function<Vec(const Vec&)> evaluate;
  std::function<Vec(Rng&)> sample_base;
  std::function<Vec(const Vec&, double, Rng&)> perturb;  // optional
  std::function<bool(const Vec&)> domain_contains;       // optional
};

struct SectionCheck {
  bool pass = false;
  std::optional<Vec> witness;  // first failing base point
  double max_defect = 0.0;
  int n_samples = 0;
  double tolerance = 0.0;
};

/// L-hat is the max realized ratio over the sampled pairs; it is a lower
/// bound for the true intrinsic Lipschitz constant, never an exact value.
struct LipschitzReport {
  double estimate = 0.0;
  Vec witness_y1, witness_y2;
  int n_pairs = 0;
  int degenerate_pairs = 0;
  double tolerance = kDegenerateTol;
  std::string note = "lower bound: sup over sampled pairs only";
};

struct SlopeEstimate {
  Vec base_point;
  std::vector<double> radii;
  std::vector<double> sup_ratios;
  double extrapolated = 0.0;
  std::string note =
      "operational limsup approximation: dyadic radii, per-level sup";
};

struct MetricAudit {
  double max_triangle_defect = 0.0;  // d(x,z) - d(x,y) - d(y,z)
  double max_asymmetry = 0.0;        // |d(x,y) - d(y,x)|
  int n_triples = 0;
};

struct PairSample {
  Vec y1, y2;
};

inline std::vector<PairSample> sample_pairs(const Section& s, int n_pairs,
                                            std::uint64_t seed) {
  if (n_pairs < 1) throw std::invalid_argument("sample_pairs: n_pairs < 1");
  Rng rng(seed);
  std::vector<PairSample> out;
  out.reserve(n_pairs);
  for (int i = 0; i < n_pairs; ++i) {
    PairSample p;
    p.y1 = s.sample_base(rng);
    p.y2 = s.sample_base(rng);
    out.push_back(std::move(p));
  }
  return out;
}

namespace detail {

inline void parallel_for(int n, int workers, const std::function<void(int)>& f) {
  if (workers <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  workers = std::min(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Lexicographic comparison of (y1, y2) pairs, used as a deterministic
// tie-break so the argmax does not depend on evaluation order.
inline bool pair_less(const PairSample& a, const PairSample& b) {
  for (int i = 0; i < a.y1.size(); ++i) {
    if (a.y1[i] != b.y1[i]) return a.y1[i] < b.y1[i];
  }
  for (int i = 0; i < a.y2.size(); ++i) {
    if (a.y2[i] != b.y2[i]) return a.y2[i] < b.y2[i];
  }
  return false;
}

}  // namespace detail

/// Realized ratios d(phi(y1), phi(y2)) / d(phi(y1), pi^{-1}(y2)) for a fixed
/// pair set. Degenerate pairs (fiber distance below tol) get NaN, so matched
/// comparisons between two sections stay index-aligned.
inline std::vector<double> pairwise_ratios(const Section& s,
                                           const std::vector<PairSample>& pairs,
                                           double tol = kDegenerateTol,
                                           int workers = 1) {
  const auto& q = *s.quotient;
  std::vector<double> ratios(pairs.size(),
                             std::numeric_limits<double>::quiet_NaN());
  detail::parallel_for(static_cast<int>(pairs.size()), workers, [&](int i) {
    const auto& p = pairs[i];
    if ((p.y1 - p.y2).lpNorm<Eigen::Infinity>() <= tol) return;
    Vec x1 = s.evaluate(p.y1);
    double denom = q.fiber_distance(x1, p.y2);
    if (denom < tol) return;
    ratios[i] = q.distance(x1, s.evaluate(p.y2)) / denom;
  });
  return ratios;
}

/// Checks pi(phi(y)) = y in sup norm on n_samples sampled base points.
inline SectionCheck verify_section(const Section& s, int n_samples, double tol,
                                   std::uint64_t seed = 0) {
  if (n_samples < 1) throw std::invalid_argument("verify_section: n_samples < 1");
  const auto& q = *s.quotient;
  Rng rng(seed);
  SectionCheck out;
  out.n_samples = n_samples;
  out.tolerance = tol;
  out.pass = true;
  for (int i = 0; i < n_samples; ++i) {
    Vec y = s.sample_base(rng);
    Vec x;
    try {
      x = s.evaluate(y);
    } catch (const std::exception& e) {
      throw std::runtime_error("verify_section: section evaluation failed at y=[" +
                               std::to_string(y[0]) + ",...]: " + e.what());
    }
    double defect = (q.project(x) - y).lpNorm<Eigen::Infinity>();
    out.max_defect = std::max(out.max_defect, defect);
    if (defect > tol && out.pass) {
      out.pass = false;
      out.witness = y;
    }
  }
  return out;
}

/// Sampled lower bound for the intrinsic Lipschitz constant, with the
/// witness pair realizing the bound. Deterministic for a fixed seed
/// regardless of worker count (reduction by max with lexicographic
/// tie-break on the witness).
inline LipschitzReport lipschitz_estimate(const Section& s, int n_pairs,
                                          std::uint64_t seed,
                                          double tol = kDegenerateTol,
                                          int workers = 1) {
  auto pairs = sample_pairs(s, n_pairs, seed);
  auto ratios = pairwise_ratios(s, pairs, tol, workers);
  LipschitzReport rep;
  rep.n_pairs = n_pairs;
  rep.tolerance = tol;
  int best = -1;
  for (int i = 0; i < static_cast<int>(ratios.size()); ++i) {
    if (std::isnan(ratios[i])) {
      ++rep.degenerate_pairs;
      continue;
    }
    if (best < 0 || ratios[i] > ratios[best] ||
        (ratios[i] == ratios[best] && detail::pair_less(pairs[i], pairs[best]))) {
      best = i;
    }
  }
  if (best < 0)
    throw std::runtime_error("lipschitz_estimate: no informative pairs");
  rep.estimate = ratios[best];
  rep.witness_y1 = pairs[best].y1;
  rep.witness_y2 = pairs[best].y2;
  return rep;
}

namespace detail {

inline Vec ball_perturb(const Section& s, const Vec& y, double r, Rng& rng) {
  if (s.perturb) return s.perturb(y, r, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec u(y.size());
  for (int i = 0; i < u.size(); ++i) u[i] = gauss(rng);
  double norm = u.norm();
  if (norm == 0.0) return y;
  double radius = r * std::pow(unif(rng), 1.0 / static_cast<double>(y.size()));
  return y + (radius / norm) * u;
}

}  // namespace detail

/// Sup-ratio profile over a dyadic radius schedule r_k = r0 * 2^{-k}.
/// The extrapolated value is the finest-level sup; this approximates a
/// limsup and is documented as such in the returned note.
inline SlopeEstimate intrinsic_slope(const Section& s, const Vec& y, double r0,
                                     int n_levels, int samples_per_level,
                                     std::uint64_t seed = 0,
                                     double tol = kDegenerateTol) {
  if (n_levels < 2) throw std::invalid_argument("intrinsic_slope: n_levels < 2");
  if (r0 <= 0) throw std::invalid_argument("intrinsic_slope: r0 <= 0");
  const auto& q = *s.quotient;
  Rng rng(seed);
  SlopeEstimate out;
  out.base_point = y;
  Vec xy = s.evaluate(y);
  for (int k = 0; k < n_levels; ++k) {
    double r = r0 * std::pow(2.0, -k);
    double sup = -1.0;
    for (int j = 0; j < samples_per_level; ++j) {
      Vec z = detail::ball_perturb(s, y, r, rng);
      if (s.domain_contains && !s.domain_contains(z)) continue;
      if ((z - y).lpNorm<Eigen::Infinity>() <= tol) continue;
      double denom = q.fiber_distance(xy, z);
      if (denom < tol) continue;
      sup = std::max(sup, q.distance(xy, s.evaluate(z)) / denom);
    }
    if (sup < 0.0)
      throw std::runtime_error("intrinsic_slope: empty punctured ball sample at level " +
                               std::to_string(k));
    out.radii.push_back(r);
    out.sup_ratios.push_back(sup);
  }
  out.extrapolated = out.sup_ratios.back();
  return out;
}

/// Measures symmetry and triangle defects of the total-space distance on
/// random triples; positive triangle defect means the distance is only a
/// quasi-metric on the sampled region.
inline MetricAudit metric_axiom_audit(const Quotient& q, int n_triples,
                                      std::uint64_t seed) {
  if (n_triples < 1) throw std::invalid_argument("metric_axiom_audit: n_triples < 1");
  if (!q.sample_total)
    throw std::runtime_error("metric_axiom_audit: quotient has no total-space sampler");
  Rng rng(seed);
  MetricAudit out;
  out.n_triples = n_triples;
  for (int i = 0; i < n_triples; ++i) {
    Vec x = q.sample_total(rng);
    Vec y = q.sample_total(rng);
    Vec z = q.sample_total(rng);
    double dxy = q.distance(x, y);
    double dyx = q.distance(y, x);
    double dyz = q.distance(y, z);
    double dxz = q.distance(x, z);
    out.max_triangle_defect = std::max(out.max_triangle_defect, dxz - dxy - dyz);
    out.max_asymmetry = std::max(out.max_asymmetry, std::abs(dxy - dyx));
  }
  return out;
}

/// Deterministic 1-D grid sampler cycling lo, lo+step, ..., hi; ignores the
/// RNG. Useful when a reproducible first witness matters.
inline std::function<Vec(Rng&)> grid_sampler(double lo, double hi, int n_nodes) {
  if (n_nodes < 2) throw std::invalid_argument("grid_sampler: need >= 2 nodes");
  auto counter = std::make_shared<int>(0);
  return [lo, hi, n_nodes, counter](Rng&) {
    int i = (*counter)++ % n_nodes;
    Vec v(1);
    v[0] = lo + (hi - lo) * i / (n_nodes - 1);
    return v;
  };
}

/// Uniform box sampler, the stock base/total sampler for the built-ins.
inline std::function<Vec(Rng&)> box_sampler(const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size())
    throw std::invalid_argument("box_sampler: bound dimension mismatch");
  return [lo, hi](Rng& rng) {
    Vec v(lo.size());
    for (int i = 0; i < v.size(); ++i) {
      std::uniform_real_distribution<double> u(lo[i], hi[i]);
      v[i] = u(rng);
    }
    return v;
  };
}

}  // namespace ils
