#pragma once

// Weak-linearity condition pi(a x1 + b x2) = a^lambda pi(x1) + b^lambda pi(x2),
// the section algebra it supports (combination, scaling, sums), the
// fiber-scaling identity, and the Leibniz slope bound.

#include "ils/metric_core.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace ils {

/// a^lambda for real a. Defined for a >= 0 always; for a < 0 only when
/// lambda is an odd integer, or as sign(a)|a|^lambda when the instance
/// opts in via signed_power.
inline double power_lambda(double a, double lambda, bool signed_power = false) {
  if (a >= 0.0) return std::pow(a, lambda);
  double rounded = std::round(lambda);
  bool odd_integer = std::abs(lambda - rounded) < 1e-12 &&
                     std::llround(rounded) % 2 != 0;
  if (odd_integer || signed_power) return -std::pow(-a, lambda);
  throw std::domain_error("power_lambda: exponent undefined for negative base " +
                          std::to_string(a) + " with lambda " +
                          std::to_string(lambda));
}

/// A quotient declared to satisfy the weak-linearity condition with
/// exponent lambda. nonnegative_scalars restricts the sampled (alpha, beta)
/// domain to [0, inf); signed_power opts in to sign(a)|a|^lambda otherwise.
struct QuasiLinearQuotient {
  std::shared_ptr<const Quotient> base;
  double lambda = 1.0;
  bool nonnegative_scalars = true;
  bool signed_power = false;

  double pow_l(double a) const { return power_lambda(a, lambda, signed_power); }
};

/// The quotient y -> mu * pi(y). Its fibers satisfy (mu pi)^{-1}(y) =
/// pi^{-1}(y / mu), which lets it reuse the parent's fiber solver.
inline Quotient rescale_quotient(std::shared_ptr<const Quotient> parent,
                                 double mu) {
  if (mu == 0.0) throw std::invalid_argument("rescale_quotient: factor is zero");
  Quotient q;
  q.total_dim = parent->total_dim;
  q.base_dim = parent->base_dim;
  q.project = [parent, mu](const Vec& x) { return Vec(mu * parent->project(x)); };
  q.fiber_distance = [parent, mu](const Vec& x, const Vec& y) {
    return parent->fiber_distance(x, Vec(y / mu));
  };
  q.distance = parent->distance;
  if (parent->fiber_set_distance) {
    q.fiber_set_distance = [parent, mu](const Vec& y1, const Vec& y2) {
      return parent->fiber_set_distance(Vec(y1 / mu), Vec(y2 / mu));
    };
  }
  q.sample_total = parent->sample_total;
  q.scaling = parent->scaling;
  return q;
}

/// Pointwise weak-linearity defect at a fixed (alpha, beta, x1, x2).
inline double quasi_linearity_defect_at(const QuasiLinearQuotient& q,
                                        double alpha, double beta,
                                        const Vec& x1, const Vec& x2) {
  const auto& base = *q.base;
  Vec lhs = base.project(Vec(alpha * x1 + beta * x2));
  Vec rhs = q.pow_l(alpha) * base.project(x1) + q.pow_l(beta) * base.project(x2);
  return (lhs - rhs).lpNorm<Eigen::Infinity>();
}

/// Max weak-linearity defect over sampled (alpha, beta, x1, x2), with
/// (alpha, beta) drawn from the declared scalar domain.
inline double check_quasi_linearity(const QuasiLinearQuotient& q, int n_samples,
                                    std::uint64_t seed) {
  if (n_samples < 1)
    throw std::invalid_argument("check_quasi_linearity: n_samples < 1");
  if (!q.base->sample_total)
    throw std::runtime_error("check_quasi_linearity: no total-space sampler");
  Rng rng(seed);
  double scal_lo = q.nonnegative_scalars ? 0.0 : -2.0;
  std::uniform_real_distribution<double> scal(scal_lo, 2.0);
  double max_defect = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    double alpha = scal(rng);
    double beta = scal(rng);
    if (alpha == 0.0 && beta == 0.0) continue;
    Vec x1 = q.base->sample_total(rng);
    Vec x2 = q.base->sample_total(rng);
    max_defect = std::max(max_defect, quasi_linearity_defect_at(q, alpha, beta, x1, x2));
  }
  return max_defect;
}

/// eta(y) = alpha phi(y) + beta psi(y), a section of (1/(a^l + b^l)) pi.
/// Verified on n_verify samples; a failure means the declared
/// quasi-linearity does not hold along the two sections.
inline Section combine_sections(const QuasiLinearQuotient& q, const Section& phi,
                                const Section& psi, double alpha, double beta,
                                int n_verify = 100, double tol = 1e-9,
                                std::uint64_t seed = 0) {
  if (alpha == 0.0 && beta == 0.0)
    throw std::invalid_argument("combine_sections: (alpha, beta) = (0, 0)");
  double denom = q.pow_l(alpha) + q.pow_l(beta);
  if (denom == 0.0)
    throw std::invalid_argument("combine_sections: alpha^lambda + beta^lambda = 0");
  Section eta;
  eta.quotient = std::make_shared<Quotient>(rescale_quotient(q.base, 1.0 / denom));
  auto phi_eval = phi.evaluate;
  auto psi_eval = psi.evaluate;
  eta.evaluate = [phi_eval, psi_eval, alpha, beta](const Vec& y) {
    return Vec(alpha * phi_eval(y) + beta * psi_eval(y));
  };
  eta.sample_base = phi.sample_base;
  eta.perturb = phi.perturb;
  eta.domain_contains = phi.domain_contains;
  auto check = verify_section(eta, n_verify, tol, seed);
  if (!check.pass) {
    throw std::runtime_error("combine_sections: quasi-linearity violated at y[0]=" +
                             std::to_string((*check.witness)[0]) +
                             " (defect " + std::to_string(check.max_defect) + ")");
  }
  return eta;
}

struct ScaleSectionResult {
  Section section;              // alpha * phi against (1/alpha^lambda) pi
  LipschitzReport before, after;
  double max_ratio_deviation = 0.0;  // over matched sample pairs
};

/// alpha * phi as a section of (1/alpha^lambda) pi. The constant-preservation
/// check compares every realized pairwise ratio on matched samples, not just
/// the sup.
inline ScaleSectionResult scale_section(const QuasiLinearQuotient& q,
                                        const Section& phi, double alpha,
                                        int n_pairs = 200,
                                        std::uint64_t seed = 1,
                                        double tol = kDegenerateTol) {
  if (alpha == 0.0) throw std::invalid_argument("scale_section: alpha = 0");
  ScaleSectionResult out;
  // Degenerate combination with beta = 0; bypass the (0,0) guard directly.
  double denom = q.pow_l(alpha);
  out.section.quotient =
      std::make_shared<Quotient>(rescale_quotient(q.base, 1.0 / denom));
  auto phi_eval = phi.evaluate;
  out.section.evaluate = [phi_eval, alpha](const Vec& y) {
    return Vec(alpha * phi_eval(y));
  };
  out.section.sample_base = phi.sample_base;
  out.section.perturb = phi.perturb;
  out.section.domain_contains = phi.domain_contains;

  auto pairs = sample_pairs(phi, n_pairs, seed);
  auto r_before = pairwise_ratios(phi, pairs, tol);
  auto r_after = pairwise_ratios(out.section, pairs, tol);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (std::isnan(r_before[i]) || std::isnan(r_after[i])) continue;
    out.max_ratio_deviation =
        std::max(out.max_ratio_deviation, std::abs(r_after[i] - r_before[i]));
  }
  out.before = lipschitz_estimate(phi, n_pairs, seed, tol);
  out.after = lipschitz_estimate(out.section, n_pairs, seed, tol);
  return out;
}

struct FiberScalingResult {
  double lhs = 0.0;   // |alpha| d(pi^{-1}(y1), pi^{-1}(y2))
  double rhs = 0.0;   // d((1/a^l pi)^{-1}(y1), (1/a^l pi)^{-1}(y2))
  double defect = 0.0;
};

inline FiberScalingResult fiber_scaling_check(const QuasiLinearQuotient& q,
                                              double alpha, const Vec& y1,
                                              const Vec& y2) {
  if (alpha == 0.0) throw std::invalid_argument("fiber_scaling_check: alpha = 0");
  if (!q.base->fiber_set_distance)
    throw std::runtime_error("fiber_scaling_check: no fiber-set distance solver");
  FiberScalingResult out;
  out.lhs = std::abs(alpha) * q.base->fiber_set_distance(y1, y2);
  auto rescaled = rescale_quotient(q.base, 1.0 / q.pow_l(alpha));
  out.rhs = rescaled.fiber_set_distance(y1, y2);
  out.defect = std::abs(out.lhs - out.rhs);
  return out;
}

struct SobolevEstimate {
  double c_hat = 1.0;
  Vec witness_y, witness_z;
  int n_pairs = 0;
  int degenerate_pairs = 0;
  std::string note = "lower bound for the optimal constant c";
};

/// c-hat = max over sampled (y, z) and f in {phi, psi} of
/// d(f(y), pi^{-1}(z)) / d(pi^{-1}(y), pi^{-1}(z)).
inline SobolevEstimate sobolev_constant_estimate(const QuasiLinearQuotient& q,
                                                 const Section& phi,
                                                 const Section& psi, int n_pairs,
                                                 std::uint64_t seed = 2,
                                                 double tol = kDegenerateTol) {
  if (!q.base->fiber_set_distance)
    throw std::runtime_error("sobolev_constant_estimate: no fiber-set distance solver");
  auto pairs = sample_pairs(phi, n_pairs, seed);
  SobolevEstimate out;
  out.n_pairs = n_pairs;
  bool found = false;
  for (const auto& p : pairs) {
    double denom = q.base->fiber_set_distance(p.y1, p.y2);
    if (denom < tol) {
      ++out.degenerate_pairs;
      continue;
    }
    for (const Section* f : {&phi, &psi}) {
      double ratio = q.base->fiber_distance(f->evaluate(p.y1), p.y2) / denom;
      if (!found || ratio > out.c_hat) {
        out.c_hat = ratio;
        out.witness_y = p.y1;
        out.witness_z = p.y2;
        found = true;
      }
    }
  }
  if (!found)
    throw std::runtime_error("sobolev_constant_estimate: all denominators degenerate");
  return out;
}

struct SlopeParams {
  double r0 = 0.5;
  int n_levels = 6;
  int samples_per_level = 200;
  std::uint64_t seed = 3;
};

struct LeibnizResult {
  double lhs = 0.0;  // Ils(phi + psi)(y) against the factor-1/2 quotient
  double rhs = 0.0;  // (c / 2^{1/lambda}) (Ils(phi)(y) + Ils(psi)(y))
  bool satisfied = false;
  double c_used = 1.0;
  std::string c_source;  // "supplied" or "sobolev_estimate"
};

/// Leibniz slope bound for eta = phi + psi, built via combine_sections with
/// alpha = beta = 1. When c is not supplied it is taken from
/// sobolev_constant_estimate and the report names the source.
inline LeibnizResult leibniz_bound_check(const QuasiLinearQuotient& q,
                                         const Section& phi, const Section& psi,
                                         const Vec& y, std::optional<double> c,
                                         const SlopeParams& sp = {},
                                         double tol = 1e-9) {
  LeibnizResult out;
  if (c) {
    out.c_used = *c;
    out.c_source = "supplied";
  } else {
    out.c_used = sobolev_constant_estimate(q, phi, psi, 500, sp.seed).c_hat;
    out.c_source = "sobolev_estimate";
  }
  Section eta = combine_sections(q, phi, psi, 1.0, 1.0);
  out.lhs = intrinsic_slope(eta, y, sp.r0, sp.n_levels, sp.samples_per_level,
                            sp.seed).extrapolated;
  double s_phi = intrinsic_slope(phi, y, sp.r0, sp.n_levels, sp.samples_per_level,
                                 sp.seed).extrapolated;
  double s_psi = intrinsic_slope(psi, y, sp.r0, sp.n_levels, sp.samples_per_level,
                                 sp.seed).extrapolated;
  out.rhs = out.c_used / std::pow(2.0, 1.0 / q.lambda) * (s_phi + s_psi);
  out.satisfied = out.lhs <= out.rhs + tol;
  return out;
}

struct SumSectionsResult {
  Section section;
  LipschitzReport report;
  double quasi_linearity_defect = 0.0;
};

/// Sum of two sections on an instance with straight-line fibers: eta built via
/// combine_sections(1, 1), estimated against the factor-1/2 rescaled quotient.
/// Rejects instances whose quasi-linearity defect exceeds tol.
inline SumSectionsResult sum_sections(const QuasiLinearQuotient& q,
                                      const Section& phi, const Section& psi,
                                      int n_pairs = 500, std::uint64_t seed = 4,
                                      double tol = 1e-9) {
  SumSectionsResult out;
  out.quasi_linearity_defect = check_quasi_linearity(q, 200, seed);
  if (out.quasi_linearity_defect > tol) {
    throw std::runtime_error("sum_sections: quasi-linearity defect " +
                             std::to_string(out.quasi_linearity_defect) +
                             " exceeds tolerance");
  }
  out.section = combine_sections(q, phi, psi, 1.0, 1.0, 100, tol, seed);
  out.report = lipschitz_estimate(out.section, n_pairs, seed);
  return out;
}

}  // namespace ils
