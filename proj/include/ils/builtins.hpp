#pragma once

// Ready-made quotients and sections: the reciprocal quotient on (0,1) with
// its 1-Lipschitz section, and the linear first-coordinate quotient on R^2
// with polynomial graph sections.

#include "ils/metric_core.hpp"
#include "ils/quasi_linear.hpp"

#include <cmath>
#include <memory>

namespace ils {

/// pi(x) = 1/x from X = (0,1) onto Y = (1, inf). Fibers are singletons, so
/// the point-to-fiber distance is |x - 1/y|.
inline std::shared_ptr<Quotient> make_reciprocal_quotient() {
  auto q = std::make_shared<Quotient>();
  q->total_dim = 1;
  q->base_dim = 1;
  q->project = [](const Vec& x) { return Vec(x.cwiseInverse()); };
  q->fiber_distance = [](const Vec& x, const Vec& y) {
    return std::abs(x[0] - 1.0 / y[0]);
  };
  q->distance = [](const Vec& x, const Vec& y) { return std::abs(x[0] - y[0]); };
  q->fiber_set_distance = [](const Vec& y1, const Vec& y2) {
    return std::abs(1.0 / y1[0] - 1.0 / y2[0]);
  };
  q->sample_total = box_sampler(Vec::Constant(1, 0.05), Vec::Constant(1, 0.95));
  return q;
}

/// The section phi(y) = 1/y of the reciprocal quotient, sampled on
/// (base_lo, base_hi) in (1, inf).
inline Section make_reciprocal_section(double base_lo = 1.1, double base_hi = 10.0) {
  Section s;
  s.quotient = make_reciprocal_quotient();
  s.evaluate = [](const Vec& y) { return Vec(y.cwiseInverse()); };
  s.sample_base =
      box_sampler(Vec::Constant(1, base_lo), Vec::Constant(1, base_hi));
  s.domain_contains = [](const Vec& y) { return y[0] > 1.0; };
  return s;
}

/// pi(x1, x2) = x1 on R^2 with the Euclidean distance. Fibers are vertical
/// lines, so both fiber distances are coordinate gaps.
inline std::shared_ptr<Quotient> make_linear_quotient(double box_half_width = 3.0) {
  auto q = std::make_shared<Quotient>();
  q->total_dim = 2;
  q->base_dim = 1;
  q->project = [](const Vec& x) { return Vec(x.head(1)); };
  q->fiber_distance = [](const Vec& x, const Vec& y) {
    return std::abs(x[0] - y[0]);
  };
  q->distance = [](const Vec& x, const Vec& y) { return (x - y).norm(); };
  q->fiber_set_distance = [](const Vec& y1, const Vec& y2) {
    return std::abs(y1[0] - y2[0]);
  };
  q->sample_total = box_sampler(Vec::Constant(2, -box_half_width),
                                Vec::Constant(2, box_half_width));
  q->scaling = 1.0;
  return q;
}

/// Graph section phi(y) = (y, g(y)) of the linear quotient.
inline Section make_graph_section(std::shared_ptr<const Quotient> q,
                                  std::function<double(double)> g,
                                  double base_lo = -2.0, double base_hi = 2.0) {
  Section s;
  s.quotient = std::move(q);
  s.evaluate = [g](const Vec& y) {
    Vec x(2);
    x[0] = y[0];
    x[1] = g(y[0]);
    return x;
  };
  s.sample_base =
      box_sampler(Vec::Constant(1, base_lo), Vec::Constant(1, base_hi));
  return s;
}

inline QuasiLinearQuotient make_linear_quasi(std::shared_ptr<const Quotient> base) {
  QuasiLinearQuotient q;
  q.base = std::move(base);
  q.lambda = 1.0;
  q.nonnegative_scalars = false;
  q.signed_power = false;  // lambda = 1 is an odd integer; all reals allowed
  return q;
}

}  // namespace ils
