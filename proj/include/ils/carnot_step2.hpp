#pragma once

// Step-2 Carnot group arithmetic: layered points, the skew-bilinear group
// law, intrinsic dilations, the homogeneous max gauge, the splitting with a
// one-dimensional H along the first coordinate, and the 1-D fiber-distance
// solver for the coset projection.

#include "ils/metric_core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ils {

/// Layered coordinates of a group element: first layer in R^m, second in R^n.
struct GroupPoint {
  Vec p1, p2;
};

inline Vec flatten(const GroupPoint& p) {
  Vec v(p.p1.size() + p.p2.size());
  v << p.p1, p.p2;
  return v;
}

/// G = (R^{m+n}, ., delta_lambda) defined by n linearly independent
/// skew-symmetric m x m matrices B^(1), ..., B^(n).
class Step2Group {
 public:
  Step2Group(int m, int n, std::vector<Eigen::MatrixXd> b)
      : m_(m), n_(n), b_(std::move(b)) {
    if (m_ < 1 || n_ < 1) throw std::invalid_argument("Step2Group: m, n must be positive");
    if (static_cast<int>(b_.size()) != n_)
      throw std::invalid_argument("Step2Group: expected n matrices");
    Eigen::MatrixXd vecs(n_, m_ * m_);
    for (int l = 0; l < n_; ++l) {
      const auto& B = b_[l];
      if (B.rows() != m_ || B.cols() != m_)
        throw std::invalid_argument("Step2Group: matrix dimension mismatch");
      if ((B + B.transpose()).lpNorm<Eigen::Infinity>() > 1e-14)
        throw std::invalid_argument("Step2Group: matrix " + std::to_string(l) +
                                    " is not skew-symmetric");
      vecs.row(l) = Eigen::Map<const Eigen::RowVectorXd>(B.data(), m_ * m_);
    }
    if (Eigen::FullPivLU<Eigen::MatrixXd>(vecs).rank() != n_)
      throw std::invalid_argument("Step2Group: matrices are linearly dependent");
  }

  int m() const { return m_; }
  int n() const { return n_; }
  int dim() const { return m_ + n_; }
  const Eigen::MatrixXd& b(int l) const { return b_[l]; }

  GroupPoint identity() const {
    return {Vec::Zero(m_), Vec::Zero(n_)};
  }

  GroupPoint unflatten(const Vec& v) const {
    if (v.size() != dim()) throw std::invalid_argument("unflatten: dimension mismatch");
    return {v.head(m_), v.tail(n_)};
  }

  /// Per-layer bilinear term <B p1, q1>_l = <B^(l) p1, q1>.
  Vec bracket(const Vec& p1, const Vec& q1) const {
    Vec out(n_);
    for (int l = 0; l < n_; ++l) out[l] = q1.dot(b_[l] * p1);
    return out;
  }

  GroupPoint multiply(const GroupPoint& p, const GroupPoint& q) const {
    check(p);
    check(q);
    return {p.p1 + q.p1, p.p2 + q.p2 + 0.5 * bracket(p.p1, q.p1)};
  }

  GroupPoint invert(const GroupPoint& p) const {
    check(p);
    return {-p.p1, -p.p2};
  }

  GroupPoint dilate(double lambda, const GroupPoint& p) const {
    if (lambda <= 0.0) throw std::invalid_argument("dilate: lambda must be positive");
    check(p);
    return {lambda * p.p1, lambda * lambda * p.p2};
  }

  /// Homogeneous gauge max{ |p1|, sqrt(|p2|) }. Exactly delta-homogeneous and
  /// left-invariant under the induced distance; the triangle inequality is
  /// instance-dependent and is audited, not assumed.
  double gauge_norm(const GroupPoint& p) const {
    check(p);
    return std::max(p.p1.norm(), std::sqrt(p.p2.norm()));
  }

  double distance(const GroupPoint& p, const GroupPoint& q) const {
    return gauge_norm(multiply(invert(q), p));
  }

 private:
  void check(const GroupPoint& p) const {
    if (p.p1.size() != m_ || p.p2.size() != n_)
      throw std::invalid_argument("Step2Group: point dimension mismatch");
  }

  int m_, n_;
  std::vector<Eigen::MatrixXd> b_;
};

/// Splitting G = N x| H with H the first-coordinate axis and
/// N = { x : x_1 = 0 }. H is a one-parameter subgroup exactly, since
/// <B^(l) e1, e1> = 0 by skew-symmetry.
class Splitting {
 public:
  explicit Splitting(Step2Group group) : group_(std::move(group)) {}

  const Step2Group& group() const { return group_; }

  GroupPoint h(double t) const {
    GroupPoint p = group_.identity();
    p.p1[0] = t;
    return p;
  }

  /// Coset projection: the unique point of the fiber through p with first
  /// coordinate 0. Computed by the explicit second-layer formula
  ///   [pi(p)]_{m+l} = p_{m+l} + 1/2 <B^(l)(0, p_2..p_m), (p_1, 0..0)>,
  /// cross-checked against the normal form h(-p_1) . p obtained from the
  /// group law. The two agree identically; a mismatch beyond tol means a
  /// broken group datum.
  GroupPoint project_N(const GroupPoint& p, double tol = 1e-12) const {
    Vec p1_rest = p.p1;
    p1_rest[0] = 0.0;
    Vec e1_scaled = Vec::Zero(group_.m());
    e1_scaled[0] = p.p1[0];
    GroupPoint out{p1_rest, p.p2 + 0.5 * group_.bracket(p1_rest, e1_scaled)};

    GroupPoint normal = group_.multiply(h(-p.p1[0]), p);
    double defect = std::max(
        (out.p1 - normal.p1).lpNorm<Eigen::Infinity>(),
        (out.p2 - normal.p2).lpNorm<Eigen::Infinity>());
    if (defect > tol)
      throw std::runtime_error(
          "project_N: formula vs coset normal form disagree (defect " +
          std::to_string(defect) + ")");
    return out;
  }

  /// d(x, fiber of y) for y in N, where the fiber is { h(t) . y }. The gauge
  /// dominates the first-layer coordinate, so the minimizer lies in
  /// [t0 - g0, t0 + g0] with t0 the first coordinate of y^{-1} x and
  /// g0 = d(x, y): outside the bracket the objective already exceeds g0.
  /// 256-point scan, then golden-section refinement to width 1e-10.
  double fiber_distance(const GroupPoint& x, const GroupPoint& y) const {
    if (std::abs(y.p1[0]) > 1e-13)
      throw std::invalid_argument("fiber_distance: y is not in N");
    double g0 = group_.distance(x, y);
    if (g0 == 0.0) return 0.0;
    double t0 = x.p1[0] - y.p1[0];
    auto f = [&](double t) { return group_.distance(x, group_.multiply(h(t), y)); };

    const int kScan = 256;
    double lo = t0 - g0, hi = t0 + g0;
    double step = (hi - lo) / kScan;
    int best = 0;
    double best_val = f(lo);
    for (int i = 1; i <= kScan; ++i) {
      double v = f(lo + i * step);
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    double a = lo + std::max(0, best - 1) * step;
    double b = lo + std::min(kScan, best + 1) * step;
    // Golden-section on [a, b].
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-10) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = f(d);
      }
    }
    return std::min({best_val, fc, fd});
  }

 private:
  Step2Group group_;
};

/// The splitting as a metric_core Quotient on flattened coordinates. Base
/// points are the N-points embedded in R^{m+n} with first coordinate 0.
inline Quotient make_quotient(std::shared_ptr<const Splitting> split,
                              double box_half_width = 2.0) {
  const auto& g = split->group();
  Quotient q;
  q.total_dim = g.dim();
  q.base_dim = g.dim();  // embedded; first coordinate identically 0
  q.project = [split](const Vec& x) {
    return flatten(split->project_N(split->group().unflatten(x)));
  };
  q.fiber_distance = [split](const Vec& x, const Vec& y) {
    return split->fiber_distance(split->group().unflatten(x),
                                 split->group().unflatten(y));
  };
  q.distance = [split](const Vec& x, const Vec& y) {
    return split->group().distance(split->group().unflatten(x),
                                   split->group().unflatten(y));
  };
  Vec lo = Vec::Constant(g.dim(), -box_half_width);
  Vec hi = Vec::Constant(g.dim(), box_half_width);
  q.sample_total = box_sampler(lo, hi);
  return q;
}

}  // namespace ils
