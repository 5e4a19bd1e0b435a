#pragma once

// The n-th Heisenberg group as a ready-made step-2 instance: the standard
// symplectic-type matrix, the k-dimensional splitting, the closed-form
// projection, and the dilation-commutation check.

#include "ils/carnot_step2.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace ils {

struct HeisenbergInstance {
  int n = 1;  // R^{2n+1}
  int k = 1;  // dimension of H: first k coordinates
  std::shared_ptr<const Step2Group> group;

  GroupPoint point(const Vec& coords) const { return group->unflatten(coords); }
};

/// Product written directly from the x_i x'_{n+i} - x'_i x_{n+i} display;
/// pins the sign convention of the matrix independently of the group law.
inline Vec heisenberg_closed_form_product(int n, const Vec& p, const Vec& q) {
  Vec out(2 * n + 1);
  out.head(2 * n) = p.head(2 * n) + q.head(2 * n);
  double t = p[2 * n] + q[2 * n];
  for (int i = 0; i < n; ++i) t += 0.5 * (p[i] * q[n + i] - q[i] * p[n + i]);
  out[2 * n] = t;
  return out;
}

inline HeisenbergInstance make_heisenberg(int n, int k = 1) {
  if (n < 1) throw std::invalid_argument("make_heisenberg: n must be positive");
  if (k < 1 || k > n) throw std::invalid_argument("make_heisenberg: need 1 <= k <= n");
  int m = 2 * n;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
  // <B p, q> = sum_i p_i q_{n+i} - p_{n+i} q_i, with <B p, q> = q . (B p).
  for (int i = 0; i < n; ++i) {
    B(n + i, i) = 1.0;
    B(i, n + i) = -1.0;
  }
  HeisenbergInstance inst;
  inst.n = n;
  inst.k = k;
  inst.group = std::make_shared<Step2Group>(m, 1, std::vector<Eigen::MatrixXd>{B});
  return inst;
}

/// Closed-form projection onto N = {x_1 = ... = x_k = 0}:
///   (0..0, x_{k+1}..x_{2n}, t - 1/2 sum_{i<=k} x_i x_{n+i}).
/// For k = 1 this agrees with Splitting::project_N.
inline GroupPoint project_N_heis(const HeisenbergInstance& inst,
                                 const GroupPoint& p) {
  GroupPoint out = p;
  double corr = 0.0;
  for (int i = 0; i < inst.k; ++i) {
    corr += p.p1[i] * p.p1[inst.n + i];
    out.p1[i] = 0.0;
  }
  out.p2[0] = p.p2[0] - 0.5 * corr;
  return out;
}

/// Max over random (lambda, p) of || pi_N(delta_lambda p) - delta_lambda(pi_N p) ||_inf.
inline double check_dilation_commute(const HeisenbergInstance& inst,
                                     int n_samples, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  std::uniform_real_distribution<double> lam(0.1, 4.0);
  double max_defect = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    Vec v(inst.group->dim());
    for (int j = 0; j < v.size(); ++j) v[j] = coord(rng);
    GroupPoint p = inst.group->unflatten(v);
    double lambda = lam(rng);
    Vec lhs = flatten(project_N_heis(inst, inst.group->dilate(lambda, p)));
    Vec rhs = flatten(inst.group->dilate(lambda, project_N_heis(inst, p)));
    max_defect = std::max(max_defect, (lhs - rhs).lpNorm<Eigen::Infinity>());
  }
  return max_defect;
}

}  // namespace ils
