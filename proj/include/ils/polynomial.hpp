#pragma once

// Scalar functions of the base coordinates used to define graph sections:
// sparse multivariate polynomials and regular grids with multilinear
// interpolation.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ils {

/// Sparse polynomial sum_k c_k * prod_i x_i^{e_{k,i}}.
struct Polynomial {
  struct Term {
    std::vector<int> exponents;
    double coeff = 0.0;
  };
  int n_vars = 0;
  std::vector<Term> terms;

  double operator()(const Eigen::VectorXd& x) const {
    if (x.size() != n_vars)
      throw std::invalid_argument("Polynomial: arity mismatch");
    double acc = 0.0;
    for (const auto& t : terms) {
      double prod = t.coeff;
      for (int i = 0; i < n_vars; ++i) {
        for (int e = 0; e < t.exponents[i]; ++e) prod *= x[i];
      }
      acc += prod;
    }
    return acc;
  }
};

inline Polynomial constant_polynomial(int n_vars, double c) {
  Polynomial p;
  p.n_vars = n_vars;
  if (c != 0.0) p.terms.push_back({std::vector<int>(n_vars, 0), c});
  return p;
}

/// Regular grid over a box with multilinear interpolation; queries outside
/// the box are clamped to the boundary.
class GridFunction {
 public:
  GridFunction(Eigen::VectorXd lo, Eigen::VectorXd hi, std::vector<int> shape,
               std::vector<double> values)
      : lo_(std::move(lo)), hi_(std::move(hi)), shape_(std::move(shape)),
        values_(std::move(values)) {
    if (lo_.size() != hi_.size() ||
        static_cast<std::size_t>(lo_.size()) != shape_.size())
      throw std::invalid_argument("GridFunction: dimension mismatch");
    std::size_t total = 1;
    for (int s : shape_) {
      if (s < 2) throw std::invalid_argument("GridFunction: need >= 2 nodes per axis");
      total *= static_cast<std::size_t>(s);
    }
    if (values_.size() != total)
      throw std::invalid_argument("GridFunction: value count mismatch");
  }

  double operator()(const Eigen::VectorXd& x) const {
    const int d = static_cast<int>(shape_.size());
    if (x.size() != d) throw std::invalid_argument("GridFunction: arity mismatch");
    std::vector<int> cell(d);
    std::vector<double> frac(d);
    for (int i = 0; i < d; ++i) {
      double u = (x[i] - lo_[i]) / (hi_[i] - lo_[i]) * (shape_[i] - 1);
      u = std::clamp(u, 0.0, static_cast<double>(shape_[i] - 1));
      cell[i] = std::min(static_cast<int>(u), shape_[i] - 2);
      frac[i] = u - cell[i];
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
      double w = 1.0;
      std::size_t idx = 0;
      for (int i = 0; i < d; ++i) {
        int bit = (corner >> i) & 1;
        w *= bit ? frac[i] : 1.0 - frac[i];
        idx = idx * static_cast<std::size_t>(shape_[i]) +
              static_cast<std::size_t>(cell[i] + bit);
      }
      acc += w * values_[idx];
    }
    return acc;
  }

 private:
  Eigen::VectorXd lo_, hi_;
  std::vector<int> shape_;
  std::vector<double> values_;
};

}  // namespace ils
