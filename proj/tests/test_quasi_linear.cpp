#include "ils/builtins.hpp"
#include "ils/quasi_linear.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace ils;

namespace {

std::shared_ptr<Quotient> sum_projection_quotient() {
  // pi(x1, x2) = x1 + x2, linear.
  auto q = std::make_shared<Quotient>();
  q->total_dim = 2;
  q->base_dim = 1;
  q->project = [](const Vec& x) { return Vec(Vec::Constant(1, x[0] + x[1])); };
  q->distance = [](const Vec& x, const Vec& y) { return (x - y).norm(); };
  q->fiber_distance = [](const Vec& x, const Vec& y) {
    return std::abs(x[0] + x[1] - y[0]) / std::sqrt(2.0);
  };
  q->sample_total = box_sampler(Vec::Constant(2, -2.0), Vec::Constant(2, 2.0));
  return q;
}

std::shared_ptr<Quotient> cube_quotient() {
  // pi(x) = x^3 on R, homogeneous of degree 3 but not additive.
  auto q = std::make_shared<Quotient>();
  q->total_dim = 1;
  q->base_dim = 1;
  q->project = [](const Vec& x) { return Vec(x.array().cube().matrix()); };
  q->distance = [](const Vec& x, const Vec& y) { return std::abs(x[0] - y[0]); };
  q->fiber_distance = [](const Vec& x, const Vec& y) {
    return std::abs(x[0] - std::cbrt(y[0]));
  };
  q->sample_total = box_sampler(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0));
  return q;
}

std::shared_ptr<Quotient> identity_quotient() {
  // Singleton fibers with a linear projection.
  auto q = std::make_shared<Quotient>();
  q->total_dim = 1;
  q->base_dim = 1;
  q->project = [](const Vec& x) { return x; };
  q->distance = [](const Vec& x, const Vec& y) { return std::abs(x[0] - y[0]); };
  q->fiber_distance = [](const Vec& x, const Vec& y) { return std::abs(x[0] - y[0]); };
  q->fiber_set_distance = [](const Vec& a, const Vec& b) { return std::abs(a[0] - b[0]); };
  q->sample_total = box_sampler(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0));
  return q;
}

}  // namespace

TEST_CASE("power_lambda domain") {
  CHECK(power_lambda(2.0, 1.5) == std::pow(2.0, 1.5));
  CHECK(power_lambda(-2.0, 3.0) == -8.0);
  CHECK(power_lambda(-2.0, 1.5, true) == -std::pow(2.0, 1.5));
  CHECK_THROWS_AS(power_lambda(-2.0, 1.5), std::domain_error);
  CHECK_THROWS_AS(power_lambda(-2.0, 2.0), std::domain_error);
}

TEST_CASE("check_quasi_linearity") {
  auto lin = make_linear_quasi(make_linear_quotient());
  CHECK(check_quasi_linearity(lin, 500, 41) <= 1e-12);

  auto sum = make_linear_quasi(sum_projection_quotient());
  CHECK(check_quasi_linearity(sum, 500, 41) <= 1e-12);

  QuasiLinearQuotient cube{cube_quotient(), 3.0, true, false};
  CHECK(quasi_linearity_defect_at(cube, 1.0, 1.0, Vec::Constant(1, 1.0),
                                  Vec::Constant(1, 1.0)) == 6.0);
  CHECK(check_quasi_linearity(cube, 500, 41) > 0.5);
}

TEST_CASE("check_quasi_linearity rejects undefined exponents") {
  QuasiLinearQuotient q{make_linear_quotient(), 1.5, false, false};
  CHECK_THROWS_AS(check_quasi_linearity(q, 200, 43), std::domain_error);
}

TEST_CASE("combine_sections") {
  auto lin = make_linear_quasi(make_linear_quotient());

  auto phi = make_graph_section(lin.base, [](double y) { return y; });
  auto psi = make_graph_section(lin.base, [](double) { return 0.0; });

  auto eta = combine_sections(lin, phi, psi, 1.0, 1.0);
  Vec y = Vec::Constant(1, 0.7);
  Vec img = eta.evaluate(y);
  CHECK(img[0] == 1.4);
  CHECK(img[1] == 0.7);
  CHECK((eta.quotient->project(img) - y).lpNorm<Eigen::Infinity>() <= 1e-15);

  auto same = combine_sections(lin, phi, psi, 1.0, 0.0);
  CHECK((same.evaluate(y).array() == phi.evaluate(y).array()).all());
  CHECK((same.quotient->project(phi.evaluate(y)) - y).lpNorm<Eigen::Infinity>() <=
        1e-15);

  auto psi1 = make_graph_section(lin.base, [](double) { return 1.0; });
  // phi(y) = (y,0), psi(y) = (y,1), alpha=2, beta=3 -> eta(y) = (5y, 3)
  auto eta2 = combine_sections(lin, psi, psi1, 2.0, 3.0);
  Vec img2 = eta2.evaluate(y);
  CHECK(std::abs(img2[0] - 3.5) <= 1e-14);
  CHECK(img2[1] == 3.0);
  CHECK((eta2.quotient->project(img2) - y).lpNorm<Eigen::Infinity>() <= 1e-15);

  CHECK_THROWS_AS(combine_sections(lin, phi, psi, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("scale_section preserves the constant and every ratio") {
  auto lin = make_linear_quasi(make_linear_quotient());
  auto phi = make_graph_section(lin.base, [](double y) { return 2.0 * y; });

  auto id_scale = scale_section(lin, phi, 1.0);
  CHECK(id_scale.max_ratio_deviation <= 1e-15);
  CHECK(id_scale.before.estimate == id_scale.after.estimate);

  auto neg = scale_section(lin, phi, -3.0);
  CHECK(neg.max_ratio_deviation <= 1e-12);
  CHECK(std::abs(neg.before.estimate - std::sqrt(5.0)) <= 1e-9);
  CHECK(std::abs(neg.after.estimate - neg.before.estimate) <= 1e-12);

  // Singleton-fiber linear quotient: ratios are identically 1 before and after.
  auto idq = make_linear_quasi(identity_quotient());
  Section ident;
  ident.quotient = idq.base;
  ident.evaluate = [](const Vec& y) { return y; };
  ident.sample_base = box_sampler(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0));
  auto sc = scale_section(idq, ident, 1.7);
  CHECK(sc.before.estimate == 1.0);
  CHECK(std::abs(sc.after.estimate - 1.0) <= 1e-12);
  CHECK(sc.max_ratio_deviation <= 1e-12);
}

TEST_CASE("fiber_scaling_check") {
  auto lin = make_linear_quasi(make_linear_quotient());
  auto r = fiber_scaling_check(lin, 2.0, Vec::Zero(1), Vec::Constant(1, 1.0));
  CHECK(r.lhs == 2.0);
  CHECK(r.rhs == 2.0);
  CHECK(r.defect == 0.0);

  auto r1 = fiber_scaling_check(lin, 1.0, Vec::Constant(1, -0.4), Vec::Constant(1, 0.9));
  CHECK(r1.defect == 0.0);

  auto r2 = fiber_scaling_check(lin, -2.5, Vec::Constant(1, 0.3), Vec::Constant(1, 0.3));
  CHECK(r2.lhs == 0.0);
  CHECK(r2.rhs == 0.0);

  CHECK_THROWS_AS(fiber_scaling_check(lin, 0.0, Vec::Zero(1), Vec::Zero(1)),
                  std::invalid_argument);
}

TEST_CASE("sobolev_constant_estimate") {
  auto lin = make_linear_quasi(make_linear_quotient());
  auto flat = make_graph_section(lin.base, [](double) { return 0.0; });
  auto r = sobolev_constant_estimate(lin, flat, flat, 500);
  CHECK(r.c_hat == 1.0);

  // Vertical fibers: distance from any point of one fiber to another fiber
  // is the coordinate gap, so c-hat stays 1 even for steep sections.
  auto steep = make_graph_section(lin.base, [](double y) { return 5.0 * y; });
  auto r2 = sobolev_constant_estimate(lin, steep, flat, 500);
  CHECK(r2.c_hat == 1.0);
  CHECK(r2.degenerate_pairs == 0);
}

TEST_CASE("leibniz_bound_check") {
  auto lin = make_linear_quasi(make_linear_quotient());
  auto flat = make_graph_section(lin.base, [](double) { return 0.0; });

  auto r = leibniz_bound_check(lin, flat, flat, Vec::Constant(1, 0.2), 1.0);
  CHECK(r.lhs == 1.0);
  CHECK(r.rhs == 1.0);
  CHECK(r.satisfied);
  CHECK(r.c_source == "supplied");

  // phi = psi with slope sqrt(5): the bound reduces to slope(2 phi) <= slope(phi).
  auto steep = make_graph_section(lin.base, [](double y) { return 2.0 * y; });
  auto r2 = leibniz_bound_check(lin, steep, steep, Vec::Constant(1, -0.5), 1.0);
  CHECK(std::abs(r2.rhs - std::sqrt(5.0)) <= 1e-9);
  CHECK(r2.satisfied);

  auto r3 = leibniz_bound_check(lin, steep, flat, Vec::Constant(1, 0.4), std::nullopt);
  CHECK(r3.c_source == "sobolev_estimate");
  CHECK(r3.lhs >= 0.0);
  CHECK(std::isfinite(r3.lhs));
  CHECK(std::isfinite(r3.rhs));
  CHECK(r3.satisfied);
}

TEST_CASE("sum_sections") {
  auto lin = make_linear_quasi(make_linear_quotient());
  auto up = make_graph_section(lin.base, [](double y) { return y; });
  auto down = make_graph_section(lin.base, [](double y) { return -y; });

  auto r = sum_sections(lin, up, down);
  CHECK(r.quasi_linearity_defect <= 1e-12);
  CHECK(r.report.estimate == 1.0);  // eta(y) = (2y, 0) against (1/2) pi

  auto same = sum_sections(lin, up, up);
  auto phi_rep = lipschitz_estimate(up, 500, 4);
  CHECK(std::abs(same.report.estimate - phi_rep.estimate) <= 1e-9);

  // The reciprocal quotient fails the weak-linearity condition and is rejected.
  QuasiLinearQuotient recip{make_reciprocal_quotient(), 1.0, true, false};
  Section rsec = make_reciprocal_section();
  CHECK_THROWS_WITH(sum_sections(recip, rsec, rsec),
                    Catch::Matchers::ContainsSubstring("quasi-linearity defect"));
}
