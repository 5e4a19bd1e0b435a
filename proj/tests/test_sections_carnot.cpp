#include "ils/sections_carnot.hpp"
#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace ils;

namespace {

GraphSection h1_graph(std::function<double(const Vec&)> f,
                      double half_width = 1.5) {
  auto inst = make_heisenberg(1);
  GraphSection gs;
  gs.split = std::make_shared<Splitting>(*inst.group);
  gs.f = std::move(f);
  gs.lo = Vec::Constant(2, -half_width);
  gs.hi = Vec::Constant(2, half_width);
  return gs;
}

GraphSection flat_h1() {
  return h1_graph([](const Vec&) { return 0.0; });
}

}  // namespace

TEST_CASE("graph sections land in the correct fiber") {
  auto gs = h1_graph([](const Vec& y) { return 0.3 * y[0] - y[1] * y[1]; });
  Section s = make_section(gs);
  auto check = verify_section(s, 200, 1e-12);
  CHECK(check.pass);
  CHECK(check.max_defect <= 1e-12);
}

TEST_CASE("dilate_section identity case") {
  auto gs = h1_graph([](const Vec& y) { return y[0]; });
  auto rep = dilate_section(gs, 1.0, 100, 5);
  CHECK(rep.section_check.pass);
  CHECK(rep.max_own_defect <= 1e-12);
  CHECK(rep.max_scaling_defect <= 1e-12);
  CHECK(std::abs(rep.lip_scaled - rep.lip_parent) <= 1e-12);
}

TEST_CASE("dilate_section scales every matched ratio") {
  auto flat = flat_h1();
  auto r3 = dilate_section(flat, 3.0, 200, 5);
  CHECK(r3.section_check.pass);
  CHECK(r3.max_scaling_defect <= 1e-9);
  CHECK(std::abs(r3.lip_scaled - 3.0 * r3.lip_parent) <= 1e-9);

  auto gs = h1_graph([](const Vec& y) { return y[0]; });
  auto r2 = dilate_section(gs, 2.0, 200, 5);
  // ratio_own re-solves the fiber distance on the dilated problem; the solver
  // floor near small denominators limits agreement to ~1e-7.
  CHECK(r2.max_own_defect <= 1e-6);
  CHECK(r2.max_scaling_defect <= 1e-9);
  CHECK(std::abs(r2.lip_scaled - 2.0 * r2.lip_parent) <= 1e-9);
}

TEST_CASE("compatibility displays vanish at the identity") {
  auto inst = make_heisenberg(1);
  Vec zero = Vec::Zero(2);
  CHECK(compat_a1(*inst.group, zero, zero).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(compat_a2(*inst.group, zero, zero).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("compatibility defect matches the symbolic oracle") {
  auto h1 = make_heisenberg(1);
  auto g2 = oracle::random_step2(4, 2, 91);
  Rng rng(92);
  std::uniform_real_distribution<double> u(-2.0, 2.0);

  for (int i = 0; i < 500; ++i) {
    // Heisenberg layer
    Vec p1(2), q1(2);
    for (int j = 0; j < 2; ++j) {
      p1[j] = u(rng);
      q1[j] = u(rng);
    }
    auto M = oracle::compat_defect_form(h1.group->b(0));
    double numeric = (compat_a1(*h1.group, p1, q1) - compat_a2(*h1.group, p1, q1))[0];
    CHECK(std::abs(numeric - oracle::eval_form(M, p1, q1)) <= 1e-12);

    // generic step-2, all layers
    Vec p4(4), q4(4);
    for (int j = 0; j < 4; ++j) {
      p4[j] = u(rng);
      q4[j] = u(rng);
    }
    Vec diff = compat_a1(g2, p4, q4) - compat_a2(g2, p4, q4);
    for (int l = 0; l < 2; ++l) {
      auto Ml = oracle::compat_defect_form(g2.b(l));
      CHECK(std::abs(diff[l] - oracle::eval_form(Ml, p4, q4)) <= 1e-12);
    }
  }

  // Edge case p1 = q1 = 0 in the H coordinate: both displays reduce to the
  // same bilinear term and the defect vanishes.
  Vec p(2), q(2);
  p << 0.0, 1.3;
  q << 0.0, -0.8;
  CHECK((compat_a1(*h1.group, p, q) - compat_a2(*h1.group, p, q))
            .lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("homomorphism residual matches the hand expansion") {
  auto h1 = make_heisenberg(1);
  Splitting split_h(*h1.group);
  auto g2 = oracle::random_step2(4, 2, 93);
  Splitting split_g(g2);
  Rng rng(94);

  auto check_group = [&](const Splitting& split, int n_layers) {
    const auto& g = split.group();
    auto p = oracle::random_point(g, rng);
    auto q = oracle::random_point(g, rng);
    Vec res = flatten(split.project_N(g.multiply(p, q))) -
              flatten(g.multiply(split.project_N(p), split.project_N(q)));
    CHECK(res.head(g.m()).lpNorm<Eigen::Infinity>() <= 1e-14);
    for (int l = 0; l < n_layers; ++l) {
      double oracle_val = oracle::residual_closed_form(g.b(l), p.p1, q.p1);
      CHECK(std::abs(res[g.m() + l] - oracle_val) <= 1e-12);
    }
  };
  for (int i = 0; i < 200; ++i) {
    check_group(split_h, 1);
    check_group(split_g, 2);
  }
}

TEST_CASE("sum of two flat sections") {
  auto flat = flat_h1();
  auto r = sum_sections_step2(flat, flat, 300);
  CHECK(r.compatible);
  CHECK(r.max_compat_defect <= 1e-14);
  CHECK(r.max_homomorphism_residual <= 1e-14);
  CHECK(r.section_valid);
  REQUIRE(r.report.has_value());
  CHECK(std::isfinite(r.report->estimate));
  CHECK(r.report->estimate >= 1.0 - 1e-12);
}

TEST_CASE("generic sections are rejected with a witness") {
  auto phi = h1_graph([](const Vec& y) { return y[0] + 0.5; });
  auto psi = h1_graph([](const Vec& y) { return y[1] - 1.0; });
  auto r = sum_sections_step2(phi, psi, 300);
  CHECK_FALSE(r.compatible);
  CHECK(r.max_compat_defect > 1e-6);
  CHECK(r.witness_a.size() == 3);
  CHECK(r.defect_per_layer.size() == 1);
  // The witness reproduces its reported defect.
  auto row = compatibility_defect(phi, psi, r.witness_a, r.witness_b);
  CHECK(row.max_abs_defect == r.max_compat_defect);
}

TEST_CASE("heisenberg classification branches") {
  auto inst = make_heisenberg(1);

  // phi_1 == 0 branch: flat section. The verbatim displays still leave a
  // q_1 q_2 term, so the defect does not vanish and the claim is refuted
  // with a counterexample pair.
  auto flat = flat_h1();
  auto generic = h1_graph([](const Vec& y) { return 0.7 * y[0] + y[1]; });
  auto c1 = heisenberg_compatibility_classify(inst, flat, generic, 300);
  CHECK(c1.branch == "phi1_zero");
  CHECK(c1.max_phi1 == 0.0);
  CHECK_FALSE(c1.branch_claim_confirmed);
  CHECK(c1.max_defect > 1e-6);
  auto row = compatibility_defect(flat, generic, c1.witness_a, c1.witness_b);
  CHECK(row.max_abs_defect == c1.max_defect);

  // psi_{n+1} == 0 branch: restrict psi's base domain to x_2 = 0.
  auto psi_zero = h1_graph([](const Vec& y) { return y[1]; });
  psi_zero.lo[0] = 0.0;
  psi_zero.hi[0] = 0.0;
  auto c2 = heisenberg_compatibility_classify(inst, generic, psi_zero, 300);
  CHECK(c2.branch == "psi_np1_zero");
  CHECK_FALSE(c2.branch_claim_confirmed);

  // Both branches at once: the defect vanishes identically.
  auto c3 = heisenberg_compatibility_classify(inst, flat, psi_zero, 300);
  CHECK(c3.branch == "both");
  CHECK(c3.max_defect <= 1e-12);
  CHECK(c3.branch_claim_confirmed);

  // Neither branch.
  auto c4 = heisenberg_compatibility_classify(inst, generic, generic, 300);
  CHECK(c4.branch == "neither");
  CHECK(c4.branch_claim_confirmed);

  CHECK_THROWS_AS(
      heisenberg_compatibility_classify(make_heisenberg(2, 2), flat, flat, 10),
      std::invalid_argument);
}
