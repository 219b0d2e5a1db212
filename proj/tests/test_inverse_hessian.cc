#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>

#include "osn/error.hpp"
#include "osn/inverse_hessian.hpp"
#include "osn/probe.hpp"
#include "osn/rng.hpp"
#include "osn/symmat.hpp"

using namespace osn;

namespace {

InverseHessianSchedules flat(double gamma_c, double beta_c, double beta_prime_c) {
  InverseHessianSchedules s;
  s.gamma = PowerSchedule::constant(gamma_c);
  s.beta = PowerSchedule::constant(beta_c);
  s.beta_prime = PowerSchedule::constant(beta_prime_c);
  s.tau = 2.0;
  return s;
}

}  // namespace

TEST_CASE("frobenius projection rescales only outside the ball") {
  SymMat inside(2);
  inside.at(0, 0) = 0.6;
  inside.at(1, 1) = 0.8;  // norm 1
  SymMat copy = inside;
  CHECK_FALSE(project_frobenius_ball(inside, 2.0));
  CHECK(inside.packed() == copy.packed());

  SymMat outside(2);
  outside.at(0, 0) = 3.0;
  outside.at(1, 1) = 4.0;  // norm 5
  CHECK(project_frobenius_ball(outside, 1.0));
  CHECK(outside.at(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(outside.at(1, 1) == doctest::Approx(0.8).epsilon(1e-15));

  SymMat zero(3);
  CHECK_FALSE(project_frobenius_ball(zero, 1e-30));
  CHECK(frobenius_norm(zero) == 0.0);
}

TEST_CASE("scalar update moves by gamma (P q + q P - 2)") {
  auto st = make_inverse_hessian_state(1, flat(0.1, 100.0, 1e9));
  st.estimate.at(0, 0) = 0.0;  // start the recursion at zero
  update_inverse_hessian(st, Vec{1.0}, Vec{2.0}, flat(0.1, 100.0, 1e9));
  CHECK(st.estimate.at(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(st.n == 1);
  CHECK(st.truncation_hits == 0);
  CHECK(st.projection_hits == 0);
}

TEST_CASE("the true inverse is a fixed point of the scalar update") {
  const double h = 4.0;
  const auto sched = flat(0.25, 100.0, 1e9);
  auto st = make_inverse_hessian_state(1, sched);
  st.estimate.at(0, 0) = 1.0 / h;
  for (int k = 0; k < 10; ++k) update_inverse_hessian(st, Vec{1.0}, Vec{h}, sched);
  CHECK(st.estimate.at(0, 0) == 1.0 / h);  // bitwise: the increment is exactly zero
}

TEST_CASE("an oversized Hessian action is truncated, not applied") {
  const auto sched = InverseHessianSchedules::defaults();  // beta_1 = 1/2
  auto st = make_inverse_hessian_state(1, sched);
  const double before = st.estimate.at(0, 0);
  update_inverse_hessian(st, Vec{1.0}, Vec{2.0}, sched);  // ||q|| ||z|| = 2 > 1/2
  CHECK(st.estimate.at(0, 0) == before);
  CHECK(st.truncation_hits == 1);
  // The averaged estimate still advances past the skipped update.
  CHECK(st.n == 1);
}

TEST_CASE("projection lands exactly on the ball boundary") {
  const auto sched = flat(1.0, 1e9, 1.5);
  auto st = make_inverse_hessian_state(2, sched);
  update_inverse_hessian(st, Vec{3.0, 0.0}, Vec{9.0, 0.0}, sched);
  CHECK(st.projection_hits == 1);
  CHECK(frobenius_norm(st.estimate) == doctest::Approx(1.5).epsilon(1e-12));
  // A truncated update leaves the estimate inside the ball, so the projection
  // cannot re-fire.
  auto tight = sched;
  tight.beta = PowerSchedule::constant(0.5);
  update_inverse_hessian(st, Vec{3.0, 0.0}, Vec{9.0, 0.0}, tight);
  CHECK(st.truncation_hits == 1);
  CHECK(st.projection_hits == 1);
}

TEST_CASE("the callable overload matches the explicit-action form bitwise") {
  const auto sched = InverseHessianSchedules::defaults();
  SymMat h(3);
  h.at(0, 0) = 0.9;
  h.at(1, 1) = 0.5;
  h.at(2, 2) = 0.7;
  h.at(1, 0) = 0.1;

  auto a = make_inverse_hessian_state(3, sched);
  auto b = make_inverse_hessian_state(3, sched);
  RngStream rng_a(3), rng_b(3);
  Vec z;
  for (int k = 0; k < 50; ++k) {
    draw_probe(ProbeKind::kRademacher, 3, rng_a, z);
    update_inverse_hessian(a, z, mat_vec(h, z), sched);
    draw_probe(ProbeKind::kRademacher, 3, rng_b, z);
    update_inverse_hessian(b, z, [&](const Vec& v) { return mat_vec(h, v); }, sched);
  }
  CHECK(a.estimate.packed() == b.estimate.packed());
  CHECK(a.averaged.packed() == b.averaged.packed());
}

TEST_CASE("a non-finite Hessian action aborts with the step index") {
  const auto sched = InverseHessianSchedules::defaults();
  auto st = make_inverse_hessian_state(2, sched);
  update_inverse_hessian(st, Vec{1.0, 1.0}, Vec{0.1, 0.1}, sched);
  try {
    update_inverse_hessian(st, Vec{1.0, 1.0},
                           Vec{std::numeric_limits<double>::quiet_NaN(), 0.0}, sched);
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("step 2") != std::string::npos);
  }
}

TEST_CASE("scalar recursion converges to the true inverse") {
  const double h = 4.0;
  auto sched = InverseHessianSchedules::defaults();
  auto st = make_inverse_hessian_state(1, sched);
  for (std::int64_t k = 0; k < 10000; ++k) update_inverse_hessian(st, Vec{1.0}, Vec{h}, sched);
  CHECK(std::abs(st.estimate.at(0, 0) - 0.25) < 1e-3);
  CHECK(std::abs(st.averaged.at(0, 0) - 0.25) < 1e-2);
}

TEST_CASE("probed estimates approach the inverse and stay near the PSD cone") {
  const int d = 5;
  SymMat h(d);
  for (int i = 0; i < d; ++i) h.at(i, i) = 0.5 + 0.3 * i;  // eigenvalues 0.5 .. 1.7
  h.at(1, 0) = 0.2;
  h.at(3, 2) = -0.1;
  const SymMat h_inv = invert(h);

  const auto sched = InverseHessianSchedules::defaults();
  auto st = make_inverse_hessian_state(d, sched);
  const double start_err = [&] {
    SymMat e = SymMat::identity(d);
    add_scaled(e, -1.0, h_inv);
    return frobenius_norm(e);
  }();

  RngStream rng(21);
  Vec z;
  for (std::int64_t k = 0; k < 2000; ++k) {
    draw_probe(ProbeKind::kRademacher, d, rng, z);
    update_inverse_hessian(st, z, mat_vec(h, z), sched);
  }

  SymMat err = st.averaged;
  add_scaled(err, -1.0, h_inv);
  CHECK(frobenius_norm(err) < 0.5 * start_err);
  CHECK(min_eigenvalue(st.estimate) >= -1e-10);
  CHECK(min_eigenvalue(st.averaged) >= -1e-10);

  // Packed storage is symmetric by construction; both views agree.
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) CHECK(st.estimate.at(i, j) == st.estimate.at(j, i));
}

TEST_CASE("estimator counters and weights start clean") {
  const auto sched = InverseHessianSchedules::defaults();
  const auto st = make_inverse_hessian_state(3, sched);
  CHECK(st.n == 0);
  CHECK(st.truncation_hits == 0);
  CHECK(st.projection_hits == 0);
  CHECK(st.weight_sum == 0.0);  // tau = 2 gives iterate 0 zero weight
  CHECK(frobenius_norm(st.estimate) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  CHECK(st.averaged.packed() == st.estimate.packed());
}
