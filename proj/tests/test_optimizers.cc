#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "osn/error.hpp"
#include "osn/models.hpp"
#include "osn/optimizers.hpp"
#include "osn/rng.hpp"
#include "osn/symmat.hpp"
#include "osn/vec.hpp"
#include "osn/weighted_average.hpp"

using namespace osn;

namespace {

Sample sample_of(const Vec& x, double y = 0.0) { return Sample{{x.data(), x.size()}, y}; }

SymMat scalar_mat(double v) {
  SymMat m(1);
  m.at(0, 0) = v;
  return m;
}

// Records every parameter vector handed to the oracles, then forwards.
class SpyModel : public Model {
 public:
  explicit SpyModel(const Model& inner) : inner_(inner) {}

  std::string name() const override { return inner_.name(); }
  int param_dim() const override { return inner_.param_dim(); }
  int feature_dim() const override { return inner_.feature_dim(); }

  bool gradient(const Sample& s, const Vec& h, Vec& out) const override {
    gradient_points.push_back(h);
    return inner_.gradient(s, h, out);
  }
  bool hessian_vec(const Sample& s, const Vec& h, const Vec& z, Vec& out) const override {
    hessian_points.push_back(h);
    return inner_.hessian_vec(s, h, z, out);
  }

  mutable std::vector<Vec> gradient_points;
  mutable std::vector<Vec> hessian_points;

 private:
  const Model& inner_;
};

}  // namespace

TEST_CASE("rank-one inverse update: identity plus e1 e1^T") {
  SymMat s = SymMat::identity(3);
  sherman_morrison_update(s, Vec{1.0, 0.0, 0.0});
  CHECK(s.at(0, 0) == 0.5);
  CHECK(s.at(1, 1) == 1.0);
  CHECK(s.at(2, 2) == 1.0);
  CHECK(s.at(1, 0) == 0.0);
}

TEST_CASE("rank-one inverse update: zero vector is a bitwise no-op") {
  SymMat s = SymMat::identity(4);
  s.at(2, 1) = 0.25;
  const SymMat before = s;
  sherman_morrison_update(s, Vec{0.0, 0.0, 0.0, 0.0});
  CHECK(s.packed() == before.packed());
}

TEST_CASE("rank-one inverse update rejects a collapsed denominator") {
  SymMat s = scalar_mat(-1.0);
  CHECK_THROWS_AS(sherman_morrison_update(s, Vec{1.0}), Error);
}

TEST_CASE("rank-one trajectory tracks direct inversion") {
  const int d = 5;
  RngStream rng(17);
  SymMat s_inv = SymMat::identity(d);
  SymMat s = SymMat::identity(d);  // the matrix being inverted
  for (int k = 0; k < 200; ++k) {
    Vec phi(d);
    for (double& v : phi) v = rng.normal();
    sherman_morrison_update(s_inv, phi);
    add_sym_rank1(s, 1.0, phi);

    const SymMat direct = invert(s);
    SymMat err = direct;
    add_scaled(err, -1.0, s_inv);
    CHECK(frobenius_norm(err) <= 1e-8 * frobenius_norm(direct));
  }
}

TEST_CASE("sna accumulates the inverse of I plus the factor sum") {
  const int d = 5;
  const LinearModel model(d);
  RngStream data(71), noise(72);
  RiccatiState st = make_riccati_state(Vec(d, 0.0), RiccatiOptions::defaults());
  SymMat s = SymMat::identity(d);
  for (int k = 0; k < 50; ++k) {
    Vec x(d);
    for (double& v : x) v = data.normal();
    const double y = data.normal();
    // phi for this model is the regressor at any anchor, so the running
    // matrix is reconstructible independently of the trajectory.
    sna_step(st, model, sample_of(x, y), noise);
    add_sym_rank1(s, 1.0, x);
  }
  const SymMat direct = invert(s);
  SymMat err = direct;
  add_scaled(err, -1.0, st.s_inv);
  CHECK(frobenius_norm(err) <= 1e-8 * frobenius_norm(direct));
  CHECK(st.n == 50);
}

TEST_CASE("sna steps with the post-update inverse") {
  // d=1 linear sample x=1, y=0 from theta=1: the factor update halves the
  // inverse before the move, so theta lands on 0.5, not 0.
  const LinearModel model(1);
  RngStream noise(1);
  RiccatiState st = make_riccati_state(Vec{1.0}, RiccatiOptions::defaults());
  sna_step(st, model, sample_of(Vec{1.0}, 0.0), noise);
  CHECK(st.s_inv.at(0, 0) == 0.5);
  CHECK(st.theta[0] == 0.5);
}

TEST_CASE("sna leaves theta alone on a zero gradient") {
  const LinearModel model(2);
  RngStream noise(2);
  RiccatiState st = make_riccati_state(Vec{0.0, 0.0}, RiccatiOptions::defaults());
  // y = x . theta, so the residual vanishes; the factor still updates.
  sna_step(st, model, sample_of(Vec{1.0, 2.0}, 0.0), noise);
  CHECK(st.theta[0] == 0.0);
  CHECK(st.theta[1] == 0.0);
  CHECK(st.s_inv.at(0, 0) != 1.0);
}

TEST_CASE("usna solves a scalar quadratic in one unit step") {
  const FrozenQuadraticModel model(scalar_mat(1.0), Vec{5.0});
  NewtonOptions opt = NewtonOptions::usna_defaults();  // nu_1 = 1
  NewtonState st = make_newton_state(Vec{2.0}, opt);
  RngStream probes(3);
  const Vec empty;
  usna_step(st, opt, model, sample_of(empty), probes);
  CHECK(st.theta[0] == 5.0);
  CHECK(st.n == 1);
}

TEST_CASE("usna keeps estimating curvature through a zero gradient") {
  const FrozenQuadraticModel model(scalar_mat(2.0), Vec{5.0});
  NewtonOptions opt = NewtonOptions::usna_defaults();
  opt.hess.beta = PowerSchedule::constant(3.0);  // admit ||q|| ||z|| = 2
  NewtonState st = make_newton_state(Vec{5.0}, opt);
  RngStream probes(4);
  const Vec empty;
  usna_step(st, opt, model, sample_of(empty), probes);
  CHECK(st.theta[0] == 5.0);
  CHECK(st.inv.estimate.at(0, 0) != 1.0);
  CHECK(st.inv.n == 1);
}

TEST_CASE("usna with a frozen identity estimate replays sgd bitwise") {
  const int d = 3;
  const LinearModel model(d);
  RngStream data(91);
  std::vector<Vec> xs(400, Vec(d));
  Vec ys(400);
  for (int k = 0; k < 400; ++k) {
    for (double& v : xs[k]) v = data.normal();
    ys[k] = data.normal();
  }

  NewtonOptions nopt = NewtonOptions::usna_defaults();
  nopt.nu = PowerSchedule::decay(0.5, 2.0 / 3.0);
  nopt.hess.gamma = PowerSchedule::constant(0.0);  // estimator stays at I exactly

  FirstOrderOptions fopt = FirstOrderOptions::sgd_defaults();
  fopt.eta = PowerSchedule::decay(0.5, 2.0 / 3.0);

  NewtonState newton = make_newton_state(Vec(d, 0.25), nopt);
  FirstOrderState first = make_first_order_state(Vec(d, 0.25));
  RngStream probes(5);
  for (int k = 0; k < 400; ++k) {
    usna_step(newton, nopt, model, sample_of(xs[k], ys[k]), probes);
    sgd_step(first, fopt, model, sample_of(xs[k], ys[k]));
    REQUIRE(newton.theta == first.theta);
  }
}

TEST_CASE("uwasna's first averaged iterate is the first raw iterate") {
  const FrozenQuadraticModel model(scalar_mat(1.0), Vec{0.0});
  NewtonOptions opt = NewtonOptions::uwasna_defaults();  // tau' = 2
  NewtonState st = make_newton_state(Vec{3.0}, opt);
  RngStream probes(6);
  const Vec empty;
  uwasna_step(st, opt, model, sample_of(empty), probes);
  CHECK(st.theta_avg == st.theta);
  CHECK(st.theta[0] != 3.0);
}

TEST_CASE("uwasna with zero exponents keeps arithmetic means") {
  const int d = 2;
  const LogisticModel model(d);
  NewtonOptions opt = NewtonOptions::uwasna_defaults();
  opt.tau_prime = 0.0;
  opt.hess.tau = 0.0;
  NewtonState st = make_newton_state(Vec{0.5, -0.5}, opt);

  RngStream data(93), probes(7);
  Vec theta_sum = st.theta;       // iterate 0 carries weight 1 when tau' = 0
  SymMat mat_sum = st.inv.estimate;
  int count = 1;
  for (int k = 0; k < 50; ++k) {
    Vec x{data.normal()};
    const double y = data.uniform01() < 0.5 ? 0.0 : 1.0;
    uwasna_step(st, opt, model, sample_of(x, y), probes);
    theta_sum = add(theta_sum, st.theta);
    add_scaled(mat_sum, 1.0, st.inv.estimate);
    ++count;
  }
  for (int i = 0; i < d; ++i)
    CHECK(st.theta_avg[i] == doctest::Approx(theta_sum[i] / count).epsilon(1e-12));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j)
      CHECK(st.inv.averaged.at(i, j) ==
            doctest::Approx(mat_sum.at(i, j) / count).epsilon(1e-12));
}

TEST_CASE("uwasna evaluates every oracle at its pre-update anchor") {
  const LogisticModel inner(3);
  const SpyModel model(inner);
  NewtonOptions opt = NewtonOptions::uwasna_defaults();
  NewtonState st = make_newton_state(Vec{0.3, -0.2, 0.1}, opt);
  RngStream probes(8), data(94);

  Vec x1{data.normal(), data.normal()};
  uwasna_step(st, opt, model, sample_of(x1, 1.0), probes);

  const Vec theta_pre = st.theta;
  const Vec avg_pre = st.theta_avg;
  const SymMat mat_pre = st.inv.averaged;
  double ws_pre = st.theta_weight_sum;

  Vec x2{data.normal(), data.normal()};
  const Sample s2 = sample_of(x2, 0.0);
  uwasna_step(st, opt, model, s2, probes);

  // The Hessian action anchors at the averaged iterate as it stood before
  // the step; the gradient at the raw iterate.
  CHECK(model.hessian_points.back() == avg_pre);
  CHECK(model.gradient_points.back() == theta_pre);

  // The move is preconditioned by the pre-update averaged matrix.
  Vec g;
  REQUIRE(inner.gradient(s2, theta_pre, g));
  Vec expected = theta_pre;
  axpy(-opt.nu.at(2), mat_vec(mat_pre, g), expected);
  CHECK(st.theta == expected);

  // The averaged iterate advances with the post-move raw iterate.
  Vec avg_expected = avg_pre;
  weighted_average_step(avg_expected, expected, 2, opt.tau_prime, ws_pre);
  CHECK(st.theta_avg == avg_expected);
}

TEST_CASE("uwasna averaging beats the raw iterate on a noisy scalar quadratic") {
  // Seed-pinned Monte-Carlo comparison: the slow raw step keeps fluctuating
  // while the averaged iterate settles.
  int closer = 0;
  for (std::uint64_t seed = 201; seed <= 210; ++seed) {
    const FrozenQuadraticModel model(scalar_mat(1.0), Vec{0.0});
    NewtonOptions opt = NewtonOptions::uwasna_defaults();
    opt.nu = PowerSchedule::decay(1.0, 0.55);
    NewtonState st = make_newton_state(Vec{2.0}, opt);
    RngStream probes(derive_seed(seed, 1)), noise(derive_seed(seed, 2));
    for (int k = 0; k < 1000; ++k) {
      Vec eps{noise.normal()};
      uwasna_step(st, opt, model, sample_of(eps), probes);
    }
    if (std::abs(st.theta_avg[0]) <= std::abs(st.theta[0])) ++closer;
  }
  CHECK(closer >= 9);
}

TEST_CASE("wasna's first step uses the rescaled inverse and seeds the average") {
  const LinearModel model(1);
  RiccatiOptions opt = RiccatiOptions::defaults();
  RiccatiState st = make_riccati_state(Vec{1.0}, opt);
  RngStream noise(9);
  wasna_step(st, opt, model, sample_of(Vec{1.0}, 0.0), noise);
  // Factor x=1 halves the inverse; gradient 1; step = step(2) * 1 * 0.5.
  const double expected = 1.0 - opt.step.at(2) * 1.0 * 0.5;
  CHECK(st.theta[0] == doctest::Approx(expected).epsilon(1e-15));
  CHECK(st.theta_avg == st.theta);  // tau' = 2: first pushed value replaces
}

TEST_CASE("wasna with zero tau_prime keeps the arithmetic mean of iterates") {
  const LinearModel model(2);
  RiccatiOptions opt = RiccatiOptions::defaults();
  opt.tau_prime = 0.0;
  RiccatiState st = make_riccati_state(Vec{1.0, -1.0}, opt);
  RngStream data(95), noise(10);
  Vec sum = st.theta;
  int count = 1;
  for (int k = 0; k < 40; ++k) {
    Vec x{data.normal(), data.normal()};
    wasna_step(st, opt, model, sample_of(x, dot(x, Vec{0.5, 0.5})), noise);
    sum = add(sum, st.theta);
    ++count;
  }
  for (int i = 0; i < 2; ++i)
    CHECK(st.theta_avg[i] == doctest::Approx(sum[i] / count).epsilon(1e-12));
}

TEST_CASE("wasna anchors the factor at the averaged iterate") {
  const int d = 2;
  const LogisticModel model(d);
  RiccatiOptions opt = RiccatiOptions::defaults();
  RiccatiState st = make_riccati_state(Vec{0.4, -0.3}, opt);
  RngStream data(96), noise(11);

  Vec x1{data.normal()};
  wasna_step(st, opt, model, sample_of(x1, 1.0), noise);

  const Vec theta_pre = st.theta;
  const Vec avg_pre = st.theta_avg;
  SymMat s_inv_pre = st.s_inv;

  Vec x2{data.normal()};
  const Sample s2 = sample_of(x2, 0.0);
  RngStream noise_replay = noise;
  wasna_step(st, opt, model, s2, noise);

  // Replay by hand: factor at the averaged iterate, gradient at the raw one,
  // step rescaled by the sample count.
  Vec phi;
  REQUIRE(model.riccati_factor(s2, avg_pre, 2, noise_replay, phi));
  sherman_morrison_update(s_inv_pre, phi);
  Vec g;
  REQUIRE(model.gradient(s2, theta_pre, g));
  Vec expected = theta_pre;
  axpy(-opt.step.at(3) * 2.0, mat_vec(s_inv_pre, g), expected);
  CHECK(st.theta == expected);
  CHECK(st.s_inv.packed() == s_inv_pre.packed());
}

TEST_CASE("wasna averaging beats the raw iterate on a logistic toy") {
  int closer = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LogisticModel model(2);
    const Vec star{0.5, -1.0};
    RiccatiOptions opt = RiccatiOptions::defaults();
    RiccatiState st = make_riccati_state(Vec{2.0, 2.0}, opt);
    RngStream data(derive_seed(seed, 3)), noise(derive_seed(seed, 4));
    for (int k = 0; k < 10000; ++k) {
      Vec x{data.normal()};
      const double y = data.uniform01() < sigmoid(star[0] + star[1] * x[0]) ? 1.0 : 0.0;
      wasna_step(st, opt, model, sample_of(x, y), noise);
    }
    const double raw = norm2_squared(sub(st.theta, star));
    const double avg = norm2_squared(sub(st.theta_avg, star));
    if (avg < raw) ++closer;
  }
  CHECK(closer >= 8);
}

TEST_CASE("sgd converges on a noisy scalar quadratic with a 1/n step") {
  const FrozenQuadraticModel model(scalar_mat(1.0), Vec{3.0});
  FirstOrderOptions opt = FirstOrderOptions::sgd_defaults();
  opt.eta = PowerSchedule::decay(1.0, 1.0);
  FirstOrderState st = make_first_order_state(Vec{0.0});
  RngStream noise(13);
  for (int k = 0; k < 10000; ++k) {
    Vec eps{noise.normal()};
    sgd_step(st, opt, model, sample_of(eps));
  }
  CHECK(std::abs(st.theta[0] - 3.0) <= 0.05);
}

TEST_CASE("asgd's average is the exact mean of the raw iterates") {
  const LinearModel model(2);
  FirstOrderOptions opt = FirstOrderOptions::sgd_defaults();
  FirstOrderState st = make_first_order_state(Vec{1.0, 1.0});
  RngStream data(97);
  Vec sum(2, 0.0);
  const int n = 100;
  for (int k = 0; k < n; ++k) {
    Vec x{data.normal(), data.normal()};
    asgd_step(st, opt, model, sample_of(x, data.normal()));
    sum = add(sum, st.theta);
  }
  // Iterate 0 is excluded: the first average equals the first iterate.
  for (int i = 0; i < 2; ++i)
    CHECK(st.theta_avg[i] == doctest::Approx(sum[i] / n).epsilon(1e-12));
}

TEST_CASE("asgd's first average equals the first iterate") {
  const LinearModel model(1);
  FirstOrderOptions opt = FirstOrderOptions::sgd_defaults();
  FirstOrderState st = make_first_order_state(Vec{5.0});
  asgd_step(st, opt, model, sample_of(Vec{1.0}, 0.0));
  CHECK(st.theta_avg == st.theta);
}

TEST_CASE("adagrad's first move is eta in each active coordinate") {
  const LinearModel model(2);
  const FirstOrderOptions opt = FirstOrderOptions::adagrad_defaults();
  FirstOrderState st = make_first_order_state(Vec{0.0, 0.0});
  // Gradient -(y - 0) x = (-1, -2): each coordinate moves by +eta g/|g|.
  adagrad_step(st, opt, model, sample_of(Vec{1.0, 2.0}, 1.0));
  CHECK(st.theta[0] == doctest::Approx(0.1).epsilon(1e-7));
  CHECK(st.theta[1] == doctest::Approx(0.1).epsilon(1e-7));
  CHECK(st.grad_sq[0] == 1.0);
  CHECK(st.grad_sq[1] == 4.0);

  // A second sample accumulates squares exactly.
  adagrad_step(st, opt, model, sample_of(Vec{1.0, 0.0}, st.theta[0]));
  CHECK(st.grad_sq[1] == 4.0);
}

TEST_CASE("adagrad ignores a zero gradient entirely") {
  const LinearModel model(2);
  const FirstOrderOptions opt = FirstOrderOptions::adagrad_defaults();
  FirstOrderState st = make_first_order_state(Vec{0.0, 0.0});
  adagrad_step(st, opt, model, sample_of(Vec{1.0, 2.0}, 0.0));
  CHECK(st.theta[0] == 0.0);
  CHECK(st.theta[1] == 0.0);
  CHECK(st.grad_sq[0] == 0.0);
}

TEST_CASE("location estimators are translation equivariant") {
  const int d = 3;
  const Vec shift{10.0, -5.0, 3.0};
  const MedianModel median(d);
  const PMeansModel pmeans(d, 1.5);

  for (const Model* model : {static_cast<const Model*>(&median),
                             static_cast<const Model*>(&pmeans)}) {
    RngStream data(98);
    std::vector<Vec> xs(500, Vec(d));
    for (auto& x : xs)
      for (double& v : x) v = 1.5 * data.normal();

    NewtonOptions opt = NewtonOptions::usna_defaults();
    NewtonState base = make_newton_state(Vec(d, 0.5), opt);
    NewtonState moved = make_newton_state(add(Vec(d, 0.5), shift), opt);
    RngStream probes_a(14), probes_b(14);
    for (const auto& x : xs) {
      usna_step(base, opt, *model, sample_of(x), probes_a);
      usna_step(moved, opt, *model, sample_of(add(x, shift)), probes_b);
    }
    for (int i = 0; i < d; ++i)
      CHECK(moved.theta[i] - shift[i] == doctest::Approx(base.theta[i]).epsilon(1e-9));
  }
}
