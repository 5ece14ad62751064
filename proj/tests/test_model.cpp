#include <doctest.h>

#include "mlsmooth/model.hpp"

#include <cmath>
#include <numbers>

using namespace mlsmooth;

namespace {

const double log2pi = std::log(2.0 * std::numbers::pi);

Vector v1(double a) { return Vector::Constant(1, a); }

// Joint log-density of (x_next, x_prev) stacked, for mixed second derivatives.
double stacked_transition(const StateSpaceModel& m, int k, const Vector& z) {
  const Eigen::Index p = m.state_dim();
  return m.transition_logpdf(k, z.head(p), z.tail(p));
}

double rel(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

void check_derivatives_at(const StateSpaceModel& m, int k, const Vector& xn, const Vector& xp, const Vector& y) {
  const Eigen::Index p = m.state_dim();
  const auto out = [&](const Vector& x) { return m.transition_logpdf(k, x, xp); };
  const auto in = [&](const Vector& x) { return m.transition_logpdf(k, xn, x); };
  const auto meas = [&](const Vector& x) { return m.measurement_logpdf(k, y, x); };
  const auto init = [&](const Vector& x) { return m.initial_logpdf(x); };

  CHECK(rel(m.d_trans_out(k, xn, xp), finite_diff_grad(out, xn)) < 1e-6);
  CHECK(rel(m.d_trans_in(k, xn, xp), finite_diff_grad(in, xp)) < 1e-6);
  CHECK(rel(m.d_meas(k, y, xn), finite_diff_grad(meas, xn)) < 1e-6);
  CHECK(rel(m.d_initial(xp), finite_diff_grad(init, xp)) < 1e-6);

  CHECK(rel(m.h_trans_out(k), -finite_diff_hess(out, xn)) < 1e-4);
  CHECK(rel(m.h_trans_in(k, xn, xp), -finite_diff_hess(in, xp)) < 1e-4);
  CHECK(rel(m.h_meas(k, xn), -finite_diff_hess(meas, xn)) < 1e-4);
  CHECK(rel(m.h_initial(), -finite_diff_hess(init, xp)) < 1e-4);

  Vector z(2 * p);
  z << xn, xp;
  const Matrix joint = finite_diff_hess([&](const Vector& s) { return stacked_transition(m, k, s); }, z);
  CHECK(rel(m.h_trans_cross(k, xp), joint.topRightCorner(p, p)) < 1e-4);
}

} // namespace

TEST_CASE("transition_logpdf examples") {
  const auto scalar = scalar_linear_model(3);
  CHECK(scalar.transition_logpdf(1, v1(0.0), v1(0.0)) == doctest::Approx(-0.5 * log2pi).epsilon(1e-14));

  const NonlinearTanhModel tanh_model(20);
  CHECK(tanh_model.transition_logpdf(1, v1(0.0), v1(0.0)) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi * 0.2)).epsilon(1e-14));
  CHECK(tanh_model.transition_mean(5, v1(50.0))[0] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(NonlinearTanhModel::gain(5) == doctest::Approx(1.5));
  CHECK(NonlinearTanhModel::gain(15) == doctest::Approx(0.5));
}

TEST_CASE("measurement_logpdf examples") {
  LinearGaussianParams p;
  p.F = Matrix::Identity(2, 2);
  p.H = Matrix::Identity(2, 2);
  p.Q = p.R = p.P0 = Matrix::Identity(2, 2);
  p.mu = Vector::Zero(2);
  const LinearGaussianModel m(2, p);
  const Vector x = Vector::Constant(2, 0.7);
  CHECK(m.measurement_logpdf(1, x, x) == doctest::Approx(-log2pi).epsilon(1e-14));

  const NonlinearTanhModel tanh_model(5);
  CHECK(tanh_model.measurement_logpdf(0, v1(1.0), v1(2.0)) == doctest::Approx(-0.5 * log2pi).epsilon(1e-14));

  const auto three = three_state_linear_model(10);
  Vector abc(3);
  abc << 0.4, -1.0, 2.5;
  CHECK((three.H(0) * abc)[0] == doctest::Approx(1.5));
}

TEST_CASE("score terms by direct formula") {
  const auto scalar = scalar_linear_model(3);
  CHECK(scalar.d_meas(1, v1(1.0), v1(0.0))[0] == doctest::Approx(1.0));
  CHECK(scalar.d_meas(1, v1(0.3), v1(0.3)).norm() == 0.0);

  const NonlinearTanhModel tanh_model(10);
  CHECK(tanh_model.d_meas(2, v1(2.0), v1(2.0))[0] == doctest::Approx(0.5));

  const auto q02 = scalar_linear_model(3, 1.0, 1.0, 0.2);
  CHECK(q02.d_trans_out(1, v1(0.6), v1(0.5))[0] == doctest::Approx(-0.5));
  CHECK(q02.d_trans_out(1, v1(0.5), v1(0.5)).norm() == 0.0);
  CHECK(q02.d_trans_in(1, v1(0.5), v1(0.5)).norm() == 0.0);

  for (int k : {1, 5, 12}) {
    CHECK(tanh_model.transition_jacobian(k, v1(0.0))(0, 0) ==
          doctest::Approx(NonlinearTanhModel::gain(k) * std::numbers::pi));
  }
}

TEST_CASE("information terms") {
  const auto three = three_state_linear_model(4);
  const Vector x = Vector::Constant(3, 0.2), xn = Vector::Constant(3, -0.4);
  const Matrix F = three.F(1), Qi = three.Q_inverse(1);
  CHECK((three.h_trans_in(1, xn, x) - F.transpose() * Qi * F).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((three.h_trans_cross(1, x) - Qi * F).cwiseAbs().maxCoeff() < 1e-14);

  const NonlinearTanhModel tanh_model(10);
  for (double xp : {-0.4, 0.0, 0.3}) {
    const int k = 3;
    const Vector mean = tanh_model.transition_mean(k, v1(xp));
    const double sech = 1.0 / std::cosh(std::numbers::pi * xp);
    const double slope = NonlinearTanhModel::gain(k) * std::numbers::pi * sech * sech;
    CHECK(tanh_model.h_trans_in(k, mean, v1(xp))(0, 0) == doctest::Approx(slope * slope / 0.2).epsilon(1e-12));
  }
}

TEST_CASE("analytic derivatives match finite differences on a grid") {
  Rng rng(99, Stream::oracle);
  const auto three = three_state_linear_model(6);
  const NonlinearTanhModel tanh_model(30);
  for (int t = 0; t < 12; ++t) {
    const int k = 1 + t % 6;
    check_derivatives_at(three, k, rng.normal_vector(3), rng.normal_vector(3), rng.normal_vector(1));
    const int kt = 1 + (7 * t) % 30;
    check_derivatives_at(tanh_model, kt, 1.5 * rng.normal_vector(1), 0.6 * rng.normal_vector(1), rng.normal_vector(1));
  }
}

TEST_CASE("scalar transition density normalizes") {
  for (double q : {0.2, 1.0, 3.0}) {
    const auto m = scalar_linear_model(2, 0.8, 1.0, q);
    const double sd = std::sqrt(q), centre = 0.8 * 0.5;
    const int cells = 4000;
    const double a = centre - 8.0 * sd, h = 16.0 * sd / cells;
    double area = 0.0;
    for (int i = 0; i <= cells; ++i) {
      const double w = (i == 0 || i == cells) ? 0.5 : 1.0;
      area += w * std::exp(m.transition_logpdf(1, v1(a + i * h), v1(0.5)));
    }
    CHECK(std::abs(area * h - 1.0) < 1e-6);
  }
}

TEST_CASE("tanh transition mean is odd") {
  const NonlinearTanhModel m(20);
  for (int k = 1; k <= 20; ++k)
    for (double x : {0.01, 0.3, 1.7, 9.0}) CHECK(m.transition_mean(k, v1(-x))[0] == -m.transition_mean(k, v1(x))[0]);
}

TEST_CASE("construction rejects invalid parameters") {
  CHECK_THROWS_AS(scalar_linear_model(3, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0), ModelError);
  CHECK_THROWS_AS(scalar_linear_model(3, 1.0, 1.0, 0.0, 0.0), ModelError);
  CHECK_THROWS_AS(scalar_linear_model(0), ModelError);
  CHECK_THROWS_AS(NonlinearTanhModel(10, -0.2), ModelError);

  LinearGaussianParams p;
  p.F = Matrix::Identity(2, 2);
  p.H = Matrix::Identity(1, 2);
  p.Q = Matrix::Identity(2, 2);
  p.Q(0, 1) = 0.5;
  p.R = Matrix::Identity(1, 1);
  p.mu = Vector::Zero(2);
  p.P0 = Matrix::Identity(2, 2);
  CHECK_THROWS_WITH_AS(LinearGaussianModel(5, p), doctest::Contains("symmetric"), ModelError);
  p.Q(0, 1) = 0.0;
  p.H = Matrix::Identity(2, 3);
  CHECK_THROWS_AS(LinearGaussianModel(5, p), ModelError);
}

TEST_CASE("out-of-range steps are rejected") {
  const auto m = scalar_linear_model(3);
  CHECK_THROWS_AS(m.transition_logpdf(0, v1(0.0), v1(0.0)), std::out_of_range);
  CHECK_THROWS_AS(m.transition_logpdf(4, v1(0.0), v1(0.0)), std::out_of_range);
  CHECK_THROWS_AS(m.measurement_logpdf(-1, v1(0.0), v1(0.0)), std::out_of_range);
  CHECK_NOTHROW(m.measurement_logpdf(3, v1(0.0), v1(0.0)));
}

TEST_CASE("prior sampling moments") {
  const auto three = three_state_linear_model(1);
  const int draws = 100000;
  Vector sum = Vector::Zero(3);
  for (int i = 0; i < draws; ++i) {
    Rng rng(5, Stream::initial, 0, static_cast<std::uint64_t>(i));
    sum += three.sample_initial(rng);
  }
  const double bound = 3.0 * std::sqrt(0.3) / std::sqrt(static_cast<double>(draws));
  CHECK((sum / draws - three.mu()).cwiseAbs().maxCoeff() < bound);

  const NonlinearTanhModel tanh_model(1);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    Rng rng(6, Stream::initial, 0, static_cast<std::uint64_t>(i));
    const double x = tanh_model.sample_initial(rng)[0];
    s += x;
    s2 += x * x;
  }
  const double var = (s2 - s * s / draws) / (draws - 1);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("simulate is deterministic in the seed") {
  const auto three = three_state_linear_model(100);
  const Trajectory a = simulate(three, 42), b = simulate(three, 42), c = simulate(three, 43);
  REQUIRE(a.states.size() == 101);
  CHECK(a.observations.size() == 101);
  CHECK(a.horizon() == 100);
  bool same = true, differs = false;
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    same = same && a.states[k] == b.states[k] && a.observations[k] == b.observations[k];
    differs = differs || a.states[k] != c.states[k];
  }
  CHECK(same);
  CHECK(differs);
}
