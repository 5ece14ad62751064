#include <doctest.h>

#include "mlsmooth/kalman.hpp"
#include "mlsmooth/oracles.hpp"
#include "mlsmooth/particle.hpp"

#include <cmath>
#include <limits>
#include <omp.h>

using namespace mlsmooth;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

// Two-step history with the given step-0 atoms and weights.
ParticleHistory handmade(const Matrix& atoms, const Vector& alpha) {
  ParticleHistory ph;
  ph.particle_count = static_cast<int>(atoms.cols());
  ph.particles = {atoms, atoms};
  ph.weights = {alpha, alpha};
  ph.log_weights = {alpha.array().log().matrix(), alpha.array().log().matrix()};
  return ph;
}

// rms and max of standardized errors, the standard error of each comparison
// taken from the spread across independent runs.
struct ZSummary {
  double rms = 0.0;
  double max = 0.0;
};

ZSummary z_summary(const std::vector<std::vector<double>>& runs, const std::vector<double>& truth) {
  const auto R = static_cast<double>(runs.size());
  ZSummary out;
  for (std::size_t c = 0; c < truth.size(); ++c) {
    double s = 0.0, s2 = 0.0;
    for (const auto& r : runs) {
      s += r[c];
      s2 += r[c] * r[c];
    }
    const double mean = s / R;
    const double se = std::sqrt((s2 - R * mean * mean) / (R - 1.0) / R);
    const double z = std::abs(mean - truth[c]) / se;
    out.rms += z * z;
    out.max = std::max(out.max, z);
  }
  out.rms = std::sqrt(out.rms / static_cast<double>(truth.size()));
  return out;
}

} // namespace

TEST_CASE("normalized weights") {
  const std::vector<double> equal{-2.0, -2.0, -2.0, -2.0};
  CHECK((normalized_weights(equal).array() - 0.25).abs().maxCoeff() < 1e-15);

  const std::vector<double> ratio{std::log(3.0), 0.0};
  const Vector w = normalized_weights(ratio);
  CHECK(w[0] == doctest::Approx(0.75));
  CHECK(w[1] == doctest::Approx(0.25));

  CHECK(normalized_weights(std::vector<double>{-1e5})[0] == 1.0);

  // Far below exp underflow, still exact.
  const std::vector<double> tiny{-10000.0 + std::log(3.0), -10000.0};
  CHECK(normalized_weights(tiny)[0] == doctest::Approx(0.75));
  const Vector lw = normalized_log_weights(std::vector<double>{0.0, -2000.0});
  CHECK(lw[1] == doctest::Approx(-2000.0));

  const double ninf = -std::numeric_limits<double>::infinity();
  try {
    normalized_weights(std::vector<double>{ninf, ninf}, 4);
    FAIL("expected DegenerateWeightsError");
  } catch (const DegenerateWeightsError& e) {
    CHECK(e.step() == 4);
  }
}

TEST_CASE("multinomial resampling frequencies follow the weights") {
  Vector w(4);
  w << 0.1, 0.2, 0.3, 0.4;
  std::vector<int> counts(4, 0);
  for (int r = 0; r < 5000; ++r) {
    Rng rng(1, Stream::resample, 0, static_cast<std::uint64_t>(r));
    for (int a : multinomial_resample(w, rng)) ++counts[static_cast<std::size_t>(a)];
  }
  const double total = 20000.0;
  for (int i = 0; i < 4; ++i) {
    const double p = w[i];
    CHECK(std::abs(counts[static_cast<std::size_t>(i)] / total - p) < 4.0 * std::sqrt(p * (1 - p) / total));
  }
}

TEST_CASE("effective sample size") {
  CHECK(effective_sample_size(Vector::Constant(10, 0.1)) == doctest::Approx(10.0));
  Vector w = Vector::Zero(10);
  w[3] = 1.0;
  CHECK(effective_sample_size(w) == doctest::Approx(1.0));
}

TEST_CASE("filter history: simplex, shapes and determinism") {
  const auto m = three_state_linear_model(100);
  const Trajectory t = simulate(m, 31);
  const ParticleHistory a = pf_run(m, t.observations, 2000, 77);
  REQUIRE(a.horizon() == 100);
  for (int k = 0; k <= 100; ++k) {
    CHECK(std::abs(a.alpha(k).sum() - 1.0) < 1e-12);
    CHECK(a.alpha(k).minCoeff() >= 0.0);
    CHECK(a.atoms(k).cols() == 2000);
    CHECK(a.atoms(k).allFinite());
  }
  const ParticleHistory b = pf_run(m, t.observations, 2000, 77);
  bool same = true;
  for (int k = 0; k <= 100; ++k) same = same && a.atoms(k) == b.atoms(k) && a.alpha(k) == b.alpha(k);
  CHECK(same);
}

TEST_CASE("filter history is identical for serial and threaded execution") {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  const NonlinearTanhModel m(40);
  const Trajectory t = simulate(m, 8);
  const ParticleHistory s = pf_run(m, t.observations, 3001, 5, Exec::serial);
  const ParticleHistory p = pf_run(m, t.observations, 3001, 5, Exec::parallel);
  omp_set_num_threads(saved);
  bool same = true;
  for (int k = 0; k <= 40; ++k)
    same = same && s.atoms(k) == p.atoms(k) && s.alpha(k) == p.alpha(k) && s.log_weights[static_cast<std::size_t>(k)] ==
                                                                              p.log_weights[static_cast<std::size_t>(k)] &&
           s.ancestors[static_cast<std::size_t>(k)] == p.ancestors[static_cast<std::size_t>(k)];
  CHECK(same);
}

TEST_CASE("filter arguments are validated") {
  const auto m = scalar_linear_model(2);
  const std::vector<Vector> y(3, v1(0.0));
  CHECK_THROWS(pf_run(m, y, 1, 0));
  CHECK_THROWS(pf_run(m, std::vector<Vector>(2, v1(0.0)), 10, 0));
}

TEST_CASE("hopeless observation raises degenerate weights with the step") {
  const auto m = scalar_linear_model(3, 1.0, 1.0, 1.0, 0.01);
  std::vector<Vector> y{v1(0.0), v1(0.0), v1(1e3), v1(0.0)};
  try {
    pf_run(m, y, 100, 1);
    FAIL("expected DegenerateWeightsError");
  } catch (const DegenerateWeightsError& e) {
    CHECK(e.step() == 2);
  }
}

TEST_CASE("point-mass dynamics give a point-mass filter") {
  const auto m = scalar_linear_model(5, 1.0, 1.0, 1e-30, 1.0, 2.0, 1e-30);
  const ParticleHistory ph = pf_run(m, std::vector<Vector>(6, v1(0.3)), 50, 3);
  for (int k = 0; k <= 5; ++k) CHECK(std::abs(filtered_mean(ph, k)[0] - 2.0) < 1e-12);
}

TEST_CASE("filtered mean edge cases") {
  Matrix one(2, 1);
  one << 1.5, -0.5;
  ParticleHistory single = handmade(one, Vector::Ones(1));
  CHECK(filtered_mean(single, 0) == one.col(0));

  Matrix three(1, 3);
  three << 1.0, 2.0, 6.0;
  ParticleHistory uniform = handmade(three, Vector::Constant(3, 1.0 / 3.0));
  CHECK(filtered_mean(uniform, 0)[0] == doctest::Approx(3.0));
}

TEST_CASE("backward-kernel weights by hand") {
  const auto m = scalar_linear_model(1);
  // f(0 | a) / f(0 | b) = 4 with a = 0 and b^2 = 2 log 4.
  Matrix atoms(1, 2);
  atoms << 0.0, std::sqrt(2.0 * std::log(4.0));
  const ParticleHistory ph = handmade(atoms, Vector::Constant(2, 0.5));
  const Vector w = backward_kernel_weights(1, v1(0.0), ph, m);
  CHECK(w[0] == doctest::Approx(0.8));
  CHECK(w[1] == doctest::Approx(0.2));

  Matrix same(1, 3);
  same << 0.7, 0.7, 0.7;
  Vector alpha(3);
  alpha << 0.2, 0.5, 0.3;
  const Vector ws = backward_kernel_weights(1, v1(-1.0), handmade(same, alpha), m);
  CHECK((ws - alpha).cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(backward_kernel_weights(2, v1(0.0), ph, m), std::out_of_range);
}

TEST_CASE("backward-kernel weights ignore a common rescaling of alpha") {
  const auto m = three_state_linear_model(10);
  const Trajectory t = simulate(m, 2);
  ParticleHistory ph = pf_run(m, t.observations, 500, 9);
  const Vector x = Vector::LinSpaced(3, -0.2, 0.4);
  const Vector before = backward_kernel_weights(6, x, ph, m);
  ph.log_weights[5].array() += std::log(7.5);
  ph.weights[5] *= 7.5;
  const Vector after = backward_kernel_weights(6, x, ph, m);
  CHECK((before - after).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("particle filter mean tracks the Kalman mean") {
  const int n = 20, runs = 24;
  const auto m = scalar_linear_model(n, 0.9, 1.0, 0.5, 1.0);
  const Trajectory t = simulate(m, 14);
  const FilterResult fr = kalman_filter(m, t.observations);
  std::vector<double> truth;
  for (int k = 0; k <= n; ++k) truth.push_back(fr.at(k).x_filt[0]);
  std::vector<std::vector<double>> est;
  for (int r = 0; r < runs; ++r) {
    const ParticleHistory ph = pf_run(m, t.observations, 50000, derive_seed(100, static_cast<std::uint64_t>(r)));
    std::vector<double> row;
    for (int k = 0; k <= n; ++k) row.push_back(filtered_mean(ph, k)[0]);
    est.push_back(row);
  }
  const ZSummary z = z_summary(est, truth);
  CHECK(z.rms <= 3.0);
  CHECK(z.max <= 4.5);
}

TEST_CASE("backward-kernel mean tracks the closed-form conditional mean") {
  const int n = 10, runs = 24;
  const auto m = scalar_linear_model(n, 0.9, 1.0, 0.5, 1.0);
  const Trajectory t = simulate(m, 15);
  const FilterResult fr = kalman_filter(m, t.observations);
  std::vector<double> truth;
  std::vector<std::pair<int, double>> points;
  for (int k = 1; k <= n; k += 3)
    for (double dx : {-0.5, 0.0, 0.8}) {
      const double x = fr.at(k).x_pred[0] + dx;
      points.emplace_back(k, x);
      truth.push_back(conditional_mean_previous(fr, k, v1(x))[0]);
    }
  std::vector<std::vector<double>> est;
  for (int r = 0; r < runs; ++r) {
    const ParticleHistory ph = pf_run(m, t.observations, 50000, derive_seed(200, static_cast<std::uint64_t>(r)));
    std::vector<double> row;
    for (const auto& [k, x] : points) {
      const Vector w = backward_kernel_weights(k, v1(x), ph, m);
      row.push_back(kernels::weighted_mean(w, ph.atoms(k - 1))[0]);
    }
    est.push_back(row);
  }
  const ZSummary z = z_summary(est, truth);
  CHECK(z.rms <= 3.0);
  CHECK(z.max <= 4.5);
}

TEST_CASE("filtered-mean error shrinks like M^-1/2") {
  const OracleCheck c = check_particle_rate(4, 8);
  INFO(c.detail);
  CHECK(c.passed);
  CHECK(c.measured >= -0.7);
  CHECK(c.measured <= -0.3);
}
