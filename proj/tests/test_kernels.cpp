#include <doctest.h>

#include "mlsmooth/kernels.hpp"

#include <numeric>
#include <omp.h>

using namespace mlsmooth;

namespace {

struct Threads {
  explicit Threads(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~Threads() { omp_set_num_threads(saved); }
  int saved;
};

std::vector<int> shuffled_parents(int count) {
  std::vector<int> parents(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) parents[static_cast<std::size_t>(m)] = (7 * m + 3) % count;
  return parents;
}

} // namespace

TEST_CASE("serial and parallel kernels are bit-identical") {
  const Threads threads(4);
  const auto model = three_state_linear_model(5);
  const int M = 1537;

  const Matrix a_s = kernels::sample_initial(model, M, 21, Exec::serial);
  const Matrix a_p = kernels::sample_initial(model, M, 21, Exec::parallel);
  CHECK(a_s == a_p);

  const auto parents = shuffled_parents(M);
  const Matrix b_s = kernels::propagate(model, 2, a_s, parents, 21, Exec::serial);
  const Matrix b_p = kernels::propagate(model, 2, a_s, parents, 21, Exec::parallel);
  CHECK(b_s == b_p);

  const Vector y = Vector::Constant(1, 0.3);
  CHECK(kernels::measurement_loglik(model, 2, y, b_s, Exec::serial) ==
        kernels::measurement_loglik(model, 2, y, b_s, Exec::parallel));

  const Matrix means = model.transition_mean_batch(3, b_s);
  const Vector x = Vector::Constant(3, 0.1);
  Vector o_s, o_p;
  Matrix g_s, g_p;
  kernels::gaussian_transition_terms(means, model.Q_whitener(3), x, o_s, &g_s, Exec::serial);
  kernels::gaussian_transition_terms(means, model.Q_whitener(3), x, o_p, &g_p, Exec::parallel);
  CHECK(o_s == o_p);
  CHECK(g_s == g_p);

  kernels::generic_transition_terms(model, 3, x, b_s, o_s, &g_s, Exec::serial);
  kernels::generic_transition_terms(model, 3, x, b_s, o_p, &g_p, Exec::parallel);
  CHECK(o_s == o_p);
  CHECK(g_s == g_p);
}

TEST_CASE("gaussian fast path matches the generic model path") {
  const auto model = three_state_linear_model(5);
  const Matrix atoms = kernels::sample_initial(model, 64, 8, Exec::serial);
  const Vector x = Vector::LinSpaced(3, -0.5, 0.5);
  Vector fast, generic;
  Matrix gf, gg;
  kernels::gaussian_transition_terms(model.transition_mean_batch(1, atoms), model.Q_whitener(1), x, fast, &gf,
                                     Exec::serial);
  kernels::generic_transition_terms(model, 1, x, atoms, generic, &gg, Exec::serial);
  // The fast path drops the normalizing constant, which is common to every atom.
  const Vector shift = generic - fast;
  CHECK(shift.maxCoeff() - shift.minCoeff() < 1e-12);
  CHECK((gf - gg).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sampling streams depend on particle index, not on evaluation order") {
  const auto model = scalar_linear_model(3);
  const Matrix all = kernels::sample_initial(model, 10, 3, Exec::serial);
  const Matrix few = kernels::sample_initial(model, 4, 3, Exec::serial);
  CHECK(all.leftCols(4) == few);
  CHECK(all(0, 0) != all(0, 1));
}

TEST_CASE("weighted moments") {
  Matrix cols(1, 2);
  cols << -1.0, 1.0;
  const Vector w = Vector::Constant(2, 0.5);
  const Vector mean = kernels::weighted_mean(w, cols);
  CHECK(mean[0] == 0.0);
  CHECK(kernels::weighted_covariance(w, cols, mean)(0, 0) == doctest::Approx(1.0));

  Matrix one(2, 1);
  one << 0.4, -2.0;
  CHECK(kernels::weighted_mean(Vector::Ones(1), one) == one.col(0));
}
