#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "gridshed/optim.hpp"
#include "gridshed/rng.hpp"
#include "gridshed/tape.hpp"

using namespace gridshed;
using ad::Tape;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

// Reduces any node to a scalar through a fixed random weighting so gradient
// checks exercise non-uniform upstream gradients.
int weighted_scalar(Tape& t, int a, Rng& rng) {
  const int rows = t.value(a).rows;
  const int cols = t.value(a).cols;
  const int w = t.input(random_matrix(rows, cols, rng));
  const int prod = t.mul(a, w);
  const int m = t.mean_rows(prod);              // 1 x c
  const int ones = t.input(Matrix(1, cols, 1.0));
  return t.matmul_nt(m, ones);                  // 1 x 1
}

// Central-difference gradient of builder() w.r.t. every entry of every input.
void check_gradients(const std::vector<Matrix>& inputs,
                     const std::function<int(Tape&, const std::vector<int>&)>& builder,
                     double h = 1e-6, double tol = 1e-4) {
  auto eval = [&](const std::vector<Matrix>& xs) {
    Tape t;
    std::vector<int> ids;
    for (const Matrix& x : xs) ids.push_back(t.input(x));
    return t.value(builder(t, ids)).at(0, 0);
  };

  Tape t;
  std::vector<int> ids;
  for (const Matrix& x : inputs) ids.push_back(t.input(x));
  const int root = builder(t, ids);
  t.backward(root);

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      std::vector<Matrix> lo = inputs, hi = inputs;
      lo[k].data[i] -= h;
      hi[k].data[i] += h;
      const double fd = (eval(hi) - eval(lo)) / (2.0 * h);
      const double an = t.grad(ids[k]).data[i];
      const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3});
      INFO("input ", k, " entry ", i, " fd=", fd, " analytic=", an);
      CHECK(err < tol);
    }
  }
}

}  // namespace

TEST_CASE("matmul forward value") {
  Tape t;
  const int a = t.input(Matrix::from_rows({{1, 2}, {3, 4}}));
  const int b = t.input(Matrix::from_rows({{5, 6}, {7, 8}}));
  const Matrix& c = t.value(t.matmul(a, b));
  CHECK(c.at(0, 0) == 19);
  CHECK(c.at(0, 1) == 22);
  CHECK(c.at(1, 0) == 43);
  CHECK(c.at(1, 1) == 50);
  const Matrix& d = t.value(t.matmul_nt(a, b));  // A * B^T
  CHECK(d.at(0, 0) == 17);
  CHECK(d.at(0, 1) == 23);
}

TEST_CASE("softmax rows are stochastic and shift-invariant") {
  Tape t;
  const int a = t.input(Matrix::from_rows({{1, 2, 3}, {-5, 0, 5}}));
  const Matrix& y = t.value(t.row_softmax(a));
  for (int r = 0; r < 2; ++r) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += y.at(r, c);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  Tape t2;
  const int b = t2.input(Matrix::from_rows({{1001, 1002, 1003}}));
  const Matrix& y2 = t2.value(t2.row_softmax(b));
  CHECK(y2.at(0, 2) == doctest::Approx(y.at(0, 2)).epsilon(1e-12));
}

TEST_CASE("masked softmax zeroes masked entries and empty rows") {
  Tape t;
  const int a = t.input(Matrix::from_rows({{5, 1, 2}, {3, 3, 3}}));
  // Row 0 keeps columns 1,2; row 1 keeps nothing.
  const int y = t.masked_row_softmax(a, {0, 1, 1, 0, 0, 0});
  const Matrix& v = t.value(y);
  CHECK(v.at(0, 0) == 0.0);
  CHECK(v.at(0, 1) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + std::exp(2.0))));
  CHECK(v.at(0, 1) + v.at(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v.at(1, 0) == 0.0);
  CHECK(v.at(1, 1) == 0.0);
  CHECK(v.at(1, 2) == 0.0);
}

TEST_CASE("layer norm normalizes each row") {
  Tape t;
  const int a = t.input(Matrix::from_rows({{1, 2, 3, 4}, {10, 10, 10, 10}}));
  const int gain = t.input(Matrix(1, 4, 1.0));
  const int bias = t.input(Matrix(1, 4, 0.0));
  const Matrix& y = t.value(t.layer_norm(a, gain, bias));
  for (int r = 0; r < 2; ++r) {
    double mean = 0.0;
    for (int c = 0; c < 4; ++c) mean += y.at(r, c);
    CHECK(std::abs(mean / 4.0) < 1e-12);
  }
  CHECK(y.at(1, 0) == 0.0);  // constant row maps to bias
  double var = 0.0;
  for (int c = 0; c < 4; ++c) var += y.at(0, c) * y.at(0, c);
  CHECK(var / 4.0 == doctest::Approx(1.0).epsilon(1e-4));  // up to eps regularizer
}

TEST_CASE("gradients match central differences for every op") {
  Rng rng(555);

  SUBCASE("add, mul, scale") {
    check_gradients({random_matrix(3, 4, rng), random_matrix(3, 4, rng)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(1);
                      return weighted_scalar(t, t.scale(t.mul(t.add(in[0], in[1]), in[1]), 1.7), r2);
                    });
  }
  SUBCASE("add_rowvec") {
    check_gradients({random_matrix(3, 4, rng), random_matrix(1, 4, rng)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(2);
                      return weighted_scalar(t, t.add_rowvec(in[0], in[1]), r2);
                    });
  }
  SUBCASE("matmul") {
    check_gradients({random_matrix(3, 4, rng), random_matrix(4, 2, rng)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(3);
                      return weighted_scalar(t, t.matmul(in[0], in[1]), r2);
                    });
  }
  SUBCASE("matmul_nt") {
    check_gradients({random_matrix(3, 4, rng), random_matrix(2, 4, rng)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(4);
                      return weighted_scalar(t, t.matmul_nt(in[0], in[1]), r2);
                    });
  }
  SUBCASE("relu away from the kink") {
    Matrix m = random_matrix(3, 5, rng);
    for (double& v : m.data)
      if (std::abs(v) < 0.05) v = 0.1;  // keep finite differences off the kink
    check_gradients({m}, [&](Tape& t, const std::vector<int>& in) {
      Rng r2(5);
      return weighted_scalar(t, t.relu(in[0]), r2);
    });
  }
  SUBCASE("sigmoid") {
    check_gradients({random_matrix(2, 3, rng, -2.0, 2.0)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(6);
                      return weighted_scalar(t, t.sigmoid(in[0]), r2);
                    });
  }
  SUBCASE("row_softmax") {
    check_gradients({random_matrix(3, 4, rng, -2.0, 2.0)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(7);
                      return weighted_scalar(t, t.row_softmax(in[0]), r2);
                    });
  }
  SUBCASE("masked_row_softmax with an empty row") {
    check_gradients({random_matrix(3, 3, rng, -2.0, 2.0)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(8);
                      return weighted_scalar(
                          t, t.masked_row_softmax(in[0], {1, 1, 0, 0, 1, 1, 0, 0, 0}), r2);
                    });
  }
  SUBCASE("layer_norm including gain and bias") {
    check_gradients({random_matrix(3, 4, rng), random_matrix(1, 4, rng, 0.5, 1.5),
                     random_matrix(1, 4, rng)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(9);
                      return weighted_scalar(t, t.layer_norm(in[0], in[1], in[2]), r2);
                    });
  }
  SUBCASE("concat_rows") {
    check_gradients({random_matrix(3, 2, rng), random_matrix(3, 4, rng)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(10);
                      return weighted_scalar(t, t.concat_rows(in[0], in[1]), r2);
                    });
  }
  SUBCASE("mean_rows") {
    check_gradients({random_matrix(4, 3, rng)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(11);
                      return weighted_scalar(t, t.mean_rows(in[0]), r2);
                    });
  }
  SUBCASE("gather_rows with repeated indices") {
    check_gradients({random_matrix(4, 3, rng)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(12);
                      return weighted_scalar(t, t.gather_rows(in[0], {2, 0, 2, 3, 2}), r2);
                    });
  }
  SUBCASE("select and scatter with repeated pairs") {
    check_gradients({random_matrix(3, 3, rng)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(13);
                      const int sel = t.select_pairs(in[0], {0, 1, 0, 2}, {1, 2, 1, 0});
                      const int back = t.scatter_pairs(sel, {0, 0, 1, 1}, {0, 0, 1, 2}, 2, 3);
                      return weighted_scalar(t, back, r2);
                    });
  }
  SUBCASE("rowscale") {
    check_gradients({random_matrix(3, 4, rng), random_matrix(3, 1, rng)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(14);
                      return weighted_scalar(t, t.rowscale(in[0], in[1]), r2);
                    });
  }
  SUBCASE("segment_sum_rows") {
    check_gradients({random_matrix(5, 3, rng)},
                    [&](Tape& t, const std::vector<int>& in) {
                      Rng r2(15);
                      return weighted_scalar(t, t.segment_sum_rows(in[0], {1, 0, 1, 1, 0}, 2), r2);
                    });
  }
}

TEST_CASE("backward demands a scalar root and shapes must line up") {
  Tape t;
  const int a = t.input(Matrix(2, 2, 1.0));
  CHECK_THROWS_AS(t.backward(a), std::invalid_argument);
  const int b = t.input(Matrix(2, 3, 1.0));
  CHECK_THROWS_AS(t.add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(t.matmul(b, b), std::invalid_argument);     // inner dims 3 vs 2
  CHECK_THROWS_AS(t.matmul_nt(a, b), std::invalid_argument);  // needs equal cols
  CHECK_THROWS_AS(t.gather_rows(a, {5}), std::invalid_argument);
}

TEST_CASE("gradients accumulate across reuse of a node") {
  // y = sum(a * a) style reuse: d/da of a.a over both operands.
  Tape t;
  const int a = t.input(Matrix(1, 1, 3.0));
  const int y = t.mul(a, a);
  t.backward(y);
  CHECK(t.grad(a).at(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("adam takes a first step of exactly the learning rate") {
  Matrix x(1, 3, 0.0);
  Matrix g(1, 3);
  g.data = {0.5, -2.0, 1e-3};
  Adam adam(AdamConfig{0.01, 0.9, 0.999, 1e-8});
  adam.step({&x}, {&g});
  // Bias correction makes mhat/sqrt(vhat) = sign(g) on step one.
  CHECK(x.data[0] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(x.data[1] == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(x.data[2] == doctest::Approx(-0.01).epsilon(1e-4));
}

TEST_CASE("adam minimizes a separable quadratic") {
  Matrix x(2, 2, 0.0);
  const Matrix target = Matrix::from_rows({{1.0, -0.5}, {0.25, 2.0}});
  Adam adam(AdamConfig{0.05, 0.9, 0.999, 1e-8});
  for (int it = 0; it < 2000; ++it) {
    Matrix g(2, 2);
    for (std::size_t i = 0; i < x.size(); ++i) g.data[i] = 2.0 * (x.data[i] - target.data[i]);
    adam.step({&x}, {&g});
  }
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x.data[i] == doctest::Approx(target.data[i]).epsilon(1e-3));
  CHECK(adam.steps_taken() == 2000);
}
