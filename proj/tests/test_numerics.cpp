#include <cmath>
#include <functional>

#include "doctest.h"
#include "dscnn/error.hpp"
#include "dscnn/init.hpp"
#include "dscnn/matrix.hpp"
#include "dscnn/ops.hpp"
#include "dscnn/rng.hpp"
#include "dscnn/tape.hpp"

using namespace dscnn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed,
                     double half_width = 1.0) {
  Rng rng(seed);
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform(-half_width, half_width);
  return m;
}

// Central finite differences against the gradients the tape produced.
// The loss closure re-evaluates from the (perturbed) input matrices.
double max_fd_rel_err(std::vector<Matrix*> inputs,
                      const std::function<double()>& loss,
                      std::vector<const Matrix*> grads,
                      double step = 1e-5) {
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Matrix& m = *inputs[k];
    const Matrix& g = *grads[k];
    REQUIRE(m.same_shape(g));
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + step;
      const double up = loss();
      m.data()[i] = saved - step;
      const double down = loss();
      m.data()[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double ad = g.data()[i];
      const double rel =
          std::fabs(fd - ad) / std::max(std::fabs(fd) + std::fabs(ad), 1e-6);
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("matmul identity and hand oracle") {
  Matrix eye = Matrix::identity(2);
  Matrix v(2, 1);
  v(0, 0) = 3;
  v(1, 0) = 4;
  Matrix out = matmul(eye, v);
  CHECK(out(0, 0) == 3.0);
  CHECK(out(1, 0) == 4.0);

  Matrix a(2, 2);
  a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
  Matrix b(2, 1);
  b(0, 0) = 5; b(1, 0) = 6;
  Matrix c = matmul(a, b);
  // hand dot products
  CHECK(c(0, 0) == 1 * 5 + 2 * 6);
  CHECK(c(1, 0) == 3 * 5 + 4 * 6);
}

TEST_CASE("matmul rejects mismatched shapes naming both") {
  Matrix a(2, 3), b(2, 2);
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("2x2") != std::string::npos);
  }
}

TEST_CASE("matmul associativity at tolerance") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Matrix a = random_matrix(5, 5, seed);
    Matrix b = random_matrix(5, 5, seed + 100);
    Matrix c = random_matrix(5, 5, seed + 200);
    Matrix lhs = matmul(matmul(a, b), c);
    Matrix rhs = matmul(a, matmul(b, c));
    CHECK(sub(lhs, rhs).max_abs() < 1e-9);
  }
}

TEST_CASE("map_elementwise fixed points and scalar oracle") {
  Matrix z(1, 1);
  CHECK(map_elementwise(z, Nonlin::sigmoid)(0, 0) == 0.5);
  CHECK(map_elementwise(z, Nonlin::tanh)(0, 0) == 0.0);
  Matrix neg(1, 1);
  neg(0, 0) = -3.0;
  CHECK(map_elementwise(neg, Nonlin::relu)(0, 0) == 0.0);

  Matrix two(1, 1);
  two(0, 0) = 2.0;
  const double oracle = 1.0 / (1.0 + std::exp(-2.0));
  CHECK(map_elementwise(two, Nonlin::sigmoid)(0, 0) ==
        doctest::Approx(oracle).epsilon(1e-15));
}

TEST_CASE("map_elementwise ranges on random input") {
  Matrix x = random_matrix(7, 9, 42, 5.0);
  Matrix s = map_elementwise(x, Nonlin::sigmoid);
  Matrix th = map_elementwise(x, Nonlin::tanh);
  Matrix r = map_elementwise(x, Nonlin::relu);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(s.data()[i] > 0.0);
    CHECK(s.data()[i] < 1.0);
    CHECK(th.data()[i] > -1.0);
    CHECK(th.data()[i] < 1.0);
    CHECK(r.data()[i] >= 0.0);
  }
  CHECK(s.all_finite());
}

TEST_CASE("map_elementwise rejects non-finite input") {
  Matrix x(1, 2);
  x(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(map_elementwise(x, Nonlin::tanh), DomainError);
}

TEST_CASE("softmax symmetry, stability, oracle") {
  Matrix z(3, 1);
  Matrix u = softmax(z);
  for (int i = 0; i < 3; ++i)
    CHECK(u(i, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  Matrix big(2, 1);
  big(0, 0) = 1000.0;
  big(1, 0) = 0.0;
  Matrix s = softmax(big);
  CHECK(s.all_finite());
  CHECK(s(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s(1, 0) == doctest::Approx(0.0).epsilon(1e-12));

  Matrix x(3, 1);
  x(0, 0) = 1; x(1, 0) = 2; x(2, 0) = 3;
  Matrix y = softmax(x);
  // direct exp/sum oracle
  const double total = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(y(0, 0) == doctest::Approx(std::exp(1.0) / total).epsilon(1e-12));
  CHECK(y(1, 0) == doctest::Approx(std::exp(2.0) / total).epsilon(1e-12));
  CHECK(y(2, 0) == doctest::Approx(std::exp(3.0) / total).epsilon(1e-12));
  CHECK(y(0, 0) == doctest::Approx(0.09003057).epsilon(1e-6));
  CHECK(y(1, 0) == doctest::Approx(0.24472847).epsilon(1e-6));
  CHECK(y(2, 0) == doctest::Approx(0.66524096).epsilon(1e-6));
}

TEST_CASE("softmax normalization and shift invariance properties") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.index(8);
    Matrix x = random_matrix(n, 1, seed * 977, 10.0);
    Matrix y = softmax(x);
    CHECK(std::fabs(sum(y) - 1.0) <= 1e-12);
    const double c = rng.uniform(-50.0, 50.0);
    Matrix shifted = x;
    for (std::size_t i = 0; i < n; ++i) shifted(i, 0) += c;
    Matrix y2 = softmax(shifted);
    CHECK(sub(y, y2).max_abs() <= 1e-12);
  }
}

TEST_CASE("softmax rejects empty input") {
  Matrix empty;
  CHECK_THROWS_AS(softmax(empty), DomainError);
}

TEST_CASE("backward of sum is all-ones; d(x^2) = 2x") {
  Tape t;
  NodeId p = t.parameter(random_matrix(3, 4, 7));
  NodeId loss = ag::sum(t, p);
  t.backward(loss);
  const Matrix& g = t.grad_view(p);
  CHECK(g.same_shape(t.value(p)));
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.data()[i] == 1.0);

  Tape t2;
  Matrix v(2, 1);
  v(0, 0) = 1; v(1, 0) = 2;
  NodeId q = t2.parameter(v);
  NodeId loss2 = ag::sum(t2, ag::hadamard(t2, q, q));
  t2.backward(loss2);
  CHECK(t2.grad_view(q)(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(t2.grad_view(q)(1, 0) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("backward on non-scalar is a contract error") {
  Tape t;
  NodeId p = t.parameter(random_matrix(2, 2, 3));
  NodeId out = ag::scale(t, p, 2.0);
  CHECK_THROWS_AS(t.backward(out), ContractError);
}

TEST_CASE("backward on a non-recording tape is a contract error") {
  Tape t(false);
  NodeId p = t.parameter(random_matrix(1, 1, 3));
  NodeId loss = ag::sum(t, p);
  CHECK_THROWS_AS(t.backward(loss), ContractError);
}

TEST_CASE("gradient fidelity of every recorded op") {
  // loss = sum(out .* fixed_weights) gives non-uniform downstream gradients
  auto weighted_sum = [](Tape& t, NodeId out, const Matrix& w) {
    return ag::sum(t, ag::hadamard(t, out, t.constant(w)));
  };

  SUBCASE("matmul") {
    Matrix a = random_matrix(3, 4, 11), b = random_matrix(4, 2, 12);
    Matrix w = random_matrix(3, 2, 13);
    Tape t;
    NodeId ia = t.parameter(a), ib = t.parameter(b);
    t.backward(weighted_sum(t, ag::matmul(t, ia, ib), w));
    auto loss = [&] {
      Tape q(false);
      return sum(hadamard(matmul(a, b), w));
    };
    CHECK(max_fd_rel_err({&a, &b}, loss,
                         {&t.grad_view(ia), &t.grad_view(ib)}) < 1e-4);
  }

  SUBCASE("add sub hadamard scale") {
    Matrix a = random_matrix(3, 3, 21), b = random_matrix(3, 3, 22);
    Matrix w = random_matrix(3, 3, 23);
    Tape t;
    NodeId ia = t.parameter(a), ib = t.parameter(b);
    NodeId expr = ag::scale(
        t, ag::hadamard(t, ag::add(t, ia, ib), ag::sub(t, ia, ib)), 1.7);
    t.backward(weighted_sum(t, expr, w));
    auto loss = [&] {
      return sum(hadamard(scale(hadamard(add(a, b), sub(a, b)), 1.7), w));
    };
    CHECK(max_fd_rel_err({&a, &b}, loss,
                         {&t.grad_view(ia), &t.grad_view(ib)}) < 1e-4);
  }

  SUBCASE("nonlinearities") {
    for (Nonlin fn : {Nonlin::sigmoid, Nonlin::tanh, Nonlin::relu}) {
      Matrix x = random_matrix(4, 3, 31 + static_cast<int>(fn), 2.0);
      Matrix w = random_matrix(4, 3, 35);
      Tape t;
      NodeId ix = t.parameter(x);
      t.backward(weighted_sum(t, ag::map(t, ix, fn), w));
      auto loss = [&] { return sum(hadamard(map_elementwise(x, fn), w)); };
      CHECK(max_fd_rel_err({&x}, loss, {&t.grad_view(ix)}) < 1e-4);
    }
  }

  SUBCASE("softmax") {
    Matrix x = random_matrix(5, 1, 41, 3.0);
    Matrix w = random_matrix(5, 1, 42);
    Tape t;
    NodeId ix = t.parameter(x);
    t.backward(weighted_sum(t, ag::softmax(t, ix), w));
    auto loss = [&] { return sum(hadamard(softmax(x), w)); };
    CHECK(max_fd_rel_err({&x}, loss, {&t.grad_view(ix)}) < 1e-4);
  }

  SUBCASE("affine") {
    Matrix W = random_matrix(3, 4, 51), x = random_matrix(4, 1, 52);
    Matrix U = random_matrix(3, 3, 53), h = random_matrix(3, 1, 54);
    Matrix b = random_matrix(3, 1, 55);
    Matrix w = random_matrix(3, 1, 56);
    Tape t;
    NodeId iw = t.parameter(W), ix = t.parameter(x), iu = t.parameter(U),
           ih = t.parameter(h), ib = t.parameter(b);
    t.backward(weighted_sum(t, ag::affine(t, iw, ix, iu, ih, ib), w));
    auto loss = [&] {
      return sum(hadamard(add(add(matmul(W, x), matmul(U, h)), b), w));
    };
    CHECK(max_fd_rel_err(
              {&W, &x, &U, &h, &b}, loss,
              {&t.grad_view(iw), &t.grad_view(ix), &t.grad_view(iu),
               &t.grad_view(ih), &t.grad_view(ib)}) < 1e-4);
  }

  SUBCASE("structure ops") {
    Matrix m = random_matrix(3, 5, 61);
    Matrix w = random_matrix(3 + 3, 1, 62);
    Tape t;
    NodeId im = t.parameter(m);
    NodeId c0 = ag::column(t, im, 0);
    NodeId c3 = ag::column(t, im, 3);
    NodeId stacked = ag::hstack(t, {c0, c3, c0});
    NodeId pooled = ag::mean_cols(t, stacked);
    NodeId both = ag::concat_rows(t, {pooled, c3});
    t.backward(weighted_sum(t, both, w));
    auto loss = [&] {
      Matrix pool(3, 1);
      for (int i = 0; i < 3; ++i)
        pool(i, 0) = (m(i, 0) + m(i, 3) + m(i, 0)) / 3.0;
      Matrix cat(6, 1);
      for (int i = 0; i < 3; ++i) cat(i, 0) = pool(i, 0);
      for (int i = 0; i < 3; ++i) cat(3 + i, 0) = m(i, 3);
      return sum(hadamard(cat, w));
    };
    CHECK(max_fd_rel_err({&m}, loss, {&t.grad_view(im)}) < 1e-4);
  }
}

TEST_CASE("parameter leaves carry gradients of their value's shape") {
  Tape t;
  NodeId a = t.parameter(random_matrix(2, 5, 71));
  NodeId b = t.parameter(random_matrix(5, 3, 72));
  NodeId out = ag::matmul(t, a, b);
  t.backward(ag::sum(t, out));
  CHECK(t.grad_view(a).same_shape(t.value(a)));
  CHECK(t.grad_view(b).same_shape(t.value(b)));
}

TEST_CASE("init_orthogonal 1x1 is a sign") {
  Matrix m = init_orthogonal(1, 1, 9);
  CHECK(std::fabs(m(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("init_orthogonal columns are orthonormal") {
  Matrix m = init_orthogonal(4, 4, 123);
  Matrix gram = matmul(transpose(m), m);
  CHECK(sub(gram, Matrix::identity(4)).max_abs() < 1e-6);

  // tall case
  Matrix tall = init_orthogonal(9, 4, 5);
  CHECK(sub(matmul(transpose(tall), tall), Matrix::identity(4)).max_abs() <
        1e-6);

  // wide case: transpose convention, rows orthonormal
  Matrix wide = init_orthogonal(3, 8, 5);
  CHECK(sub(matmul(wide, transpose(wide)), Matrix::identity(3)).max_abs() <
        1e-6);
}

TEST_CASE("init_orthogonal is seed-deterministic") {
  Matrix a = init_orthogonal(6, 6, 77);
  Matrix b = init_orthogonal(6, 6, 77);
  CHECK(a == b);
  Matrix c = init_orthogonal(6, 6, 78);
  CHECK(a != c);
}

TEST_CASE("init_orthogonal rejects zero dimension") {
  CHECK_THROWS_AS(init_orthogonal(0, 3, 1), DomainError);
  CHECK_THROWS_AS(init_orthogonal(3, 0, 1), DomainError);
}

TEST_CASE("init_uniform range, determinism, mean") {
  Matrix m = init_uniform(10, 10, 0.01, 4);
  CHECK(m.max_abs() <= 0.01);
  CHECK(init_uniform(10, 10, 0.01, 4) == m);

  Matrix big = init_uniform(100, 100, 0.25, 99);
  CHECK(std::fabs(sum(big) / big.size()) < 0.01);

  CHECK_THROWS_AS(init_uniform(2, 2, 0.0, 1), DomainError);
  CHECK_THROWS_AS(init_uniform(2, 2, -0.5, 1), DomainError);
}

TEST_CASE("derived seeds separate by tag and counter") {
  const std::uint64_t base = 42;
  CHECK(derive_seed(base, "init") != derive_seed(base, "shuffle"));
  CHECK(derive_seed(base, "init", 0) != derive_seed(base, "init", 1));
  CHECK(derive_seed(base, "init", 1, 0) != derive_seed(base, "init", 0, 1));
  CHECK(derive_seed(base, "init") == derive_seed(base, "init"));
}
