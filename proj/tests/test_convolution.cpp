#include <cmath>

#include "doctest.h"
#include "dscnn/convolution.hpp"
#include "dscnn/error.hpp"
#include "dscnn/ops.hpp"
#include "test_util.hpp"

using namespace dscnn;
using testutil::random_matrix;

namespace {

// Brute-force oracle: materializes the zero-padded input and walks every
// window with nested loops.
Matrix naive_wide_conv(const std::vector<Matrix>& maps, const Filter& f,
                       Nonlin nl) {
  const std::size_t c = maps.size();
  const std::size_t d = maps[0].rows();
  const std::size_t s = maps[0].cols();
  const std::size_t l = f.window;
  std::vector<Matrix> padded;
  for (const Matrix& m : maps) {
    Matrix x(d, s + 2 * l - 2);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < s; ++j) x(i, j + l - 1) = m(i, j);
    padded.push_back(std::move(x));
  }
  Matrix out(s + l - 1, 1);
  for (std::size_t k = 0; k < s + l - 1; ++k) {
    double acc = f.bias;
    for (std::size_t r = 0; r < c; ++r)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < l; ++j)
          acc += f.weights(r * d + i, j) * padded[r](i, k + j);
    switch (nl) {
      case Nonlin::identity: out(k, 0) = acc; break;
      case Nonlin::relu: out(k, 0) = acc > 0 ? acc : 0; break;
      case Nonlin::tanh: out(k, 0) = std::tanh(acc); break;
      case Nonlin::sigmoid: out(k, 0) = 1.0 / (1.0 + std::exp(-acc)); break;
    }
  }
  return out;
}

Filter random_filter(std::size_t c, std::size_t d, std::size_t l,
                     std::uint64_t seed) {
  Filter f;
  f.channels = c;
  f.feat_dim = d;
  f.window = l;
  f.weights = random_matrix(c * d, l, seed);
  f.bias = random_matrix(1, 1, seed + 1)(0, 0);
  return f;
}

}  // namespace

TEST_CASE("window-1 all-ones filter sums columns") {
  Matrix h = random_matrix(3, 4, 2);
  Filter f;
  f.channels = 1;
  f.feat_dim = 3;
  f.window = 1;
  f.weights = Matrix::full(3, 1, 1.0);
  f.bias = 0.0;
  const Matrix out = wide_conv(h, f, Nonlin::identity);
  REQUIRE(out.rows() == 4);  // length s for l = 1
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(out(k, 0) ==
          doctest::Approx(h(0, k) + h(1, k) + h(2, k)).epsilon(1e-14));
  }
}

TEST_CASE("feature map length is s + l - 1") {
  const Matrix h = random_matrix(2, 5, 3);
  const Filter f = random_filter(1, 2, 3, 4);
  CHECK(wide_conv(h, f).rows() == 7);

  for (std::size_t s = 1; s <= 10; ++s) {
    for (std::size_t l = 1; l <= 5; ++l) {
      const Matrix input = random_matrix(3, s, s * 10 + l);
      const Filter fl = random_filter(1, 3, l, s * 100 + l);
      CHECK(wide_conv(input, fl).rows() == s + l - 1);
    }
  }
}

TEST_CASE("wide_conv equals the nested-loop oracle") {
  const Matrix h = random_matrix(3, 4, 5);
  const Filter f = random_filter(1, 3, 2, 6);
  const Matrix got = wide_conv(h, f, Nonlin::identity);
  const Matrix want = naive_wide_conv({h}, f, Nonlin::identity);
  CHECK(sub(got, want).max_abs() < 1e-12);
}

TEST_CASE("multichannel zero second channel reduces to single channel") {
  const Matrix h0 = random_matrix(3, 5, 7);
  const Matrix h1 = random_matrix(3, 5, 8);
  Filter two = random_filter(2, 3, 3, 9);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) two.weights(3 + i, j) = 0.0;
  Filter one;
  one.channels = 1;
  one.feat_dim = 3;
  one.window = 3;
  one.weights = Matrix(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) one.weights(i, j) = two.weights(i, j);
  one.bias = two.bias;
  const Matrix got = wide_conv_multichannel({h0, h1}, two, Nonlin::identity);
  const Matrix want = wide_conv(h0, one, Nonlin::identity);
  CHECK(sub(got, want).max_abs() < 1e-12);
}

TEST_CASE("identical channels with shared weights double the pre-activation") {
  const Matrix h = random_matrix(2, 4, 11);
  Filter two = random_filter(2, 2, 2, 12);
  two.bias = 0.0;
  // share weights across the two channel blocks
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) two.weights(2 + i, j) = two.weights(i, j);
  Filter one;
  one.channels = 1;
  one.feat_dim = 2;
  one.window = 2;
  one.weights = Matrix(2, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) one.weights(i, j) = two.weights(i, j);
  one.bias = 0.0;
  const Matrix got = wide_conv_multichannel({h, h}, two, Nonlin::identity);
  const Matrix want = scale(wide_conv(h, one, Nonlin::identity), 2.0);
  CHECK(sub(got, want).max_abs() < 1e-12);
}

TEST_CASE("multichannel random case equals the quadruple-loop oracle") {
  const Matrix h0 = random_matrix(3, 4, 13);
  const Matrix h1 = random_matrix(3, 4, 14);
  const Filter f = random_filter(2, 3, 3, 15);
  const Matrix got = wide_conv_multichannel({h0, h1}, f, Nonlin::identity);
  const Matrix want = naive_wide_conv({h0, h1}, f, Nonlin::identity);
  CHECK(sub(got, want).max_abs() < 1e-12);
}

TEST_CASE("oracle equivalence property across shapes") {
  std::uint64_t seed = 1000;
  for (std::size_t s : {1, 2, 3, 5, 7, 10}) {
    for (std::size_t l : {1, 2, 3, 5}) {
      for (std::size_t c : {1, 2, 3}) {
        for (std::size_t d : {1, 3, 6}) {
          ++seed;
          std::vector<Matrix> maps;
          for (std::size_t r = 0; r < c; ++r)
            maps.push_back(random_matrix(d, s, seed * 10 + r));
          const Filter f = random_filter(c, d, l, seed * 17);
          const Matrix got = wide_conv_multichannel(maps, f, Nonlin::tanh);
          const Matrix want = naive_wide_conv(maps, f, Nonlin::tanh);
          REQUIRE(got.rows() == s + l - 1);
          CHECK(sub(got, want).max_abs() < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("translation covariance under a leading zero column") {
  const std::size_t d = 3, s = 5, l = 3;
  const Matrix h = random_matrix(d, s, 51);
  Matrix shifted(d, s + 1);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < s; ++j) shifted(i, j + 1) = h(i, j);
  const Filter f = random_filter(1, d, l, 52);
  const Matrix base = wide_conv(h, f, Nonlin::identity);
  const Matrix moved = wide_conv(shifted, f, Nonlin::identity);
  REQUIRE(moved.rows() == base.rows() + 1);
  for (std::size_t k = 0; k < base.rows(); ++k) {
    CHECK(moved(k + 1, 0) == doctest::Approx(base(k, 0)).epsilon(1e-12));
  }
  // the new leading entry sees only padding
  CHECK(moved(0, 0) == doctest::Approx(f.bias).epsilon(1e-12));
  // pooled value is shift-invariant when the max beats the all-padding entry
  if (max_over_time(base) >= f.bias) {
    CHECK(max_over_time(moved) ==
          doctest::Approx(max_over_time(base)).epsilon(1e-12));
  }
}

TEST_CASE("max_over_time basics") {
  CHECK(max_over_time(Matrix::column({1, 5, 3})) == 5);
  CHECK(max_over_time(Matrix::column({2, 2, 2})) == 2);
  CHECK_THROWS_AS(max_over_time(Matrix()), DomainError);

  // permutation invariance
  CHECK(max_over_time(Matrix::column({3, 1, 5})) ==
        max_over_time(Matrix::column({5, 3, 1})));
}

TEST_CASE("rowmax ties route gradient to the first index") {
  Tape t;
  Matrix v(1, 3);
  v.fill(2.0);
  NodeId p = t.parameter(v);
  NodeId m = ag::rowmax(t, p);
  CHECK(t.value(m)(0, 0) == 2.0);
  t.backward(ag::sum(t, m));
  const Matrix& g = t.grad_view(p);
  CHECK(g(0, 0) == 1.0);
  CHECK(g(0, 1) == 0.0);
  CHECK(g(0, 2) == 0.0);
}

TEST_CASE("filter bank size and ordering") {
  FilterBank bank = make_filter_bank({{3, 100}, {4, 100}, {5, 100}}, 2, 6,
                                     Nonlin::relu, 99);
  CHECK(bank.total_filters() == 300);
  std::vector<Matrix> maps = {random_matrix(6, 8, 1), random_matrix(6, 8, 2)};
  const Matrix pooled = bank_apply(maps, bank);
  CHECK(pooled.rows() == 300);
}

TEST_CASE("bank with one filter matches the composed operations") {
  FilterBank bank =
      make_filter_bank({{2, 1}}, 1, 3, Nonlin::relu, 7, 0.5);
  const Matrix h = random_matrix(3, 5, 8);
  const Matrix pooled = bank_apply({h}, bank);
  REQUIRE(pooled.rows() == 1);
  const Filter f = bank_filter(bank, 0, 0);
  const double composed =
      max_over_time(wide_conv(h, f, bank.nonlinearity));
  CHECK(pooled(0, 0) == doctest::Approx(composed).epsilon(1e-12));
}

TEST_CASE("bank_apply matches per-filter composition across groups") {
  FilterBank bank = make_filter_bank({{2, 3}, {3, 2}}, 2, 4,
                                     Nonlin::tanh, 17, 0.5);
  std::vector<Matrix> maps = {random_matrix(4, 6, 18),
                              random_matrix(4, 6, 19)};
  const Matrix pooled = bank_apply(maps, bank);
  std::size_t at = 0;
  for (std::size_t g = 0; g < bank.groups.size(); ++g) {
    for (std::size_t idx = 0; idx < bank.groups[g].weights.rows(); ++idx) {
      const Filter f = bank_filter(bank, g, idx);
      const double composed = max_over_time(
          wide_conv_multichannel(maps, f, bank.nonlinearity));
      CHECK(pooled(at++, 0) == doctest::Approx(composed).epsilon(1e-12));
    }
  }
}

TEST_CASE("recorded bank matches the plain bank") {
  FilterBank bank = make_filter_bank({{2, 2}, {3, 2}}, 1, 3,
                                     Nonlin::relu, 23, 0.5);
  const Matrix h = random_matrix(3, 5, 24);
  Tape t;
  ag::BankNodes nodes = ag::bank_push(t, bank);
  NodeId pooled = ag::bank_apply_node(t, {t.constant(h)}, bank, nodes);
  CHECK(sub(t.value(pooled), bank_apply({h}, bank)).max_abs() == 0.0);
}

TEST_CASE("gradient of bank_apply matches finite differences") {
  FilterBank bank = make_filter_bank({{2, 2}, {3, 2}}, 2, 3,
                                     Nonlin::tanh, 31, 0.5);
  Matrix h0 = random_matrix(3, 5, 32);
  Matrix h1 = random_matrix(3, 5, 33);
  const Matrix w = random_matrix(4, 1, 34);

  Tape t;
  ag::BankNodes nodes = ag::bank_push(t, bank);
  NodeId i0 = t.parameter(h0), i1 = t.parameter(h1);
  NodeId pooled = ag::bank_apply_node(t, {i0, i1}, bank, nodes);
  NodeId loss = ag::sum(t, ag::hadamard(t, pooled, t.constant(w)));
  t.backward(loss);

  std::vector<Matrix*> storage = {&h0, &h1};
  std::vector<const Matrix*> grads = {&t.grad_view(i0), &t.grad_view(i1)};
  for (std::size_t g = 0; g < bank.groups.size(); ++g) {
    storage.push_back(&bank.groups[g].weights);
    grads.push_back(&t.grad_view(nodes.weights[g]));
    storage.push_back(&bank.groups[g].bias);
    grads.push_back(&t.grad_view(nodes.bias[g]));
  }
  auto loss_fn = [&] {
    return sum(hadamard(bank_apply({h0, h1}, bank), w));
  };
  CHECK(testutil::max_fd_rel_err(storage, loss_fn, grads) < 1e-4);
}

TEST_CASE("convolution error contracts") {
  const Matrix h = random_matrix(2, 3, 41);
  Filter f = random_filter(1, 2, 2, 42);
  f.window = 0;
  f.weights = Matrix(2, 0);
  CHECK_THROWS_AS(wide_conv(h, f), DomainError);

  const Filter two = random_filter(2, 2, 2, 43);
  CHECK_THROWS_AS(wide_conv_multichannel({h}, two), DimensionError);
  CHECK_THROWS_AS(wide_conv(h, two), DimensionError);

  const Filter ok = random_filter(1, 2, 2, 44);
  CHECK_THROWS_AS(wide_conv(random_matrix(5, 3, 45), ok), DimensionError);
}
