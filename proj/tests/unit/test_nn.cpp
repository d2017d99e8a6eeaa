#include <doctest.h>

#include <cmath>
#include <numeric>

#include "../support/gradcheck.hpp"
#include "mdgan/error.hpp"
#include "mdgan/matrix.hpp"
#include "mdgan/nn/layers.hpp"
#include "mdgan/nn/loss.hpp"
#include "mdgan/nn/optimizer.hpp"
#include "mdgan/nn/serialize.hpp"
#include "mdgan/nn/stack.hpp"

using namespace mdgan;
using namespace mdgan::nn;
using mdgan::testing::check_stack;
using mdgan::testing::random_matrix;
using mdgan::testing::worst;

TEST_SUITE("nn") {

TEST_CASE("matrix products agree with explicit loops") {
  Rng rng(1);
  const Matrix a = random_matrix(3, 4, rng);
  const Matrix b = random_matrix(4, 2, rng);
  const Matrix c = matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
  }
  const Matrix at = random_matrix(4, 3, rng);
  const Matrix tn = matmul_tn(at, random_matrix(4, 2, rng));
  CHECK(tn.rows() == 3);
  CHECK(tn.cols() == 2);
  CHECK_THROWS_AS(matmul(a, a), ConfigError);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>(3)), ConfigError);
}

TEST_CASE("identity affine layer reproduces its input") {
  LayerStack s(3, 0);
  AffineLayer affine(3, 3);
  affine.weights() = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  s.add(affine);
  const Matrix x = Matrix::from_rows({{0.5, -2, 3}, {1, 1, 1}});
  CHECK(s.forward(x, Mode::eval) == x);
  CHECK(s.forward(x, Mode::train) == x);
}

TEST_CASE("activation values") {
  CHECK(Activation::leaky_relu(0.2).apply(-1.0) == doctest::Approx(-0.2));
  CHECK(Activation::leaky_relu(0.2).apply(2.0) == 2.0);
  CHECK(Activation::relu().apply(-3.0) == 0.0);
  CHECK(Activation::tanh().apply(0.0) == 0.0);
  const double big = Activation::tanh().apply(30.0);
  CHECK(big <= 1.0);
  CHECK(big > 0.99);
  CHECK(Activation::sigmoid().apply(0.0) == 0.5);
}

TEST_CASE("single affine layer: weight gradient is input^T times ones") {
  LayerStack s(2, 0);
  AffineLayer affine(2, 2);
  affine.weights() = Matrix::from_rows({{0.3, -0.1}, {0.2, 0.4}});
  s.add(affine);
  const Matrix x = Matrix::from_rows({{1, 2}, {3, 4}});
  s.forward(x, Mode::train);
  s.backward(Matrix(2, 2, 1.0));
  const auto params = s.parameters();
  // column sums of x repeated per output unit
  CHECK(*params[0].grad == Matrix::from_rows({{4, 4}, {6, 6}}));
  CHECK(*params[1].grad == Matrix::from_rows({{2, 2}}));
}

TEST_CASE("zero output gradient gives zero gradients") {
  LayerStack s(3, 5);
  s.add(AffineLayer(3, 4)).add(Activation::leaky_relu()).add(BatchNormLayer(4)).add(AffineLayer(4, 2));
  Rng rng(2);
  s.forward(random_matrix(5, 3, rng), Mode::train);
  const Matrix gin = s.backward(Matrix(5, 2));
  for (double v : gin.values()) CHECK(v == 0.0);
  for (const auto& p : s.parameters()) {
    for (double v : p.grad->values()) CHECK(v == 0.0);
  }
}

TEST_CASE("backward requires a preceding train or frozen forward") {
  LayerStack s(2, 0);
  s.add(AffineLayer(2, 2));
  CHECK_THROWS_AS(s.backward(Matrix(1, 2)), StateError);
  s.forward(Matrix(1, 2), Mode::eval);
  CHECK_THROWS_AS(s.backward(Matrix(1, 2)), StateError);
  s.forward(Matrix(1, 2), Mode::frozen);
  CHECK_NOTHROW(s.backward(Matrix(1, 2)));
  CHECK_THROWS_AS(s.backward(Matrix(1, 2)), StateError);
}

TEST_CASE("forward validates its input") {
  LayerStack s(2, 0);
  s.add(AffineLayer(2, 3));
  CHECK_THROWS_AS(s.forward(Matrix(1, 3), Mode::eval), ConfigError);
  Matrix bad(1, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(s.forward(bad, Mode::eval), ConfigError);
  CHECK_THROWS_AS(s.add(AffineLayer(4, 1)), ConfigError);
}

TEST_CASE("gradient checks on random shapes") {
  Rng rng(42);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  std::uniform_int_distribution<std::size_t> batch(2, 7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = batch(rng), in = dim(rng), out = dim(rng);
    const Matrix w_out = random_matrix(n, out, rng);
    const Matrix w_in = random_matrix(n, in, rng);
    Matrix x = random_matrix(n, in, rng, -2, 2);
    testing::avoid_zero(x, 1e-3);

    SUBCASE("affine") {
      LayerStack s(in, trial);
      AffineLayer a(in, out);
      a.weights() = random_matrix(in, out, rng);
      a.bias() = random_matrix(1, out, rng);
      s.add(a);
      CHECK(worst(check_stack(s, x, w_out)) < 1e-4);
    }
    SUBCASE("activations") {
      for (auto act : {Activation::leaky_relu(0.2), Activation::relu(), Activation::tanh(), Activation::sigmoid()}) {
        LayerStack s(in, trial);
        s.add(act);
        CHECK(worst(check_stack(s, x, w_in)) < 1e-4);
      }
    }
    SUBCASE("dropout with a fixed mask") {
      LayerStack s(in, 100 + trial);
      s.add(DropoutLayer(0.3));
      CHECK(worst(check_stack(s, x, w_in)) < 1e-4);
    }
    SUBCASE("batch norm in train mode") {
      LayerStack s(in, trial);
      BatchNormLayer bn(in);
      bn.gamma() = random_matrix(1, in, rng, 0.5, 1.5);
      bn.beta() = random_matrix(1, in, rng);
      s.add(bn);
      CHECK(worst(check_stack(s, x, w_in)) < 1e-4);
    }
  }
}

TEST_CASE("dropout: eval and rate 0 are identities, train mode is inverted dropout") {
  Rng rng(3);
  const Matrix x = random_matrix(50, 40, rng);
  LayerStack eval_net(40, 1);
  eval_net.add(DropoutLayer(0.5));
  CHECK(eval_net.forward(x, Mode::eval) == x);
  LayerStack zero(40, 1);
  zero.add(DropoutLayer(0.0));
  CHECK(zero.forward(x, Mode::train) == x);

  LayerStack s(40, 9);
  s.add(DropoutLayer(0.25));
  const Matrix ones(200, 40, 1.0);
  const Matrix y = s.forward(ones, Mode::train);
  std::size_t dropped = 0;
  for (double v : y.values()) {
    if (v == 0.0) {
      ++dropped;
    } else {
      CHECK(v == doctest::Approx(1.0 / 0.75));
    }
  }
  CHECK(static_cast<double>(dropped) / y.size() == doctest::Approx(0.25).epsilon(0.1));
  CHECK_THROWS_AS(DropoutLayer(1.0), ConfigError);
}

TEST_CASE("batch norm normalizes batches and updates running stats only in train mode") {
  Rng rng(4);
  for (std::size_t n : {8u, 16u, 64u}) {
    BatchNormLayer bn(5);
    Matrix x = random_matrix(n, 5, rng, -3, 7);
    bn.forward(x, Mode::train, rng);
    const Matrix& z = bn.normalized();
    for (std::size_t c = 0; c < 5; ++c) {
      double mean = 0, var = 0;
      for (std::size_t r = 0; r < n; ++r) mean += z(r, c);
      mean /= n;
      for (std::size_t r = 0; r < n; ++r) var += (z(r, c) - mean) * (z(r, c) - mean);
      var /= n;
      CHECK(std::abs(mean) < 1e-6);
      CHECK(std::abs(var - 1) < 1e-4);
    }
  }
  BatchNormLayer bn(2);
  const Matrix x = Matrix::from_rows({{1, 10}, {3, 10}});
  bn.forward(x, Mode::frozen, rng);
  CHECK(bn.running_mean() == Matrix(1, 2, 0.0));
  CHECK(bn.running_var() == Matrix(1, 2, 1.0));
  bn.forward(x, Mode::eval, rng);
  CHECK(bn.running_mean() == Matrix(1, 2, 0.0));
  bn.forward(x, Mode::train, rng);
  CHECK(bn.running_mean()(0, 0) == doctest::Approx(0.2));
  CHECK(bn.running_mean()(0, 1) == doctest::Approx(1.0));
  CHECK(bn.running_var()(0, 0) == doctest::Approx(0.9 + 0.1 * 1.0));
  CHECK_THROWS_AS(bn.forward(Matrix(1, 2), Mode::train, rng), ConfigError);
}

TEST_CASE("eval forward is deterministic and batch independent") {
  LayerStack s(3, 11);
  s.add(AffineLayer(3, 4)).add(BatchNormLayer(4)).add(DropoutLayer(0.5)).add(Activation::tanh());
  Rng rng(5);
  s.forward(random_matrix(8, 3, rng), Mode::train);
  const Matrix x = random_matrix(6, 3, rng);
  const Matrix a = s.forward(x, Mode::eval);
  CHECK(a == s.forward(x, Mode::eval));
  const Matrix single = s.forward(select_rows(x, std::vector<std::size_t>{2}), Mode::eval);
  for (std::size_t c = 0; c < 4; ++c) CHECK(single(0, c) == a(2, c));
}

TEST_CASE("bce loss values and gradient") {
  const auto r = bce_loss(Matrix(1, 1, 0.5), Matrix(1, 1, 1.0));
  CHECK(r.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(r.value == doctest::Approx(0.6931).epsilon(1e-4));
  const auto perfect = bce_loss(Matrix::from_rows({{1.0}, {0.0}}), Matrix::from_rows({{1.0}, {0.0}}));
  CHECK(perfect.value == doctest::Approx(-std::log(1 - kProbabilityFloor)).epsilon(1e-6));
  CHECK(perfect.value < 1e-6);
  CHECK(std::isfinite(bce_loss(Matrix(1, 1, 0.0), Matrix(1, 1, 1.0)).value));

  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const Matrix p = random_matrix(5, 1, rng, 0.05, 0.95);
    Matrix t(5, 1);
    for (auto& v : t.values()) v = rng() % 2;
    CHECK(testing::check_loss(bce_loss, p, t) < 1e-4);
  }
  CHECK_THROWS_AS(bce_loss(Matrix(2, 1), Matrix(1, 1)), ConfigError);
}

TEST_CASE("mse loss values and gradient") {
  CHECK(mse_loss(Matrix::from_rows({{1, 1}}), Matrix::from_rows({{0, 0}})).value == 1.0);
  const Matrix x = Matrix::from_rows({{0.3, -0.2}});
  CHECK(mse_loss(x, x).value == 0.0);
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    const Matrix a = random_matrix(4, 3, rng), b = random_matrix(4, 3, rng);
    auto wrt_second = [](const Matrix& xp, const Matrix& xx) { return mse_loss(xx, xp); };
    CHECK(testing::check_loss(wrt_second, b, a) < 1e-4);
  }
  CHECK_THROWS_AS(mse_loss(Matrix(2, 2), Matrix(2, 3)), ConfigError);
}

TEST_CASE("sgd and adam single steps") {
  Matrix p(1, 1, 1.0), g(1, 1, 1.0);
  Matrix* ps[] = {&p};
  const Matrix* gs[] = {&g};
  Optimizer sgd(SgdSettings{0.01});
  sgd.step(ps, gs);
  CHECK(p(0, 0) == doctest::Approx(0.99).epsilon(1e-15));
  g(0, 0) = 0.0;
  sgd.step(ps, gs);
  CHECK(p(0, 0) == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(sgd.steps() == 2);

  Matrix q(1, 1, 1.0), h(1, 1, 1.0);
  Matrix* qs[] = {&q};
  const Matrix* hs[] = {&h};
  Optimizer adam(AdamSettings{});
  adam.step(qs, hs);
  // m_hat = v_hat = 1 after bias correction: delta = -lr * 1 / (1 + 1e-8)
  CHECK(q(0, 0) - 1.0 == doctest::Approx(-0.001 / (1 + 1e-8)).epsilon(1e-12));
  REQUIRE(adam.first_moments().size() == 1);
  CHECK(adam.first_moments()[0].rows() == 1);
  CHECK(adam.second_moments()[0](0, 0) == doctest::Approx(0.001));
  CHECK(adam.steps() == 1);

  Matrix wrong(2, 1);
  const Matrix* ws[] = {&wrong};
  CHECK_THROWS_AS(adam.step(qs, ws), ConfigError);
  CHECK_THROWS_AS(Optimizer(SgdSettings{-1.0}), ConfigError);
}

TEST_CASE("adam moments track parameter shapes through a layer stack") {
  LayerStack s(3, 1);
  s.add(AffineLayer(3, 5)).add(BatchNormLayer(5)).add(AffineLayer(5, 2));
  Optimizer adam(AdamSettings{});
  Rng rng(8);
  for (int i = 0; i < 3; ++i) {
    s.forward(random_matrix(4, 3, rng), Mode::train);
    s.backward(random_matrix(4, 2, rng));
    adam.step(s.parameters());
  }
  const auto params = s.parameters();
  REQUIRE(adam.first_moments().size() == params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(adam.first_moments()[i].same_shape(*params[i].value));
    CHECK(adam.second_moments()[i].same_shape(*params[i].value));
  }
  CHECK(adam.steps() == 3);
}

TEST_CASE("parameter serialization round-trips and rejects mismatches") {
  LayerStack s(3, 1);
  s.add(AffineLayer(3, 4)).add(BatchNormLayer(4)).add(Activation::relu()).add(AffineLayer(4, 3));
  Rng rng(9);
  for (auto& p : s.parameters()) p.value->values()[0] = 0.123456789012345678;
  s.forward(random_matrix(5, 3, rng), Mode::train);
  const std::string text = save_parameters(s);
  CHECK(text.find("mdgan-params") != std::string::npos);

  LayerStack t(3, 2);
  t.add(AffineLayer(3, 4)).add(BatchNormLayer(4)).add(Activation::relu()).add(AffineLayer(4, 3));
  load_parameters(t, text);
  CHECK(t.snapshot() == s.snapshot());

  LayerStack other(3, 2);
  other.add(AffineLayer(3, 2));
  CHECK_THROWS(load_parameters(other, text));
  CHECK_THROWS_AS(load_parameters(t, "{\"magic\": \"nope\"}"), ParseError);
}

}  // TEST_SUITE
