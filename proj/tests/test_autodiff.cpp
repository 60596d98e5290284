#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "medrep/autodiff.hpp"
#include "medrep/errors.hpp"
#include "medrep/gradcheck.hpp"
#include "medrep/lstm.hpp"
#include "medrep/optim.hpp"
#include "medrep/rng.hpp"
#include "support.hpp"

using namespace medrep;
using medrep::test::formula;
using medrep::test::formula_vector;
using medrep::test::random_matrix;

TEST_CASE("matmul") {
  ad::Tape tape;
  const Tensor eye = Tensor::matrix({{1, 0}, {0, 1}});
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(ad::matmul(tape.constant(eye), tape.constant(m)).value() == m);

  const auto r = ad::matmul(tape.constant(Tensor::matrix({{1, 2}})),
                            tape.constant(Tensor::matrix({{3}, {4}})));
  CHECK(r.value().item() == 11.0);

  CHECK_THROWS_AS(ad::matmul(tape.constant(Tensor::matrix({{1, 2}})),
                             tape.constant(Tensor::matrix({{1, 2}}))),
                  ShapeError);
  try {
    ad::matmul(tape.constant(Tensor::zeros({2, 3})), tape.constant(Tensor::zeros({2, 3})));
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("matmul gradient of sum(A*B) matches finite differences") {
  Rng rng(11);
  Tensor a = random_matrix(3, 3, rng), b = random_matrix(3, 3, rng);
  Tensor* params[] = {&a, &b};
  const auto r = check_gradients(params, [&](ad::Tape& t) {
    return ad::sum(ad::matmul(t.parameter(a), t.parameter(b)));
  });
  CHECK(r.checked_scalars == 18);
  CHECK(r.max_relative_error < 1e-6);
}

TEST_CASE("elementwise examples") {
  ad::Tape tape;
  CHECK(ad::sigmoid(tape.constant(Tensor::scalar(0))).value().item() == 0.5);

  Tensor zero = Tensor::scalar(0.0);
  zero.track();
  const ad::Var t = ad::tanh(tape.parameter(zero));
  CHECK(t.value().item() == 0.0);
  Tensor* p[] = {&zero};
  ad::backward(t, p);
  CHECK(zero.grad()[0] == 1.0);

  const auto m = ad::mul(tape.constant(Tensor::vector({1, 2, 3})),
                         tape.constant(Tensor::vector({0, 0, 0})));
  CHECK(m.value() == Tensor::vector({0, 0, 0}));

  CHECK_THROWS_AS(ad::add(tape.constant(Tensor::vector({1, 2})),
                          tape.constant(Tensor::vector({1, 2, 3}))),
                  ShapeError);
  CHECK_THROWS_AS(ad::elementwise(ad::ElementwiseOp::kMul, tape.constant(Tensor::vector({1}))),
                  Error);
}

TEST_CASE("sigmoid derivative is s(1-s)") {
  Tensor x = Tensor::vector({-2.0, 0.3, 4.0});
  x.track();
  ad::Tape tape;
  const ad::Var s = ad::sigmoid(tape.parameter(x));
  Tensor* p[] = {&x};
  ad::backward(ad::sum(s), p);
  for (std::size_t i = 0; i < 3; ++i) {
    const double v = s.value()[i];
    CHECK(x.grad()[i] == doctest::Approx(v * (1 - v)).epsilon(1e-15));
  }
}

TEST_CASE("softmax_nll") {
  ad::Tape tape;
  SUBCASE("uniform logits over V=4007 give ln 4007") {
    const auto loss = ad::softmax_nll(tape.constant(Tensor::zeros({1, 4007})), 17);
    CHECK(loss.value().item() == doctest::Approx(std::log(4007.0)).epsilon(1e-14));
    CHECK(loss.value().item() == doctest::Approx(8.2958).epsilon(1e-5));
  }
  SUBCASE("no overflow at [1000, 0]") {
    const auto loss = ad::softmax_nll(tape.constant(Tensor::matrix({{1000, 0}})), 0);
    CHECK(std::isfinite(loss.value().item()));
    CHECK(loss.value().item() == doctest::Approx(0.0));
    const auto other = ad::softmax_nll(tape.constant(Tensor::matrix({{1000, 0}})), 1);
    CHECK(other.value().item() == doctest::Approx(1000.0));
  }
  SUBCASE("extended-precision oracle") {
    // tests/oracles/model_oracle.py, 40-digit evaluation.
    const auto loss = ad::softmax_nll(
        tape.constant(Tensor::matrix({{1.3, -0.7, 2.2, 0.05, -1.9}})), 2);
    CHECK(std::abs(loss.value().item() - 0.46665409642638040847) < 1e-14);
  }
  SUBCASE("target out of range") {
    CHECK_THROWS_AS(ad::softmax_nll(tape.constant(Tensor::matrix({{1, 2}})), 2), IndexError);
    CHECK_THROWS_AS(ad::softmax_nll(tape.constant(Tensor::matrix({{1, 2}})), -3), IndexError);
  }
  SUBCASE("gradient is softmax - onehot") {
    Tensor z = Tensor::matrix({{0.5, -1.0, 2.0}});
    z.track();
    ad::Tape t;
    Tensor* p[] = {&z};
    ad::backward(ad::softmax_nll(t.parameter(z), 1), p);
    const double total = std::exp(0.5) + std::exp(-1.0) + std::exp(2.0);
    CHECK(z.grad()[0] == doctest::Approx(std::exp(0.5) / total));
    CHECK(z.grad()[1] == doctest::Approx(std::exp(-1.0) / total - 1.0));
    CHECK(z.grad()[2] == doctest::Approx(std::exp(2.0) / total));
  }
  SUBCASE("ignored rows contribute nothing") {
    const Tensor logits = Tensor::matrix({{1, 2, 3}, {3, 1, 2}});
    const std::int32_t targets[] = {2, ad::kIgnoreTarget};
    const auto both = ad::softmax_nll(tape.constant(logits), targets);
    const auto first = ad::softmax_nll(tape.constant(Tensor::matrix({{1, 2, 3}})), 2);
    CHECK(both.value().item() == first.value().item());
  }
}

TEST_CASE("softmax sums to one with entries in (0,1)") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    std::vector<double> z(n);
    for (double& v : z) v = rng.uniform(-30, 30);
    const auto lp = log_softmax(z);
    double total = 0.0;
    for (const double v : lp) {
      const double p = std::exp(v);
      CHECK(p > 0.0);
      CHECK(p <= 1.0);
      total += p;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("lstm_step examples") {
  SUBCASE("all-zero params and state give zero output") {
    const auto p = LstmCellParams::zeros(3, 4);
    const std::vector<double> x(3, 0.0), h(4, 0.0), c(4, 0.0);
    const auto [h2, c2] = lstm_step(x, h, c, p);
    for (const double v : h2) CHECK(v == 0.0);
    for (const double v : c2) CHECK(v == 0.0);
  }
  SUBCASE("hand-weight D=1, H=2 case") {
    const LstmCellParams p{formula(8, 1, 0), formula(8, 2, 1), formula_vector(8, 2)};
    const auto [h2, c2] = lstm_step(std::vector<double>{0.5}, std::vector<double>{0.1, -0.2},
                                    std::vector<double>{0.3, 0.1}, p);
    // tests/oracles/model_oracle.py
    CHECK(std::abs(h2[0] - 0.10157432986162091833) < 1e-12);
    CHECK(std::abs(h2[1] - 0.10186800717532657686) < 1e-12);
    CHECK(std::abs(c2[0] - 0.19565171174537837022) < 1e-12);
    CHECK(std::abs(c2[1] - 0.25170558137197882585) < 1e-12);
  }
  SUBCASE("dimension mismatch") {
    const auto p = LstmCellParams::zeros(3, 2);
    CHECK_THROWS_AS(lstm_step(std::vector<double>(2), std::vector<double>(2),
                              std::vector<double>(2), p),
                    ShapeError);
    CHECK_THROWS_AS(lstm_step(std::vector<double>(3), std::vector<double>(3),
                              std::vector<double>(2), p),
                    ShapeError);
  }
  SUBCASE("deterministic to the bit") {
    Rng rng(3);
    const auto p = LstmCellParams::glorot(4, 3, rng);
    const std::vector<double> x{0.1, 0.2, -0.3, 0.4}, h{0.5, -0.5, 0.1}, c{0.0, 0.2, -0.1};
    CHECK(lstm_step(x, h, c, p) == lstm_step(x, h, c, p));
  }
  SUBCASE("glorot init: forget bias 1, other biases 0, weights in range") {
    Rng rng(9);
    const auto p = LstmCellParams::glorot(5, 3, rng);
    for (std::size_t i = 0; i < 12; ++i) CHECK(p.bias[i] == (i >= 3 && i < 6 ? 1.0 : 0.0));
    const double a = std::sqrt(6.0 / (12 + 5));
    for (const double v : p.input_weights.values()) CHECK(std::abs(v) <= a);
  }
}

TEST_CASE("lstm_step gradient of sum(h') matches finite differences") {
  Rng rng(21);
  auto p = LstmCellParams::glorot(3, 2, rng);
  Tensor x = random_matrix(1, 3, rng), h = random_matrix(1, 2, rng), c = random_matrix(1, 2, rng);
  Tensor* params[] = {&p.input_weights, &p.hidden_weights, &p.bias, &x, &h, &c};
  const auto r = check_gradients(params, [&](ad::Tape& t) {
    return ad::sum(lstm_step(t.parameter(x), {t.parameter(h), t.parameter(c)}, p).h);
  });
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("backward examples") {
  SUBCASE("constant loss leaves grads at zero") {
    Tensor w = Tensor::matrix({{1, 2}, {3, 4}});
    w.track();
    ad::Tape tape;
    tape.parameter(w);
    const ad::Var loss = ad::sum(tape.constant(Tensor::vector({1, 2, 3})));
    Tensor* p[] = {&w};
    ad::backward(loss, p);
    for (const double g : w.grad()) CHECK(g == 0.0);
  }
  SUBCASE("sum(W x) gives outer(1, x)") {
    Tensor w = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
    w.track();
    ad::Tape tape;
    const Tensor x = Tensor::matrix({{7}, {8}, {9}});
    Tensor* p[] = {&w};
    ad::backward(ad::sum(ad::matmul(tape.parameter(w), tape.constant(x))), p);
    CHECK(medrep::test::values(Tensor(w.shape(), {w.grad().begin(), w.grad().end()})) ==
          std::vector<double>{7, 8, 9, 7, 8, 9});
  }
  SUBCASE("repeated calls accumulate") {
    Tensor w = Tensor::vector({1, 2});
    w.track();
    Tensor* p[] = {&w};
    for (int i = 0; i < 3; ++i) {
      ad::Tape tape;
      ad::backward(ad::sum(ad::scale(tape.parameter(w), 2.0)), p);
    }
    CHECK(w.grad()[0] == 6.0);
    CHECK(w.grad()[1] == 6.0);
  }
  SUBCASE("non-scalar loss is a contract error") {
    ad::Tape tape;
    CHECK_THROWS_AS(tape.backward(tape.constant(Tensor::vector({1, 2}))), ContractError);
  }
  SUBCASE("unused parameter keeps an exactly zero grad") {
    Tensor used = Tensor::vector({0.3, 0.7}), unused = Tensor::vector({1.0, -1.0});
    used.track();
    unused.track();
    ad::Tape tape;
    tape.parameter(unused);
    Tensor* p[] = {&used, &unused};
    ad::backward(ad::sum(ad::tanh(tape.parameter(used))), p);
    CHECK(unused.grad()[0] == 0.0);
    CHECK(unused.grad()[1] == 0.0);
    CHECK(used.grad()[0] != 0.0);
  }
}

TEST_CASE("check_gradients") {
  SUBCASE("stencils on a cubic") {
    // d/dx x^3 = 3x^2; the two-point rule is off by exactly eps^2, the
    // five-point rule is exact for polynomials up to degree 4.
    Tensor x = Tensor::matrix({{1.0}});
    Tensor* p[] = {&x};
    const auto cube = [&](ad::Tape& t) {
      const ad::Var v = t.parameter(x);
      return ad::sum(ad::mul(ad::mul(v, v), v));
    };
    const auto two = check_gradients(p, cube, 1e-2);
    CHECK(two.max_absolute_error == doctest::Approx(1e-4).epsilon(1e-6));
    const auto five = check_gradients(p, cube, 1e-2, FdStencil::kFivePoint);
    CHECK(five.max_absolute_error < 1e-12);
  }
  SUBCASE("quadratic ||W||^2") {
    Tensor w = Tensor::matrix({{0.5, -1.5}, {2.0, 0.25}});
    Tensor* p[] = {&w};
    const auto r = check_gradients(p, [&](ad::Tape& t) {
      const ad::Var v = t.parameter(w);
      return ad::sum(ad::mul(v, v));
    });
    CHECK(r.max_relative_error < 1e-8);
  }
  SUBCASE("lstm chain of length 3") {
    Rng rng(4);
    auto cell = LstmCellParams::glorot(2, 3, rng);
    Tensor xs = random_matrix(3, 2, rng);
    Tensor* p[] = {&cell.input_weights, &cell.hidden_weights, &cell.bias, &xs};
    const auto r = check_gradients(p, [&](ad::Tape& t) {
      const ad::Var x = t.parameter(xs);
      LstmState st = zero_state(t, 1, 3);
      for (std::size_t i = 0; i < 3; ++i) {
        // Row i of xs as a 1x2 input: mask the other rows, then sum rows.
        std::vector<double> mask(3, 0.0);
        mask[i] = 1.0;
        const ad::Var weighted = ad::scale_rows(x, mask);
        const ad::Var xi = ad::matmul(t.constant(Tensor::matrix({{1.0, 1.0, 1.0}})), weighted);
        st = lstm_step(xi, st, cell);
      }
      return ad::sum(st.h);
    });
    CHECK(r.max_relative_error < 1e-4);
  }
  SUBCASE("dropout makes the loss non-deterministic") {
    Tensor w = Tensor::matrix({{0.5, -1.5, 0.2, 0.9}});
    Rng rng(1);
    Tensor* p[] = {&w};
    CHECK_THROWS_AS(check_gradients(p,
                                    [&](ad::Tape& t) {
                                      return ad::sum(ad::dropout(t.parameter(w), 0.5, rng));
                                    }),
                    ContractError);
  }
  SUBCASE("eps must be positive") {
    Tensor w = Tensor::scalar(1.0);
    Tensor* p[] = {&w};
    CHECK_THROWS_AS(check_gradients(p, [&](ad::Tape& t) { return t.parameter(w); }, 0.0),
                    ContractError);
  }
}

TEST_CASE("sgd_step") {
  SUBCASE("lr = 0 leaves params unchanged") {
    Tensor w = Tensor::vector({1.0, 2.0});
    w.track();
    w.grad()[0] = 5.0;
    Tensor* p[] = {&w};
    sgd_step(p, 0.0);
    CHECK(w == Tensor::vector({1.0, 2.0}));
  }
  SUBCASE("p=1, grad=2, lr=0.1 gives 0.8 and resets grad") {
    Tensor w = Tensor::scalar(1.0);
    w.track();
    w.grad()[0] = 2.0;
    Tensor* p[] = {&w};
    sgd_step(p, 0.1);
    CHECK(w.item() == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(w.grad()[0] == 0.0);
  }
  SUBCASE("one step on a convex quadratic decreases the loss") {
    Tensor w = Tensor::matrix({{1.0, -2.0}, {0.5, 3.0}});
    const Tensor target = Tensor::matrix({{0.0, 1.0}, {1.0, 0.0}});
    w.track();
    const auto loss_of = [&](ad::Tape& t) {
      const ad::Var d = ad::add(t.parameter(w), ad::scale(t.constant(target), -1.0));
      return ad::sum(ad::mul(d, d));
    };
    ad::Tape t0;
    const ad::Var before = loss_of(t0);
    Tensor* p[] = {&w};
    ad::backward(before, p);
    sgd_step(p, 0.01);
    ad::Tape t1;
    CHECK(loss_of(t1).value().item() < before.value().item());
  }
  SUBCASE("untracked tensors are skipped") {
    Tensor w = Tensor::scalar(1.0);
    Tensor* p[] = {&w};
    sgd_step(p, 0.5);
    CHECK(w.item() == 1.0);
  }
}

TEST_CASE("adam moves against the gradient") {
  Tensor w = Tensor::vector({1.0, -1.0});
  w.track();
  w.grad()[0] = 3.0;
  w.grad()[1] = -0.5;
  Adam adam;
  Tensor* p[] = {&w};
  adam.step(p);
  // First bias-corrected step is lr * sign(g) up to eps.
  CHECK(w[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-9));
  CHECK(w[1] == doctest::Approx(-1.0 + 0.001).epsilon(1e-9));
  CHECK(w.grad()[0] == 0.0);
  CHECK(adam.steps_taken() == 1);
}

TEST_CASE("dropout") {
  Rng rng(7);
  ad::Tape tape;
  const ad::Var x = tape.constant(Tensor::matrix(1, 1000, std::vector<double>(1000, 1.0)));
  CHECK(ad::dropout(x, 0.0, rng).id() == x.id());
  const ad::Var d = ad::dropout(x, 0.25, rng);
  std::size_t kept = 0;
  for (const double v : d.value().values()) {
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15));
    kept += v != 0.0;
  }
  CHECK(kept > 650);
  CHECK(kept < 850);
  CHECK_THROWS_AS(ad::dropout(x, 1.0, rng), ContractError);
  CHECK_THROWS_AS(ad::dropout(x, -0.1, rng), ContractError);
}

// Every differentiable op against central differences on random shapes
// (each dimension 1..8), 100 seeds.
TEST_CASE("finite-difference property over all ops, 100 seeds") {
  using Builder = std::function<ad::Var(ad::Tape&, Rng&)>;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto dim = [&rng] { return static_cast<std::size_t>(1 + rng.below(8)); };
    const std::size_t m = dim(), n = dim(), k = dim();
    Tensor a = random_matrix(m, n, rng), b = random_matrix(m, n, rng);
    Tensor c = random_matrix(n, k, rng), d = random_matrix(k, n, rng);
    Tensor bias = Tensor::vector(medrep::test::values(random_matrix(1, n, rng)));
    Tensor weights = random_matrix(m, n, rng);  // fixed mixing weights for the loss
    std::vector<std::int32_t> ids(m), targets(m);
    std::vector<char> take(m);
    std::vector<double> factors(m);
    for (std::size_t r = 0; r < m; ++r) {
      ids[r] = static_cast<std::int32_t>(rng.below(k));
      targets[r] = rng.below(4) == 0 ? ad::kIgnoreTarget : static_cast<std::int32_t>(rng.below(n));
      take[r] = static_cast<char>(rng.below(2));
      factors[r] = rng.uniform(-2, 2);
    }
    const std::size_t begin = rng.below(n), count = 1 + rng.below(n - begin);
    const std::uint64_t dropout_seed = rng.next();
    const std::size_t h = 1 + rng.below(4);
    Rng cell_rng(seed + 1000);
    auto cell = LstmCellParams::glorot(n, h, cell_rng);
    Tensor h0 = random_matrix(m, h, rng), c0 = random_matrix(m, h, rng);

    // Weighted sum so that every output element carries a distinct adjoint.
    const auto mix = [&](ad::Tape& t, ad::Var v) {
      if (v.value().shape() == weights.shape()) return ad::sum(ad::mul(v, t.constant(weights)));
      return ad::sum(ad::mul(v, v));
    };
    const std::vector<std::pair<const char*, Builder>> ops = {
        {"add", [&](ad::Tape& t, Rng&) { return mix(t, ad::add(t.parameter(a), t.parameter(b))); }},
        {"mul", [&](ad::Tape& t, Rng&) { return mix(t, ad::mul(t.parameter(a), t.parameter(b))); }},
        {"sigmoid", [&](ad::Tape& t, Rng&) { return mix(t, ad::sigmoid(t.parameter(a))); }},
        {"tanh", [&](ad::Tape& t, Rng&) { return mix(t, ad::tanh(t.parameter(a))); }},
        {"scale", [&](ad::Tape& t, Rng&) { return mix(t, ad::scale(t.parameter(a), -1.7)); }},
        {"matmul", [&](ad::Tape& t, Rng&) { return mix(t, ad::matmul(t.parameter(a), t.parameter(c))); }},
        {"matmul_nt", [&](ad::Tape& t, Rng&) { return mix(t, ad::matmul_nt(t.parameter(a), t.parameter(d))); }},
        {"add_bias", [&](ad::Tape& t, Rng&) { return mix(t, ad::add_bias(t.parameter(a), t.parameter(bias))); }},
        {"concat_cols", [&](ad::Tape& t, Rng&) {
           return mix(t, ad::concat_cols(std::vector<ad::Var>{t.parameter(a), t.parameter(b)}));
         }},
        {"slice_cols", [&](ad::Tape& t, Rng&) { return mix(t, ad::slice_cols(t.parameter(a), begin, count)); }},
        {"gather_cols", [&](ad::Tape& t, Rng&) { return mix(t, ad::gather_cols(t.parameter(c), ids)); }},
        {"select_rows", [&](ad::Tape& t, Rng&) {
           return mix(t, ad::select_rows(take, t.parameter(a), t.parameter(b)));
         }},
        {"scale_rows", [&](ad::Tape& t, Rng&) { return mix(t, ad::scale_rows(t.parameter(a), factors)); }},
        {"dropout", [&](ad::Tape& t, Rng&) {
           Rng fixed(dropout_seed);  // same mask every evaluation
           return mix(t, ad::dropout(t.parameter(a), 0.3, fixed));
         }},
        {"softmax_nll", [&](ad::Tape& t, Rng&) { return ad::softmax_nll(t.parameter(a), targets); }},
        {"lstm_step", [&](ad::Tape& t, Rng&) {
           const LstmState s = lstm_step(t.parameter(a), {t.parameter(h0), t.parameter(c0)}, cell);
           return ad::add(ad::sum(ad::mul(s.h, s.h)), ad::sum(s.c));
         }},
    };
    Tensor* params[] = {&a, &b, &c, &d, &bias, &cell.input_weights, &cell.hidden_weights,
                        &cell.bias, &h0, &c0};
    for (const auto& [name, build] : ops) {
      const auto r = check_gradients(params, [&](ad::Tape& t) { return build(t, rng); });
      INFO("op " << std::string(name) << " seed " << seed << " worst " << r.worst_param << "[" << r.worst_element << "]");
      // Saturated LSTM gates give gradients near 1e-9, below the relative
      // floor; there an absolute agreement of 1e-9 is the meaningful check.
      CHECK((r.max_relative_error < 1e-4 || r.max_absolute_error < 1e-9));
    }
  }
}
