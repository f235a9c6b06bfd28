#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "molt/gradcheck.hpp"
#include "molt/ops.hpp"
#include "support/test_util.hpp"

using namespace molt;

namespace {

// Runs the finite-difference suite for a scalar-valued graph builder over
// the store's tunable parameters.
double gradcheck(ParamStore& store, const std::function<DiffNode(Tape&)>& build) {
  return finite_diff_check(store, [&](Tape* grad_tape) {
    if (grad_tape) {
      DiffNode loss = build(*grad_tape);
      grad_tape->backward(loss);
      return loss.value()(0, 0);
    }
    Tape tape(&store);
    return build(tape).value()(0, 0);
  });
}

}  // namespace

TEST_CASE("matmul forward examples") {
  Tape tape;
  DiffNode eye = tape.constant(Matrix::identity(2));
  DiffNode x = tape.constant(Matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK(matmul(eye, x).value().bitwise_equal(x.value()));

  DiffNode a = tape.constant(Matrix(2, 2, {1, 2, 3, 4}));
  DiffNode ones = tape.constant(Matrix(2, 1, {1, 1}));
  Matrix out = matmul(a, ones).value();
  CHECK(out(0, 0) == 3.0);
  CHECK(out(1, 0) == 7.0);
}

TEST_CASE("matmul gradient matches finite differences") {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    Rng rng(seed);
    ParamStore store;
    store.add("a", test_util::random_matrix(3, 4, rng));
    store.add("b", test_util::random_matrix(4, 2, rng));
    const double err = gradcheck(store, [&](Tape& t) {
      return sum_entries(matmul(t.use_param("a"), t.use_param("b")));
    });
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("softmax_rows forward examples") {
  Tape tape;
  Matrix sym = softmax_rows(tape.constant(Matrix(1, 2, {0, 0}))).value();
  CHECK(sym(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sym(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

  Matrix two = softmax_rows(tape.constant(Matrix(1, 2, {std::log(2.0), 0}))).value();
  CHECK(two(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(two(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  Rng rng(9);
  Matrix y = softmax_rows(tape.constant(test_util::random_matrix(5, 7, rng, 3.0))).value();
  for (int i = 0; i < y.rows(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < y.cols(); ++j) {
      CHECK(y(i, j) > 0.0);
      sum += y(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax_rows gradient") {
  for (uint64_t seed : {4ull, 5ull, 6ull}) {
    Rng rng(seed);
    ParamStore store;
    store.add("x", test_util::random_matrix(3, 5, rng));
    Matrix weights = test_util::random_matrix(3, 5, rng);  // break symmetry of plain sums
    const double err = gradcheck(store, [&](Tape& t) {
      return sum_entries(hadamard(softmax_rows(t.use_param("x")), t.constant(weights)));
    });
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("layer_norm forward examples") {
  Tape tape;
  DiffNode gamma = tape.constant(Matrix::filled(1, 3, 1.0));
  DiffNode beta = tape.constant(Matrix::zeros(1, 3));
  Matrix c = layer_norm(tape.constant(Matrix::filled(1, 3, 4.2)), gamma, beta, 1e-5).value();
  for (int j = 0; j < 3; ++j) CHECK(std::fabs(c(0, j)) < 1e-6);

  DiffNode g2 = tape.constant(Matrix::filled(1, 2, 1.0));
  DiffNode b2 = tape.constant(Matrix::zeros(1, 2));
  Matrix h = layer_norm(tape.constant(Matrix(1, 2, {1, 3})), g2, b2, 1e-12).value();
  CHECK(h(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(h(0, 1) == doctest::Approx(1.0).epsilon(1e-9));

  Rng rng(21);
  DiffNode g9 = tape.constant(Matrix::filled(1, 9, 1.0));
  DiffNode b9 = tape.constant(Matrix::zeros(1, 9));
  Matrix y = layer_norm(tape.constant(test_util::random_matrix(4, 9, rng, 2.5)), g9, b9, 1e-10).value();
  for (int i = 0; i < y.rows(); ++i) {
    double mean = 0.0, var = 0.0;
    for (int j = 0; j < 9; ++j) mean += y(i, j);
    mean /= 9;
    for (int j = 0; j < 9; ++j) var += (y(i, j) - mean) * (y(i, j) - mean);
    var /= 9;
    CHECK(std::fabs(mean) < 1e-10);
    CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("layer_norm gradient (x, gamma, beta)") {
  for (uint64_t seed : {7ull, 8ull, 9ull}) {
    Rng rng(seed);
    ParamStore store;
    store.add("x", test_util::random_matrix(3, 4, rng));
    store.add("gamma", test_util::random_matrix(1, 4, rng, 0.5));
    store.add("beta", test_util::random_matrix(1, 4, rng, 0.5));
    Matrix weights = test_util::random_matrix(3, 4, rng);
    const double err = gradcheck(store, [&](Tape& t) {
      DiffNode y = layer_norm(t.use_param("x"), t.use_param("gamma"), t.use_param("beta"), 1e-5);
      return sum_entries(hadamard(y, t.constant(weights)));
    });
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("l2_normalize forward examples") {
  Tape tape;
  Matrix y = l2_normalize(tape.constant(Matrix(1, 2, {3, 4})), 1e-12).value();
  CHECK(y(0, 0) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(y(0, 1) == doctest::Approx(0.8).epsilon(1e-14));

  Matrix unit = l2_normalize(tape.constant(Matrix(1, 2, {1, 0})), 1e-12).value();
  CHECK(unit(0, 0) == 1.0);
  CHECK(unit(0, 1) == 0.0);

  Matrix zero = l2_normalize(tape.constant(Matrix::zeros(1, 5)), 1e-12).value();
  CHECK(zero.all_finite());
  CHECK(zero.max_abs() == 0.0);

  Rng rng(3);
  Matrix r = l2_normalize(tape.constant(test_util::random_matrix(1, 6, rng)), 1e-12).value();
  CHECK(r.frobenius_norm() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("l2_normalize gradient") {
  for (uint64_t seed : {10ull, 11ull, 12ull}) {
    Rng rng(seed);
    ParamStore store;
    store.add("x", test_util::random_matrix(1, 6, rng));
    Matrix weights = test_util::random_matrix(1, 6, rng);
    const double err = gradcheck(store, [&](Tape& t) {
      return sum_entries(hadamard(l2_normalize(t.use_param("x"), 1e-12), t.constant(weights)));
    });
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("sum_pool_stride examples") {
  Tape tape;
  Matrix a = sum_pool_stride(tape.constant(Matrix(1, 4, {1, 1, 1, 1})), 2).value();
  CHECK(a(0, 0) == 2.0);
  CHECK(a(0, 1) == 2.0);

  Matrix b = sum_pool_stride(tape.constant(Matrix(1, 4, {1, 2, 3, 4})), 2).value();
  CHECK(b(0, 0) == 3.0);
  CHECK(b(0, 1) == 7.0);

  Matrix ident = Matrix(1, 3, {5, 6, 7});
  CHECK(sum_pool_stride(tape.constant(ident), 1).value().bitwise_equal(ident));

  CHECK_THROWS_AS(sum_pool_stride(tape.constant(Matrix(1, 5, {1, 2, 3, 4, 5})), 2), ShapeError);
}

TEST_CASE("mean_pool_rows examples and gradient") {
  Tape tape;
  Matrix single = Matrix(1, 3, {1, 2, 3});
  CHECK(mean_pool_rows(tape.constant(single)).value().bitwise_equal(single));

  Matrix sym = mean_pool_rows(tape.constant(Matrix(2, 2, {0, 2, 2, 0}))).value();
  CHECK(sym(0, 0) == 1.0);
  CHECK(sym(0, 1) == 1.0);

  Rng rng(14);
  Matrix x = test_util::random_matrix(4, 3, rng);
  Matrix perm(4, 3);
  const int order[4] = {2, 0, 3, 1};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) perm(i, j) = x(order[i], j);
  // symmetric up to summation-order rounding
  CHECK(test_util::max_abs_diff(mean_pool_rows(tape.constant(x)).value(),
                                mean_pool_rows(tape.constant(perm)).value()) <= 1e-14);

  ParamStore store;
  store.add("x", test_util::random_matrix(5, 3, rng));
  Matrix weights = test_util::random_matrix(1, 3, rng);
  const double err = gradcheck(store, [&](Tape& t) {
    return sum_entries(hadamard(mean_pool_rows(t.use_param("x")), t.constant(weights)));
  });
  CHECK(err <= 1e-5);
}

TEST_CASE("elementwise and stacking gradients") {
  for (uint64_t seed : {13ull, 14ull, 15ull}) {
    Rng rng(seed);
    ParamStore store;
    store.add("a", test_util::random_matrix(2, 3, rng));
    store.add("b", test_util::random_matrix(2, 3, rng));
    store.add("r", test_util::random_matrix(1, 3, rng));
    const double err = gradcheck(store, [&](Tape& t) {
      DiffNode a = t.use_param("a");
      DiffNode b = t.use_param("b");
      DiffNode h = hadamard(add_scaled(a, 0.7, b, -1.3), add(a, b));
      DiffNode z = add_row_broadcast(scale(h, 0.5), t.use_param("r"));
      DiffNode rows = stack_rows({mean_pool_rows(z), t.use_param("r")});
      return sum_entries(matmul_nt(rows, rows));
    });
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("softmax cross-entropy: uniform logits give ln C") {
  Tape tape;
  for (int c : {2, 4, 7}) {
    DiffNode ce = softmax_cross_entropy(tape.constant(Matrix::filled(1, c, 0.37)), 1 % c);
    CHECK(ce.value()(0, 0) == doctest::Approx(std::log(static_cast<double>(c))).epsilon(1e-12));
  }
  CHECK_THROWS_AS(softmax_cross_entropy(tape.constant(Matrix::zeros(1, 3)), 3), ContractError);
}

TEST_CASE("cross-entropy gradients") {
  for (uint64_t seed : {16ull, 17ull, 18ull}) {
    Rng rng(seed);
    ParamStore store;
    store.add("z", test_util::random_matrix(1, 5, rng, 2.0));
    const double err = gradcheck(store, [&](Tape& t) {
      return softmax_cross_entropy(t.use_param("z"), 2);
    });
    CHECK(err <= 1e-5);

    const std::vector<uint8_t> bits = {1, 0, 1, 0, 0};
    const double err2 = gradcheck(store, [&](Tape& t) {
      return sigmoid_cross_entropy(t.use_param("z"), bits);
    });
    CHECK(err2 <= 1e-5);
  }
}

TEST_CASE("finite_diff_check on a plain sum is exact") {
  // Integer values and a power-of-two step keep every central difference
  // representable, so the all-ones gradient comes out with zero error.
  ParamStore store;
  Matrix p(3, 3);
  for (size_t i = 0; i < p.size(); ++i) p.data()[i] = static_cast<double>(i % 5);
  store.add("p", p);
  const double h = 0x1.0p-17;
  const double err = finite_diff_check(
      store,
      [&](Tape* grad_tape) {
        if (grad_tape) {
          DiffNode loss = sum_entries(grad_tape->use_param("p"));
          grad_tape->backward(loss);
          return loss.value()(0, 0);
        }
        Tape tape(&store);
        return sum_entries(tape.use_param("p")).value()(0, 0);
      },
      h);
  CHECK(err == 0.0);
}

TEST_CASE("frozen parameters are skipped by the checker and keep grads") {
  Rng rng(20);
  ParamStore store;
  store.add("w", test_util::random_matrix(2, 2, rng));
  store.add("frozen", test_util::random_matrix(2, 2, rng), /*frozen=*/true);
  const double err = gradcheck(store, [&](Tape& t) {
    return sum_entries(matmul(t.use_param("w"), t.use_param("frozen")));
  });
  CHECK(err <= 1e-6);
}

TEST_CASE("backward rejects non-scalar roots and wrong tapes") {
  ParamStore store;
  store.add("x", Matrix::filled(2, 2, 1.0));
  Tape tape(&store);
  DiffNode x = tape.use_param("x");
  CHECK_THROWS_AS(tape.backward(x), ContractError);
}
