#include <doctest.h>

#include <cmath>

#include "chunkwise/attention.hpp"
#include "chunkwise/errors.hpp"
#include "chunkwise/matrix.hpp"
#include "helpers.hpp"

using namespace chunkwise;

TEST_CASE("matmul basics") {
  const Matrix a{{1, 2}, {3, 4}};
  CHECK(matmul(Matrix::identity(2), a) == a);
  const Matrix ones{{1}, {1}};
  CHECK(matmul(a, ones) == Matrix{{3}, {7}});
  CHECK_THROWS_AS(matmul(a, Matrix(3, 1)), ShapeError);
}

TEST_CASE("matmul matches triple loop") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = testutil::random_matrix(3, 4, rng);
    const Matrix b = testutil::random_matrix(4, 2, rng);
    CHECK(max_abs_diff(matmul(a, b), testutil::naive_matmul(a, b)) <= 1e-6f);
  }
}

TEST_CASE("row softmax") {
  CHECK(row_softmax(Matrix{{0, 0}}) == Matrix{{0.5f, 0.5f}});
  CHECK(row_softmax(Matrix{{123.0f}}) == Matrix{{1.0f}});

  const Matrix big = row_softmax(Matrix{{1000.0f, 0.0f}});
  CHECK(big.all_finite());
  CHECK(big(0, 0) == doctest::Approx(1.0));
  CHECK(big(0, 1) == doctest::Approx(std::exp(-1000.0)).epsilon(1e-30));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix m = testutil::random_matrix(4, 7, rng, 20.0f);
    const Matrix s = row_softmax(m);
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double sum = 0.0;
      for (float x : s.row(r)) sum += x;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
    for (float& x : m.data()) x += 3.0f;
    CHECK(max_abs_diff(row_softmax(m), s) <= 1e-7f);
  }
}

TEST_CASE("masked attention hand cases") {
  const Matrix one{{1.0f}};
  CHECK(masked_attention(one, one, Matrix{{7.0f}}, AttentionMask::all(1, 1)) == Matrix{{7.0f}});

  AttentionMask only_first(1, 2, false);
  only_first.set(0, 0, true);
  const Matrix v{{2, 3}, {5, 8}};
  CHECK(masked_attention(Matrix{{0.3f, 0.1f}}, Matrix{{1, 2}, {3, 4}}, v, only_first) == Matrix{{2, 3}});

  const Matrix mean = masked_attention(Matrix(2, 2), Matrix{{1, 2}, {3, 4}}, v, AttentionMask::all(2, 2));
  CHECK(mean(0, 0) == doctest::Approx(3.5));
  CHECK(mean(1, 1) == doctest::Approx(5.5));
}

TEST_CASE("masked attention errors") {
  const Matrix q(2, 3), k(4, 3), v(4, 2);
  CHECK_THROWS_AS(masked_attention(q, Matrix(4, 2), v, AttentionMask::all(2, 4)), ShapeError);
  CHECK_THROWS_AS(masked_attention(q, k, Matrix(3, 2), AttentionMask::all(2, 4)), ShapeError);
  CHECK_THROWS_AS(masked_attention(q, k, v, AttentionMask::all(2, 3)), ShapeError);
  AttentionMask m = AttentionMask::all(2, 4);
  for (std::size_t j = 0; j < 4; ++j) m.set(1, j, false);
  CHECK_THROWS_AS(masked_attention(q, k, v, m), ContractViolation);
}

TEST_CASE("all-attendable mask equals plain attention") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix q = testutil::random_matrix(5, 8, rng), k = testutil::random_matrix(6, 8, rng),
                 v = testutil::random_matrix(6, 3, rng);
    CHECK(max_abs_diff(masked_attention(q, k, v, AttentionMask::all(5, 6)), attention(q, k, v)) <= 1e-6f);
  }
}

TEST_CASE("masked keys and values cannot leak") {
  std::mt19937_64 rng(13);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix q = testutil::random_matrix(4, 6, rng);
    Matrix k = testutil::random_matrix(7, 6, rng), v = testutil::random_matrix(7, 5, rng);
    AttentionMask mask = AttentionMask::from_predicate(4, 7, [&](std::size_t, std::size_t) { return coin(rng); });
    for (std::size_t i = 0; i < 4; ++i) mask.set(i, i, true);
    const Matrix before = masked_attention(q, k, v, mask);
    // Perturb every masked (row, key) pair's data in turn and compare that row.
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 7; ++j) {
        if (mask.attendable(i, j)) continue;
        Matrix k2 = k, v2 = v;
        for (float& x : k2.row(j)) x += 100.0f;
        for (float& x : v2.row(j)) x = -x * 1e3f;
        const Matrix after = masked_attention(q, k2, v2, mask);
        for (std::size_t c = 0; c < after.cols(); ++c) CHECK(after(i, c) == before(i, c));
      }
    }
  }
}

TEST_CASE("attention weights rows are distributions") {
  std::mt19937_64 rng(17);
  const Matrix q = testutil::random_matrix(3, 4, rng), k = testutil::random_matrix(5, 4, rng);
  const Matrix w = attention_weights(q, k, AttentionMask::all(3, 5));
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0;
    for (float x : w.row(r)) s += x;
    CHECK(s == doctest::Approx(1.0));
  }
}

TEST_CASE("ensure_finite rejects NaN") {
  Matrix m(1, 2);
  m(0, 1) = NAN;
  CHECK_FALSE(m.all_finite());
  CHECK_THROWS_AS(ensure_finite(m, "test"), NumericError);
}
