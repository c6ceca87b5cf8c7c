#include <cmath>
#include <vector>

#include "chyvae/linalg.hpp"
#include "chyvae/rng.hpp"
#include "doctest.h"

using namespace chyvae;

namespace {

// Dense p x p multiply, independent of the library kernels.
SpdMatrix dense_mul(const SpdMatrix& a, const SpdMatrix& b) {
  SpdMatrix c(a.dim);
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < a.dim; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.dim; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

LowerTriangular random_lower(int p, RngStream& rng) {
  LowerTriangular l(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < i; ++j) l(i, j) = rng.next_gaussian();
    l(i, i) = 0.3 + rng.next_double();
  }
  return l;
}

// Gram of a random lower factor plus a ridge keeps instances well conditioned.
SpdMatrix random_spd(int p, RngStream& rng) {
  SpdMatrix s = random_lower(p, rng).gram();
  for (int i = 0; i < p; ++i) s(i, i) += 0.5;
  return s;
}

double frob(const SpdMatrix& m) {
  double acc = 0.0;
  for (double v : m.a) acc += v * v;
  return std::sqrt(acc);
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("cholesky identity and diagonal") {
  auto k3 = cholesky(SpdMatrix::identity(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(k3(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-14));

  auto kd = cholesky(SpdMatrix::diagonal({4.0, 9.0}));
  CHECK(kd(0, 0) == doctest::Approx(2.0));
  CHECK(kd(1, 1) == doctest::Approx(3.0));
  CHECK(kd(1, 0) == 0.0);
}

TEST_CASE("cholesky 2x2 reconstructs the input") {
  SpdMatrix s(2, {4, 2, 2, 3});
  auto k = cholesky(s);
  CHECK(k(0, 0) == doctest::Approx(2.0));
  CHECK(k(1, 0) == doctest::Approx(1.0));
  CHECK(k(1, 1) == doctest::Approx(std::sqrt(2.0)));
  SpdMatrix back = k.gram();
  CHECK(frobenius_distance(back, s) <= 1e-10 * frob(s));
}

TEST_CASE("cholesky rejects non positive definite input") {
  SpdMatrix s(2, {1, 2, 2, 1});  // eigenvalues 3 and -1
  CHECK_THROWS_AS(cholesky(s), NotPositiveDefinite);
}

TEST_CASE("cholesky of K K^T reproduces K") {
  RngStream rng(11);
  for (int p : {1, 2, 4, 7}) {
    for (int rep = 0; rep < 20; ++rep) {
      auto k = random_lower(p, rng);
      auto back = cholesky(k.gram());
      for (int i = 0; i < p; ++i)
        for (int j = 0; j <= i; ++j) CHECK(back(i, j) == doctest::Approx(k(i, j)).epsilon(1e-9));
    }
  }
}

TEST_CASE("log_det_spd") {
  CHECK(log_det_spd(SpdMatrix::identity(5)) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(log_det_spd(SpdMatrix::diagonal({4, 9})) == doctest::Approx(std::log(36.0)));
  // scaling law: |c I_p| = c^p
  for (double c : {0.5, 3.0}) {
    SpdMatrix m = SpdMatrix::identity(4).scaled(c);
    CHECK(log_det_spd(m) == doctest::Approx(4.0 * std::log(c)).epsilon(1e-12));
  }
}

TEST_CASE("log_det of block diagonal adds") {
  RngStream rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    auto a = random_spd(3, rng);
    auto b = random_spd(2, rng);
    SpdMatrix block(5);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) block(i, j) = a(i, j);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) block(3 + i, 3 + j) = b(i, j);
    CHECK(log_det_spd(block) == doctest::Approx(log_det_spd(a) + log_det_spd(b)).epsilon(1e-11));
  }
}

TEST_CASE("spd_inverse") {
  auto i3 = spd_inverse(SpdMatrix::identity(3));
  CHECK(frobenius_distance(i3, SpdMatrix::identity(3)) < 1e-14);

  auto d = spd_inverse(SpdMatrix::diagonal({2, 4}));
  CHECK(d(0, 0) == doctest::Approx(0.5));
  CHECK(d(1, 1) == doctest::Approx(0.25));

  RngStream rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    auto s = random_spd(5, rng);
    auto prod = dense_mul(s, spd_inverse(s));
    CHECK(frobenius_distance(prod, SpdMatrix::identity(5)) < 1e-9);
  }
}

TEST_CASE("rank1_logdet basics") {
  auto i2 = SpdMatrix::identity(2);
  CHECK(rank1_logdet(0.0, i2, {0, 0}) == doctest::Approx(0.0));
  CHECK(rank1_logdet(0.0, i2, {1, 0}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("rank1_inverse basics") {
  auto i2 = SpdMatrix::identity(2);
  auto same = rank1_inverse(i2, {0, 0});
  CHECK(frobenius_distance(same, i2) == 0.0);
  auto r = rank1_inverse(i2, {1, 0});
  CHECK(r(0, 0) == doctest::Approx(0.5));
  CHECK(r(1, 1) == doctest::Approx(1.0));
  CHECK(r(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("rank1 identities agree with the dense path") {
  RngStream rng(14);
  for (int rep = 0; rep < 1000; ++rep) {
    int p = 1 + static_cast<int>(rng.next_below(8));
    auto psi = random_spd(p, rng);
    std::vector<double> z(p);
    for (auto& v : z) v = rng.next_gaussian();

    auto psi_inv = spd_inverse(psi);
    double logdet_psi = log_det_spd(psi);
    SpdMatrix phi = spd_add(psi, outer_product(z));

    CHECK(rank1_logdet(logdet_psi, psi_inv, z) == doctest::Approx(log_det_spd(phi)).epsilon(1e-10));
    CHECK(frobenius_distance(rank1_inverse(psi_inv, z), spd_inverse(phi)) < 1e-9);
  }
}

TEST_CASE("lower_tri_inverse inverts") {
  RngStream rng(15);
  for (int rep = 0; rep < 20; ++rep) {
    auto l = random_lower(6, rng);
    auto linv = lower_tri_inverse(l);
    // l * linv should be the identity
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 6; ++k) acc += l(i, k) * linv(k, j);
        CHECK(acc == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
      }
  }
}

TEST_CASE("symmetry checks") {
  SpdMatrix s(2, {1, 2, 2.5, 1});
  CHECK_FALSE(s.is_symmetric());
  s.symmetrize();
  CHECK(s.is_symmetric());
  CHECK(s(0, 1) == doctest::Approx(2.25));
}

}  // TEST_SUITE
