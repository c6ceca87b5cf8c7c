#include <algorithm>
#include <cmath>
#include <vector>

#include "chyvae/distributions.hpp"
#include "chyvae/rng.hpp"
#include "doctest.h"

using namespace chyvae;

namespace {

// Asymptotic Kolmogorov survival function Q(lambda).
double ks_pvalue(double d, int n) {
  double lambda = (std::sqrt(double(n)) + 0.12 + 0.11 / std::sqrt(double(n))) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

// chi2(1) CDF = P(Z^2 <= x) = erf(sqrt(x/2)).
double chi2_1_cdf(double x) { return x <= 0.0 ? 0.0 : std::erf(std::sqrt(0.5 * x)); }

}  // namespace

TEST_SUITE("rng") {

TEST_CASE("same seed gives an identical sequence; different seeds do not") {
  RngStream a(123), b(123), c(124);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    auto x = a.next_u64();
    all_equal = all_equal && (x == b.next_u64());
    any_diff = any_diff || (x != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("restore resumes the exact sequence") {
  RngStream a(7);
  for (int i = 0; i < 10; ++i) a.next_gaussian();
  RngStream b = RngStream::restore(a.seed(), a.counter());
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams are unrelated to the parent") {
  RngStream parent(99);
  RngStream child0 = parent.derive(0);
  RngStream child1 = parent.derive(1);
  CHECK(child0.next_u64() != child1.next_u64());
  // derive does not disturb the parent
  RngStream fresh(99);
  CHECK(parent.next_u64() == fresh.next_u64());
}

TEST_CASE("uniform moments") {
  RngStream rng(21);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = rng.next_double();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    s += u;
    s2 += u * u;
  }
  double mean = s / n;
  double var = s2 / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("gaussian moments") {
  RngStream rng(22);
  const int n = 200000;
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = rng.next_gaussian();
    s += g;
    s2 += g * g;
    s4 += g * g * g * g;
  }
  CHECK(std::abs(s / n) < 3.0 / std::sqrt(double(n)));
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("gamma moments cover both shape regimes") {
  RngStream rng(23);
  for (double shape : {0.5, 2.0, 7.3}) {
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double g = rng.next_gamma(shape, 2.0);
      s += g;
      s2 += g * g;
    }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    double true_mean = shape * 2.0;
    double true_var = shape * 4.0;
    CHECK(std::abs(mean - true_mean) < 4.0 * std::sqrt(true_var / n));
    CHECK(var == doctest::Approx(true_var).epsilon(0.06));
  }
}

TEST_CASE("chi-square at k=1 matches the squared-normal law (KS)") {
  RngStream rng(24);
  const int n = 10000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = chi_square_sample(1.0, rng);
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    double cdf = chi2_1_cdf(xs[i]);
    d = std::max(d, std::abs(cdf - double(i + 1) / n));
    d = std::max(d, std::abs(cdf - double(i) / n));
  }
  CHECK(ks_pvalue(d, n) > 0.01);
}

TEST_CASE("next_below is unbiased over a small range") {
  RngStream rng(25);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) counts[rng.next_below(7)]++;
  for (int c : counts) CHECK(std::abs(c - n / 7) < 5 * std::sqrt(double(n) / 7));
  CHECK_THROWS_AS(rng.next_below(0), DomainError);
}

}  // TEST_SUITE
