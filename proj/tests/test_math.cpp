#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "expertise/math_util.hpp"

using namespace expertise;

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-9, 1e-4, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.97, 0.9999, 1.0 - 1e-9}) {
    double x = normal_quantile(p);
    REQUIRE(std::abs(normal_cdf(x) - p) <= 1e-12 * std::max(1.0, std::abs(p)) + 1e-15);
  }
  REQUIRE(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE_THROWS_AS(normal_quantile(0.0), Error);
  REQUIRE_THROWS_AS(normal_quantile(1.0), Error);
}

TEST_CASE("rng streams are deterministic and bounded") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    double u = a.uniform01();
    REQUIRE(u == b.uniform01());
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  Rng c(7);
  for (int i = 0; i < 1000; ++i) REQUIRE(c.below(13) < 13);
  REQUIRE_THROWS_AS(c.below(0), Error);

  std::vector<int> v1{1, 2, 3, 4, 5, 6, 7}, v2 = v1;
  Rng s1(9), s2(9);
  s1.shuffle(v1);
  s2.shuffle(v2);
  REQUIRE(v1 == v2);
  std::vector<int> sorted = v1;
  std::sort(sorted.begin(), sorted.end());
  REQUIRE(sorted == std::vector<int>{1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("seed fan-out separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 50; ++s)
    for (std::uint64_t t = 0; t < 50; ++t) seen.insert(mix_seed(s, t));
  REQUIRE(seen.size() == 2500);
}

TEST_CASE("truncated normal moments and sampling agree") {
  TruncatedNormal t{1.0, 2.0, 0.0, std::numeric_limits<double>::infinity()};
  Rng rng(123);
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    double x = t.sample(rng);
    REQUIRE(x >= 0.0);
    sum += x;
    sum2 += x * x;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  REQUIRE(mean == Catch::Approx(t.mean()).margin(5.0 * std::sqrt(t.variance() / n)));
  REQUIRE(var == Catch::Approx(t.variance()).epsilon(0.05));
}

TEST_CASE("location solver hits a requested truncated mean") {
  for (double target : {0.5, 1.81, 2.82, 28.0}) {
    for (double sigma : {0.43, 2.79, 3.14, 23.4}) {
      TruncatedNormal t = truncated_normal_with_mean(target, sigma, 0.0,
                                                     std::numeric_limits<double>::infinity());
      REQUIRE(t.mean() == Catch::Approx(target).margin(1e-9));
    }
  }
  TruncatedNormal neg = truncated_normal_with_mean(-2.6, 2.0, -10.15, -0.01);
  REQUIRE(neg.mean() == Catch::Approx(-2.6).margin(1e-9));
  REQUIRE_THROWS_AS(truncated_normal_with_mean(-1.0, 1.0, 0.0, 10.0), Error);
}

TEST_CASE("fnv1a64 matches published vectors") {
  REQUIRE(fnv1a64("") == 0xcbf29ce484222325ULL);
  REQUIRE(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  REQUIRE(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  REQUIRE(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("double rendering round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 10.25, 13.29, 1e-300, 1e300, 123456.789, 0.0}) {
    REQUIRE(parse_double(format_double(x)) == x);
    REQUIRE(parse_double(format_double(-x)) == -x);
  }
  REQUIRE(format_double(10.25) == "10.25");
  REQUIRE_THROWS_AS(parse_double("1.2.3"), ParseError);
  REQUIRE_THROWS_AS(parse_int("12a"), ParseError);
}
