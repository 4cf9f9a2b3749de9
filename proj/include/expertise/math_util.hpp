// Deterministic numeric helpers: seeded RNG streams, normal/truncated-normal
// sampling via inverse CDF, and portable float rendering. All randomness in
// the library flows through these so that identical seeds reproduce identical
// artifacts byte for byte.
#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace expertise {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ExtractionError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stable seed fan-out: one master seed, independent streams per component.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x6A09E667F3BCC909ULL));
}

// mt19937_64 has standard-mandated output; the distribution helpers below are
// ours, so a seed reproduces the same values on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // in [0, 1)
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // in (0, 1), symmetric: safe to feed through an inverse CDF
  double uniform_open01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // unbiased integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error("Rng::below: n must be positive");
    std::uint64_t mask = ~std::uint64_t{0};
    if ((n & (n - 1)) == 0) return engine_() & (n - 1);
    mask >>= std::countl_zero(n - 1);
    for (;;) {
      std::uint64_t r = engine_() & mask;
      if (r < n) return r;
    }
  }

  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

inline double normal_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779399461;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// Inverse standard-normal CDF: Acklam's rational approximation polished with
// one Halley step, good to ~1e-15 over (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("normal_quantile: p outside (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement against the forward CDF.
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

inline double standard_normal(Rng& rng) { return normal_quantile(rng.uniform_open01()); }

// Normal restricted to [lo, hi]; either bound may be infinite.
struct TruncatedNormal {
  double loc = 0.0;
  double scale = 1.0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  double cdf_lo() const { return std::isinf(lo) ? 0.0 : normal_cdf((lo - loc) / scale); }
  double cdf_hi() const { return std::isinf(hi) ? 1.0 : normal_cdf((hi - loc) / scale); }

  double quantile(double u) const {
    double plo = cdf_lo(), phi = cdf_hi();
    double p = plo + u * (phi - plo);
    p = std::clamp(p, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
    double x = loc + scale * normal_quantile(p);
    return std::clamp(x, lo, hi);
  }

  double sample(Rng& rng) const { return quantile(rng.uniform_open01()); }

  double mean() const {
    double alpha = std::isinf(lo) ? -40.0 : (lo - loc) / scale;
    double beta = std::isinf(hi) ? 40.0 : (hi - loc) / scale;
    double z = normal_cdf(beta) - normal_cdf(alpha);
    if (z <= 0) return loc;
    return loc + scale * (normal_pdf(alpha) - normal_pdf(beta)) / z;
  }

  double variance() const {
    double alpha = std::isinf(lo) ? -40.0 : (lo - loc) / scale;
    double beta = std::isinf(hi) ? 40.0 : (hi - loc) / scale;
    double z = normal_cdf(beta) - normal_cdf(alpha);
    if (z <= 0) return 0.0;
    double g = (alpha * normal_pdf(alpha) - beta * normal_pdf(beta)) / z;
    double h = (normal_pdf(alpha) - normal_pdf(beta)) / z;
    return scale * scale * (1.0 + g - h * h);
  }

  double second_moment() const {
    double m = mean();
    return variance() + m * m;
  }
};

// Solves for the parent location so the truncated mean hits `target_mean`.
inline TruncatedNormal truncated_normal_with_mean(double target_mean, double scale,
                                                  double lo, double hi) {
  if (scale <= 0) throw Error("truncated_normal_with_mean: scale must be positive");
  if (!(target_mean > lo) || !(target_mean < hi))
    throw Error("truncated_normal_with_mean: target mean outside support");
  double a = (std::isinf(lo) ? target_mean : lo) - 12.0 * scale;
  double b = (std::isinf(hi) ? target_mean : hi) + 12.0 * scale;
  TruncatedNormal t{0.0, scale, lo, hi};
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (a + b);
    t.loc = mid;
    if (t.mean() < target_mean)
      a = mid;
    else
      b = mid;
  }
  t.loc = 0.5 * (a + b);
  return t;
}

// FNV-1a, 64 bit. Content digests for model/report files (integrity check,
// not cryptographic).
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xCBF29CE484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

// Shortest decimal that round-trips; the one float rendering used in every
// file the tools emit.
inline std::string format_double(double v) {
  std::array<char, 40> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

inline double parse_double(std::string_view s) {
  double v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("invalid number: '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s) {
  long long v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("invalid integer: '" + std::string(s) + "'");
  return v;
}

}  // namespace expertise
