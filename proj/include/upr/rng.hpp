#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace upr {

// Counter-based generator (Philox4x32-10). Streams are independent
// substreams of one seed: sampler code assigns one stream per variable so
// results are reproducible across platforms and parallel schedules.
class Philox {
 public:
  using result_type = std::uint64_t;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (have_ == 0) {
      fill_block();
      have_ = 2;
    }
    return buf_[--have_];
  }

  // Uniform on the open interval (0,1).
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform()); }

  double exponential() { return -std::log(uniform()); }

  // Gamma(shape, 1) by Marsaglia-Tsang, with the boost trick for shape < 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Inverse standard-normal CDF (Wichura's PPND16 rational approximations).
  static double normal_quantile(double p) {
    auto horner = [](double r, std::initializer_list<double> hi_to_lo) {
      double acc = 0.0;
      for (double c : hi_to_lo) acc = acc * r + c;
      return acc;
    };
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
      const double r = 0.180625 - q * q;
      return q *
             horner(r, {2.5090809287301226727e3, 3.3430575583588128105e4,
                        6.7265770927008700853e4, 4.5921953931549871457e4,
                        1.3731693765509461125e4, 1.9715909503065514427e3,
                        1.3314166789178437745e2, 3.3871328727963666080e0}) /
             horner(r, {5.2264952788528545610e3, 2.8729085735721942674e4,
                        3.9307895800092710610e4, 2.1213794301586595867e4,
                        5.3941960214247511077e3, 6.8718700749205790830e2,
                        4.2313330701600911252e1, 1.0});
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
      r -= 1.6;
      val = horner(r, {7.74545014278341407640e-4, 2.27238449892691845833e-2,
                       2.41780725177450611770e-1, 1.27045825245236838258e0,
                       3.64784832476320460504e0, 5.76949722146069140550e0,
                       4.63033784615654529590e0, 1.42343711074968357734e0}) /
            horner(r, {1.05075007164441684324e-9, 5.47593808499534494600e-4,
                       1.51986665636164571966e-2, 1.48103976427480074590e-1,
                       6.89767334985100004550e-1, 1.67638483018380384940e0,
                       2.05319162663775882187e0, 1.0});
    } else {
      r -= 5.0;
      val = horner(r, {2.01033439929228813265e-7, 2.71155556874348757815e-5,
                       1.24266094738807843860e-3, 2.65321895265761230930e-2,
                       2.96560571828504891230e-1, 1.78482653991729133580e0,
                       5.46378491116411436990e0, 6.65790464350110377720e0}) /
            horner(r, {2.04426310338993978564e-15, 1.42151175831644588870e-7,
                       1.84631831751005468180e-5, 7.86869131145613259100e-4,
                       1.48753612908506148525e-2, 1.36929880922735805310e-1,
                       5.99832206555887937690e-1, 1.0});
    }
    return (q < 0.0) ? -val : val;
  }

 private:
  static void round(std::array<std::uint32_t, 4>& ctr,
                    std::array<std::uint32_t, 2>& key) {
    const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
    const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
    key[0] += 0x9E3779B9u;
    key[1] += 0xBB67AE85u;
  }

  void fill_block() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block_),
        static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int i = 0; i < 10; ++i) round(ctr, key);
    buf_[0] = (static_cast<std::uint64_t>(ctr[1]) << 32) | ctr[0];
    buf_[1] = (static_cast<std::uint64_t>(ctr[3]) << 32) | ctr[2];
    ++block_;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int have_ = 0;
};

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * 0.3989422804014326779;
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

inline double normal_quantile(double p) { return Philox::normal_quantile(p); }

// Splits one user seed into decorrelated per-task seeds (splitmix64 step).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace upr
