#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace atlas {

/// Philox4x32-10 (Salmon et al., SC'11). A keyed bijection on 128-bit
/// counters: the draw at a given counter is a pure function of
/// (key, counter), so streams can be addressed by replica and particle
/// without any shared state.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t key)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  Counter operator()(const Counter& ctr) const {
    std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * c0;
      const std::uint64_t p1 = std::uint64_t{kMul1} * c2;
      const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
      const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
      c1 = static_cast<std::uint32_t>(p1);
      c3 = static_cast<std::uint32_t>(p0);
      c0 = n0;
      c2 = n2;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return {c0, c1, c2, c3};
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  Key key_;
};

/// Inverse of the standard normal CDF for p in (0, 1); Wichura's AS 241
/// (PPND16), relative accuracy about 1e-16.
inline double inverse_normal_cdf(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
    const double den =
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

/// Stream domains keep draws for different purposes disjoint.
enum class StreamDomain : std::uint32_t {
  brownian = 1,
  initial_state = 2,
  stationary_sample = 3,
  probes = 4,
  test = 5,
  brownian_bridge = 6,
};

/// Counter-based stream addressed by (seed, stream id, domain). Draw number
/// `index` is a pure function of those and the index.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint32_t stream_id, StreamDomain domain)
      : philox_(seed), stream_(stream_id), domain_(static_cast<std::uint32_t>(domain)) {}

  /// Two uniforms in (0, 1) with 53-bit resolution for block `block`.
  std::array<double, 2> uniform_pair(std::uint64_t block) const {
    const auto r = philox_({static_cast<std::uint32_t>(block),
                            static_cast<std::uint32_t>(block >> 32), stream_, domain_});
    const std::uint64_t a = (std::uint64_t{r[0]} << 32 | r[1]) >> 11;
    const std::uint64_t b = (std::uint64_t{r[2]} << 32 | r[3]) >> 11;
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    return {(static_cast<double>(a) + 0.5) * scale, (static_cast<double>(b) + 0.5) * scale};
  }

  double uniform(std::uint64_t index) const {
    return uniform_pair(index / 2)[index % 2];
  }

  /// Standard normal number `index`, by inverse CDF of uniform number `index`.
  double normal(std::uint64_t index) const { return inverse_normal_cdf(uniform(index)); }

  /// Standard normals number 2*block and 2*block + 1.
  std::array<double, 2> normal_pair(std::uint64_t block) const {
    const auto [u1, u2] = uniform_pair(block);
    return {inverse_normal_cdf(u1), inverse_normal_cdf(u2)};
  }

  /// Exponential with the given rate by inverse CDF.
  double exponential(std::uint64_t index, double rate) const {
    return -std::log(uniform(index)) / rate;
  }

 private:
  Philox4x32 philox_;
  std::uint32_t stream_;
  std::uint32_t domain_;
};

/// Seed of replica `index` under `base_seed`: half of the Philox block at a
/// reserved counter, so it depends on nothing but (base_seed, index).
inline std::uint64_t replica_seed(std::uint64_t base_seed, std::uint64_t index) {
  const auto r = Philox4x32(base_seed)({static_cast<std::uint32_t>(index),
                                        static_cast<std::uint32_t>(index >> 32),
                                        0xA7A5u, 0x5EEDu});
  return std::uint64_t{r[0]} << 32 | r[1];
}

}  // namespace atlas
