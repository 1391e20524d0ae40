#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <vector>

namespace freqperf {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ 1.0 (Blackman and Vigna). Satisfies
/// UniformRandomBitGenerator; the state is filled from the seed by
/// successive SplitMix64 outputs, as the reference implementation suggests.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& w : s_) {
      w = splitmix64(z);
      z += 0x9e3779b97f4a7c15ULL;
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t out = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return out;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

namespace detail {

inline constexpr int kZigguratLayers = 1024;

/// Layer bounds x[0..N] (x[0] is the base strip's pseudo-width, x[1] = r,
/// x[N] = 0) and f[i] = exp(-x[i]^2 / 2).
struct ZigguratTables {
  double r = 0.0;
  std::vector<double> x;
  std::vector<double> f;
};

/// Mismatch at the top of the stack when the N-layer ziggurat starts at r.
/// Positive when the layers run out before reaching the mode.
inline double ziggurat_closure(double r, int layers, double& area) {
  area = r * std::exp(-0.5 * r * r) + std::sqrt(M_PI / 2.0) * std::erfc(r / std::sqrt(2.0));
  double x = r;
  for (int i = 1; i < layers - 1; ++i) {
    const double y = std::exp(-0.5 * x * x) + area / x;
    if (y >= 1.0) return 1.0;
    x = std::sqrt(-2.0 * std::log(y));
  }
  return std::exp(-0.5 * x * x) + area / x - 1.0;
}

inline ZigguratTables make_ziggurat(int layers) {
  double lo = 1.0, hi = 8.0, area = 0.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ziggurat_closure(mid, layers, area) > 0.0 ? lo : hi) = mid;
  }
  ZigguratTables t;
  t.r = lo;
  ziggurat_closure(t.r, layers, area);
  const auto pdf = [](double z) { return std::exp(-0.5 * z * z); };
  t.x.resize(static_cast<std::size_t>(layers) + 1);
  t.x[0] = area / pdf(t.r);
  t.x[1] = t.r;
  for (int i = 2; i < layers; ++i) t.x[i] = std::sqrt(-2.0 * std::log(area / t.x[i - 1] + pdf(t.x[i - 1])));
  t.x[layers] = 0.0;
  t.f.resize(t.x.size());
  for (std::size_t i = 0; i < t.x.size(); ++i) t.f[i] = pdf(t.x[i]);
  return t;
}

inline const ZigguratTables& ziggurat() {
  static const ZigguratTables t = make_ziggurat(kZigguratLayers);
  return t;
}

template <int L>
struct LaneVectors;
template <>
struct LaneVectors<1> {
  typedef std::uint64_t U __attribute__((vector_size(8)));
  typedef std::int64_t I __attribute__((vector_size(8)));
  typedef double D __attribute__((vector_size(8)));
};
template <>
struct LaneVectors<4> {
  typedef std::uint64_t U __attribute__((vector_size(32)));
  typedef std::int64_t I __attribute__((vector_size(32)));
  typedef double D __attribute__((vector_size(32)));
};

}  // namespace detail

/// Standard normals for L independent streams at once. Lane l draws from
/// Xoshiro256pp(seeds[l]) through a 1024-layer ziggurat; the common case
/// (one 64-bit draw, low bits pick the layer, high 52 bits a signed uniform)
/// runs across lanes and the rare rejections are finished lane by lane in
/// order. A lane's output depends only on its seed and the fill sizes.
template <int L>
class LaneNormals {
  using U = typename detail::LaneVectors<L>::U;
  using I = typename detail::LaneVectors<L>::I;
  using D = typename detail::LaneVectors<L>::D;

 public:
  explicit LaneNormals(const std::uint64_t (&seeds)[L]) {
    for (int l = 0; l < L; ++l) {
      std::uint64_t z = seeds[l];
      for (U* w : {&s0_, &s1_, &s2_, &s3_}) {
        (*w)[l] = splitmix64(z);
        z += 0x9e3779b97f4a7c15ULL;
      }
    }
  }

  /// dst[k * L + l] for k < count.
  void fill(double* dst, std::size_t count) {
    const detail::ZigguratTables& t = detail::ziggurat();
    const double* tx = t.x.data();
    bits_.resize(count);
    masks_.resize(count);
    flagged_.resize(count);

    U s0 = s0_, s1 = s1_, s2 = s2_, s3 = s3_;
    for (std::size_t k = 0; k < count; ++k) {
      const U q = s0 + s3;
      bits_[k] = ((q << 23) | (q >> 41)) + s0;
      const U sh = s1 << 17;
      s2 ^= s0;
      s3 ^= s1;
      s1 ^= s2;
      s0 ^= s3;
      s2 ^= sh;
      s3 = (s3 << 45) | (s3 >> 19);
    }
    s0_ = s0;
    s1_ = s1;
    s2_ = s2;
    s3_ = s3;

    std::size_t nflag = 0;
    for (std::size_t k = 0; k < count; ++k) {
      const U bits = bits_[k];
      const U idx = bits & static_cast<std::uint64_t>(detail::kZigguratLayers - 1);
      const U mant = (bits >> 12) | 0x3ff0000000000000ULL;
      D u;
      std::memcpy(&u, &mant, sizeof u);
      u = u * 2.0 - 3.0;
      D lo, hi;
      for (int l = 0; l < L; ++l) {
        lo[l] = tx[idx[l]];
        hi[l] = tx[idx[l] + 1];
      }
      const D x = u * lo;
      const I out = (x <= -hi) | (x >= hi);
      std::memcpy(dst + k * L, &x, sizeof x);
      masks_[k] = out;
      std::int64_t lanes[L];
      std::memcpy(lanes, &out, sizeof out);
      std::int64_t any = 0;
      for (int l = 0; l < L; ++l) any |= lanes[l];
      flagged_[nflag] = k;
      nflag += any != 0;
    }
    for (std::size_t f = 0; f < nflag; ++f) {
      const std::size_t k = flagged_[f];
      for (int l = 0; l < L; ++l) {
        if (masks_[k][l] != 0) dst[k * L + l] = resample(l, bits_[k][l], t);
      }
    }
  }

 private:
  std::uint64_t next(int l) {
    const std::uint64_t a0 = s0_[l], a1 = s1_[l], a2 = s2_[l] ^ a0, a3 = s3_[l] ^ a1;
    const std::uint64_t q = a0 + s3_[l];
    s0_[l] = a0 ^ a3;
    s1_[l] = a1 ^ a2;
    s2_[l] = a2 ^ (a1 << 17);
    s3_[l] = (a3 << 45) | (a3 >> 19);
    return ((q << 23) | (q >> 41)) + a0;
  }

  double uniform(int l) { return static_cast<double>(next(l) >> 11) * 0x1.0p-53; }

  double resample(int l, std::uint64_t bits, const detail::ZigguratTables& t) {
    for (;;) {
      const std::uint64_t i = bits & static_cast<std::uint64_t>(detail::kZigguratLayers - 1);
      const std::uint64_t mant = (bits >> 12) | 0x3ff0000000000000ULL;
      double u;
      std::memcpy(&u, &mant, sizeof u);
      u = u * 2.0 - 3.0;
      const double x = u * t.x[i];
      if (std::abs(x) < t.x[i + 1]) return x;
      if (i == 0) {
        // Marsaglia's tail beyond r
        for (;;) {
          const double a = -std::log1p(-uniform(l)) / t.r;
          const double b = -std::log1p(-uniform(l));
          if (2.0 * b >= a * a) return u < 0.0 ? -(t.r + a) : t.r + a;
        }
      }
      if (t.f[i + 1] + (t.f[i] - t.f[i + 1]) * uniform(l) < std::exp(-0.5 * x * x)) return x;
      bits = next(l);
    }
  }

  U s0_{}, s1_{}, s2_{}, s3_{};
  std::vector<U> bits_;
  std::vector<I> masks_;
  std::vector<std::size_t> flagged_;
};

}  // namespace freqperf
