#include "obsbandit/rng.hpp"

#include <cmath>

namespace obsbandit::rng {

namespace {

constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& lo,
                    std::uint64_t& hi) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  lo = static_cast<std::uint64_t>(p);
  hi = static_cast<std::uint64_t>(p >> 64);
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 2>& key,
                                        const std::array<std::uint64_t, 4>& counter) {
  std::array<std::uint64_t, 4> ctr = counter;
  std::array<std::uint64_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t lo0, hi0, lo1, hi1;
    mulhilo(kMult0, ctr[0], lo0, hi0);
    mulhilo(kMult1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
    if (round < 9) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
  }
  return ctr;
}

Stream::Stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream,
               Purpose purpose)
    : key_{seed, stream},
      counter_{0, substream, static_cast<std::uint64_t>(purpose), 0} {}

std::uint64_t Stream::next_u64() {
  if (block_pos_ == 4) {
    block_ = philox4x64(key_, counter_);
    ++counter_[0];
    block_pos_ = 0;
  }
  return block_[block_pos_++];
}

double Stream::next_uniform() {
  // 53 random bits, shifted into (0,1): never returns 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

}  // namespace obsbandit::rng
