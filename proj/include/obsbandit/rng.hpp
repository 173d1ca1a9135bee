#pragma once

// Counter-based random number streams (Philox4x64-10, Salmon et al. 2011).
// Every draw is addressed by (seed, stream, substream, purpose, block), so
// scenarios can run in any order, on any number of threads, and still
// reproduce bit-identical sample paths.

#include <Eigen/Dense>
#include <array>
#include <cstdint>

namespace obsbandit::rng {

/// One 10-round Philox4x64 block: 256 bits of output per counter value.
std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 2>& key,
                                        const std::array<std::uint64_t, 4>& counter);

/// What a stream is consumed for. Distinct purposes never share counters,
/// so e.g. adding reward-noise draws cannot shift the context draws.
enum class Purpose : std::uint64_t {
  kContext = 1,
  kObsNoise = 2,
  kRewardNoise = 3,
  kInstance = 4,
  kInitDraw = 5,
  kMonteCarlo = 6,
};

/// Buffered generator over one (seed, stream, substream, purpose) cell of
/// the counter space. Uniforms lie in the open interval (0,1); normals use
/// Box-Muller, so consumption is branch-free and reproducible.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream,
         Purpose purpose);

  std::uint64_t next_u64();
  double next_uniform();
  double next_normal();

  /// Fills a vector or matrix with iid standard normals, column-major.
  template <typename Derived>
  void fill_normal(Eigen::MatrixBase<Derived>& out) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = next_normal();
    }
  }

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_;
  std::array<std::uint64_t, 4> block_{};
  int block_pos_ = 4;  // empty
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace obsbandit::rng
