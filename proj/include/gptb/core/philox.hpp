#pragma once

#include <array>
#include <cstdint>

namespace gptb {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the output
/// depends only on (counter, key), which is what makes per-sample streams
/// reproducible under any partitioning of the work.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Stream purposes; each occupies its own counter word so draws never collide.
enum class StreamTag : std::uint32_t {
  Gaussian = 0,
  Rademacher = 1,
  Auxiliary = 2,
};

/// Random draws for one Monte-Carlo sample, keyed on (seed, sample index, tag).
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t sample, StreamTag tag = StreamTag::Gaussian) noexcept;

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double next_uniform() noexcept;
  /// Standard normal by Box-Muller; each block yields two.
  double next_normal() noexcept;
  /// 32 random bits.
  std::uint32_t next_bits() noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  unsigned used_words_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gptb
