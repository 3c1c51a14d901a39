#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace levyhjm {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// Seeding contract for one simulated path: the pair (master_seed,
/// stream_index) fully determines every random draw of that path.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

/// Independent sub-streams of a path stream, so that e.g. the jump
/// component is unchanged when the Brownian variance is switched off.
enum class Substream : std::uint32_t { Brownian = 1, JumpTimes = 2, JumpSizes = 3, Aux = 4 };

/// Counter-based generator over one (stream, substream). Satisfies
/// std::uniform_random_bit_generator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(RngStream stream, Substream sub);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double exponential();  // rate 1
  double normal();       // standard

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t sub_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace levyhjm
