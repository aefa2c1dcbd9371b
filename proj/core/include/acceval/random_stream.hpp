#pragma once

#include <array>
#include <cstdint>

namespace acceval {

/// Philox4x32-10 block function (Salmon et al., SC'11). Counter-based: the
/// output is a pure function of (counter, key), so any stream position can be
/// reached without replaying earlier draws.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Identifies one independent random stream. `stream` names the purpose
/// (estimation run, CE iteration, ...) and `index` the scenario within it.
struct StreamId {
  std::uint32_t stream = 0;
  std::uint64_t index = 0;
};

/// Packs a purpose tag into a 32-bit stream id.
/// Layout: purpose (4 bits) | event family (4) | bin (8) | sub-index (16).
constexpr std::uint32_t make_stream_tag(std::uint32_t purpose, std::uint32_t event_family,
                                        std::uint32_t bin, std::uint32_t sub) noexcept {
  return ((purpose & 0xFu) << 28) | ((event_family & 0xFu) << 24) | ((bin & 0xFFu) << 16) |
         (sub & 0xFFFFu);
}

/// Sequential uniform draws from one (seed, StreamId) position. Each block of
/// the Philox output yields two 53-bit doubles; up to 2^32 blocks per stream.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamId id) noexcept;

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  StreamId id() const noexcept { return id_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  StreamId id_;
  std::uint32_t block_ = 0;
  std::array<double, 2> buffer_{};
  int buffered_ = 0;
};

}  // namespace acceval
