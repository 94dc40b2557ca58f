#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is identified by (seed, stream id); draw n of a stream is a pure
// function of (seed, stream id, n), so experiments can hand every task its own
// stream and replay bit-identically regardless of scheduling.

#include <array>
#include <cstdint>

namespace ssd {

/// One Philox4x32 block: 10 rounds over a 128-bit counter with a 64-bit key.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) noexcept;

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  /// Next raw 32-bit word.
  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform on (0, 1], 53-bit resolution. Never returns 0.
  double uniform_open_closed() noexcept;
  /// Exp(1) noise as -log(U), U on (0, 1]; always finite.
  double exponential() noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }
  /// Number of 32-bit words consumed so far.
  [[nodiscard]] std::uint64_t position() const noexcept { return position_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::uint64_t position_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned used_ = 4;
};

}  // namespace ssd
