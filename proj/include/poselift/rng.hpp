#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace poselift {

/// Philox4x32-10 block for (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                         std::array<std::uint32_t, 2> key);

/// Counter-based random stream. Draw i of stream (seed, stream_id) is a pure
/// function of the triple, so streams can be evaluated in any order or on any
/// thread and still reproduce. Every draw consumes exactly one counter value.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t position = 0)
      : seed_(seed), stream_id_(stream_id), position_(position) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t position() const { return position_; }
  void seek(std::uint64_t position) { position_ = position; }

  /// Uniform on the open interval (0, 1).
  double uniform() { return uniform_at(position_++); }
  /// Standard normal (Box-Muller on one Philox block).
  double normal() { return normal_at(position_++); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal();
  }

  double uniform_at(std::uint64_t index) const;
  double normal_at(std::uint64_t index) const;

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t index) const;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t position_;
};

/// Deterministically derives a child stream id from a parent id and a tag.
std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t tag);

}  // namespace poselift
