#include "poselift/rng.hpp"

#include <cmath>
#include <numbers>

namespace poselift {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

// 53 random bits mapped to the open unit interval.
inline double to_unit(std::uint32_t high, std::uint32_t low) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(high) << 32) | low;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                         std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::array<std::uint32_t, 4> RngStream::block(std::uint64_t index) const {
  const std::array<std::uint32_t, 4> counter{
      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  return philox4x32(counter, key);
}

double RngStream::uniform_at(std::uint64_t index) const {
  const auto b = block(index);
  return to_unit(b[0], b[1]);
}

double RngStream::normal_at(std::uint64_t index) const {
  const auto b = block(index);
  const double radius = std::sqrt(-2.0 * std::log(to_unit(b[0], b[1])));
  return radius * std::cos(2.0 * std::numbers::pi * to_unit(b[2], b[3]));
}

std::uint64_t RngStream::below(std::uint64_t n) {
  // n is small everywhere this is used; the modulo bias is below 2^-40.
  const auto b = block(position_++);
  const std::uint64_t bits = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  return n == 0 ? 0 : bits % n;
}

std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t tag) {
  return splitmix64(splitmix64(parent) ^ (tag + 0x632BE59BD9B4E019ull));
}

}  // namespace poselift
