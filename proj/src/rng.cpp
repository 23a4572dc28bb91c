#include "trajkit/rng.hpp"

#include <cmath>
#include <numbers>

#include "trajkit/error.hpp"

namespace trajkit {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform strictly inside (0, 1).
inline double to_open_unit(std::uint32_t lo, std::uint32_t hi) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
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

std::array<std::uint32_t, 4> RngStream::block(std::uint32_t step, Draw kind,
                                              std::uint32_t index) const {
  if (index > 0xFFFFu) fail(ErrorKind::Argument, "rng: more than 131072 draws requested for one key");
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32), step,
      static_cast<std::uint32_t>(kind) << 16 | index};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  return philox4x32(ctr, key);
}

void RngStream::gaussians(std::uint32_t step, std::span<double> out, Draw kind) const {
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const auto w = block(step, kind, static_cast<std::uint32_t>(i / 2));
    const double u1 = to_open_unit(w[0], w[1]);
    const double u2 = to_open_unit(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    out[i] = r * std::cos(phi);
    if (i + 1 < out.size()) out[i + 1] = r * std::sin(phi);
  }
}

void RngStream::uniforms(std::uint32_t step, std::span<double> out, Draw kind) const {
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const auto w = block(step, kind, static_cast<std::uint32_t>(i / 2));
    out[i] = to_open_unit(w[0], w[1]);
    if (i + 1 < out.size()) out[i + 1] = to_open_unit(w[2], w[3]);
  }
}

double RngStream::gaussian(std::uint32_t step, Draw kind) const {
  double z[1];
  gaussians(step, z, kind);
  return z[0];
}

double RngStream::uniform(std::uint32_t step, Draw kind) const {
  double u[1];
  uniforms(step, u, kind);
  return u[0];
}

std::uint64_t RngCursor::below(std::uint64_t n) {
  if (n == 0) fail(ErrorKind::Argument, "rng: below(0)");
  const auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

}  // namespace trajkit
