#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace trajkit {

/// Philox4x32-10 counter-based block cipher (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Separate draw namespaces so different uses of one stream never collide.
enum class Draw : std::uint16_t {
  Start = 1,      // initial noise X_T
  Step = 2,       // per-step Wiener increments
  Candidate = 3,  // per-candidate modulation draws
  Data = 4,       // dataset generation
  Batch = 5,      // minibatch composition during training
  Permute = 6,    // permutation tests
  Misc = 7,
};

/// Stateless Gaussian/uniform source keyed by (seed, stream, step, draw kind).
/// The same key always produces the same numbers, whatever thread asks.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Fills `out` with independent standard normals.
  void gaussians(std::uint32_t step, std::span<double> out, Draw kind = Draw::Step) const;
  /// Uniforms in the open interval (0, 1).
  void uniforms(std::uint32_t step, std::span<double> out, Draw kind) const;

  double gaussian(std::uint32_t step, Draw kind) const;
  double uniform(std::uint32_t step, Draw kind) const;

 private:
  std::array<std::uint32_t, 4> block(std::uint32_t step, Draw kind, std::uint32_t index) const;

  std::uint64_t seed_;
  std::uint64_t stream_;
};

/// Sequential view over a stream: advances the step counter on each call.
class RngCursor {
 public:
  RngCursor(std::uint64_t seed, std::uint64_t stream, Draw kind)
      : stream_(seed, stream), kind_(kind) {}

  void gaussians(std::span<double> out) { stream_.gaussians(next_++, out, kind_); }
  double gaussian() { return stream_.gaussian(next_++, kind_); }
  double uniform() { return stream_.uniform(next_++, kind_); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  RngStream stream_;
  Draw kind_;
  std::uint32_t next_ = 0;
};

}  // namespace trajkit
