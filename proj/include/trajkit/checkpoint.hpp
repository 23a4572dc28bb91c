#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajkit/micronet.hpp"
#include "trajkit/schedule.hpp"

namespace trajkit {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container, layout in docs/checkpoint_format.md.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t step = 0;
  std::string config_text;
  ScheduleParams schedule{};
  std::optional<MicroNet> oracle;
  std::optional<MicroNet> modulator;
  std::map<std::string, double> tags;
};

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
/// Checkpoint-kind error on bad magic, checksum, truncation or a newer version.
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

/// Writes through a temporary file and renames, so readers never see a partial file.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
/// Artifact-kind error when the file does not exist.
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(const unsigned char* data, std::size_t n);

}  // namespace trajkit
