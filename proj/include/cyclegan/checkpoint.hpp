#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cyclegan/tensor.hpp"
#include "cyclegan/trainer.hpp"

namespace cyclegan {

inline constexpr char kCheckpointMagic[4] = {'C', 'G', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Decoded checkpoint file. Layout, all integers 32-bit little-endian:
//   "CGCK" version
//   tensor count, then per tensor: name length, UTF-8 name, rank, dims,
//     raw little-endian float32 values
//   blob count, then per blob: name length, UTF-8 name, byte length, bytes
// Blobs carry the architecture strings, the config snapshot, counters and
// RNG states as text.
struct CheckpointRecord {
  std::uint32_t version = kCheckpointVersion;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  std::vector<std::pair<std::string, std::string>> blobs;

  const Tensor<float>& tensor(const std::string& name) const;
  const std::string& blob(const std::string& name) const;
};

std::string encode_checkpoint(const CheckpointRecord& record);
// Throws CorruptionError on a bad magic, an unsupported version, truncation
// or trailing bytes.
CheckpointRecord decode_checkpoint(std::string_view bytes);

CheckpointRecord to_record(const TrainerState& state);
// Rebuilds networks from the stored architecture strings and checks every
// tensor against them. Throws CorruptionError on any mismatch.
TrainerState from_record(const CheckpointRecord& record);

// Atomic write (temporary file, then rename).
void save_checkpoint(const std::filesystem::path& path, const TrainerState& state);
TrainerState load_checkpoint(const std::filesystem::path& path);

// Raw file helpers shared by the commands.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace cyclegan
