#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ntnkb/kb.hpp"
#include "ntnkb/models.hpp"

namespace ntnkb {

// Binary layout, all integers little-endian:
//
//   "NTKB" | u32 version (1) | u8 model kind | u32 d | u32 k | u32 |E| | u32 |R|
//   |E| entity names, then |R| relation names, each u32 byte length + UTF-8
//   payload: f64 parameters in ParameterLayout order
//   u64 checksum: wrapping sum of the payload read as u64 words
//
// An NTN model with a shared U is recognized by its payload length.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelParams params;
    Vocabulary entities;
    Vocabulary relations;
};

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params, const Vocabulary& entities,
                                               const Vocabulary& relations);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const Vocabulary& entities, const Vocabulary& relations);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Byte offset where the parameter payload begins, for corruption tests.
std::size_t checkpoint_payload_offset(std::span<const std::uint8_t> bytes);

}  // namespace ntnkb
