#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfpq/network.hpp"

namespace mfpq {

// Checkpoint = "MFPQCKPT" magic, a little-endian u64 header length, a JSON
// header (version, architecture, entry table), then one raw little-endian
// payload. Header offsets tile the payload exactly; save(load(f)) == f.
struct Checkpoint {
  Network<float> net;
  std::uint64_t seed = 0;
};

std::vector<std::uint8_t> serialize_checkpoint(const Network<float>& net,
                                               std::uint64_t seed);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

// Atomic: writes a temp file in the same directory, then renames.
void save_checkpoint(const std::string& path, const Network<float>& net,
                     std::uint64_t seed);
Checkpoint load_checkpoint(const std::string& path);

void write_file_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::string& path);

}  // namespace mfpq
