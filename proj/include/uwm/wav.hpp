// wav.hpp - mono 16-bit PCM little-endian WAV read/write
#pragma once

#include <string>

#include "uwm/types.hpp"

namespace uwm {

// Write samples as mono 16-bit PCM. Values are clipped to [-1, 1).
void write_wav(const std::string& path, const SampleBuffer& buf);

// Read a mono 16-bit PCM WAV. Throws std::runtime_error on malformed files
// or unsupported formats, with an explicit message.
SampleBuffer read_wav(const std::string& path);

}  // namespace uwm
