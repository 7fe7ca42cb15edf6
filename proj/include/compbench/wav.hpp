#pragma once

#include <filesystem>

#include "compbench/synth.hpp"

namespace compbench {

/// Writes a mono 32 kHz IEEE-float32 RIFF/WAVE file.
void write_wav(const std::filesystem::path& path, const Waveform& w);

/// Reads a mono 32 kHz file in float32 or int16 PCM. int16 is scaled by 1/32768.
Waveform read_wav(const std::filesystem::path& path);

}  // namespace compbench
