#pragma once

#include <filesystem>

#include "apf/signal.hpp"

namespace apf {

enum class SampleFormat { Pcm16, Pcm24, Float32 };

struct WavInfo {
  int channels = 1;
  int sample_rate = 0;
  SampleFormat format = SampleFormat::Float32;
  std::size_t frames = 0;
};

// Reads a RIFF/WAVE file (PCM 16/24-bit or IEEE float 32-bit, plain or
// WAVE_FORMAT_EXTENSIBLE). Multichannel input keeps the first channel and
// emits a warning. Throws IoError on unsupported codecs or corrupt headers.
Signal read_wav(const std::filesystem::path& path, WavInfo* info = nullptr);

// Writes a mono file. PCM formats clip to [-1, 1).
void write_wav(const std::filesystem::path& path, const Signal& signal,
               SampleFormat format = SampleFormat::Float32);

// Multichannel writer, used to build fixtures. `channels` holds one
// equal-length buffer per channel.
void write_wav(const std::filesystem::path& path, const std::vector<std::vector<double>>& channels,
               int sample_rate, SampleFormat format);

SampleFormat parse_sample_format(int bit_depth);

}  // namespace apf
