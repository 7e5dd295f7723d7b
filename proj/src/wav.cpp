#include "apf/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "apf/error.hpp"
#include "apf/log.hpp"

namespace apf {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

int bytes_per_sample(SampleFormat f) {
  switch (f) {
    case SampleFormat::Pcm16: return 2;
    case SampleFormat::Pcm24: return 3;
    case SampleFormat::Float32: return 4;
  }
  return 4;
}

double decode(const unsigned char* p, SampleFormat f) {
  switch (f) {
    case SampleFormat::Pcm16: {
      const auto v = static_cast<std::int16_t>(read_u16(p));
      return v / 32768.0;
    }
    case SampleFormat::Pcm24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case SampleFormat::Float32: {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
  }
  return 0.0;
}

void encode(std::string& out, double x, SampleFormat f) {
  switch (f) {
    case SampleFormat::Pcm16: {
      const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      break;
    }
    case SampleFormat::Pcm24: {
      const double q = std::clamp(std::round(x * 8388608.0), -8388608.0, 8388607.0);
      const auto v = static_cast<std::uint32_t>(static_cast<std::int32_t>(q));
      out.push_back(static_cast<char>(v & 0xFF));
      out.push_back(static_cast<char>((v >> 8) & 0xFF));
      out.push_back(static_cast<char>((v >> 16) & 0xFF));
      break;
    }
    case SampleFormat::Float32: {
      const auto v = std::bit_cast<std::uint32_t>(static_cast<float>(x));
      put_u32(out, v);
      break;
    }
  }
}

}  // namespace

SampleFormat parse_sample_format(int bit_depth) {
  switch (bit_depth) {
    case 16: return SampleFormat::Pcm16;
    case 24: return SampleFormat::Pcm24;
    case 32: return SampleFormat::Float32;
    default:
      throw ParameterError("unsupported bit depth " + std::to_string(bit_depth) +
                           " (expected 16, 24 or 32)");
  }
}

Signal read_wav(const std::filesystem::path& path, WavInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  const std::size_t size = data.size();

  if (size < 12 || std::memcmp(bytes, "RIFF", 4) != 0 || std::memcmp(bytes + 8, "WAVE", 4) != 0) {
    throw IoError(path.string() + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t tag = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const unsigned char* payload = nullptr;
  std::size_t payload_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = bytes + pos;
    const std::uint32_t chunk_size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > size && std::memcmp(chunk, "data", 4) != 0) {
      throw IoError(path.string() + ": truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw IoError(path.string() + ": fmt chunk too short");
      tag = read_u16(bytes + body);
      channels = read_u16(bytes + body + 2);
      rate = read_u32(bytes + body + 4);
      block_align = read_u16(bytes + body + 12);
      bits = read_u16(bytes + body + 14);
      if (tag == kFormatExtensible) {
        if (chunk_size < 40) throw IoError(path.string() + ": extensible fmt chunk too short");
        tag = read_u16(bytes + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      payload = bytes + body;
      // Streaming writers sometimes leave the size unset; clamp to the file.
      payload_size = std::min<std::size_t>(chunk_size, size - body);
      break;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }

  if (!have_fmt) throw IoError(path.string() + ": missing fmt chunk");
  if (payload == nullptr) throw IoError(path.string() + ": missing data chunk");
  if (channels == 0 || rate == 0) throw IoError(path.string() + ": corrupt fmt chunk");

  SampleFormat format;
  if (tag == kFormatPcm && bits == 16) {
    format = SampleFormat::Pcm16;
  } else if (tag == kFormatPcm && bits == 24) {
    format = SampleFormat::Pcm24;
  } else if (tag == kFormatFloat && bits == 32) {
    format = SampleFormat::Float32;
  } else {
    throw IoError(path.string() + ": unsupported codec (format tag " + std::to_string(tag) +
                  ", " + std::to_string(bits) + " bits)");
  }
  const int width = bytes_per_sample(format);
  if (block_align != channels * width) throw IoError(path.string() + ": inconsistent block alignment");

  const std::size_t frames = payload_size / block_align;
  if (channels > 1) {
    warn(path.string() + ": " + std::to_string(channels) +
         " channels, keeping only the first channel");
  }

  Signal signal;
  signal.sample_rate = static_cast<int>(rate);
  signal.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    signal.samples[i] = decode(payload + i * block_align, format);
  }
  if (info != nullptr) {
    *info = WavInfo{channels, static_cast<int>(rate), format, frames};
  }
  validate(signal);
  return signal;
}

void write_wav(const std::filesystem::path& path, const std::vector<std::vector<double>>& channels,
               int sample_rate, SampleFormat format) {
  if (channels.empty()) throw ParameterError("write_wav: no channels");
  if (sample_rate <= 0) throw ParameterError("write_wav: sample rate must be positive");
  const std::size_t frames = channels.front().size();
  for (const auto& c : channels) {
    if (c.size() != frames) throw ParameterError("write_wav: channel length mismatch");
  }

  const int width = bytes_per_sample(format);
  const auto n_channels = static_cast<std::uint16_t>(channels.size());
  const auto block_align = static_cast<std::uint16_t>(n_channels * width);
  const std::size_t data_bytes = frames * block_align;
  if (data_bytes > 0xFFFFFFFFu - 64) throw IoError("write_wav: file exceeds RIFF size limit");

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, format == SampleFormat::Float32 ? kFormatFloat : kFormatPcm);
  put_u16(out, n_channels);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * block_align);
  put_u16(out, block_align);
  put_u16(out, static_cast<std::uint16_t>(8 * width));
  out += "data";
  put_u32(out, static_cast<std::uint32_t>(data_bytes));
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& c : channels) encode(out, c[i], format);
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed: " + path.string());
}

void write_wav(const std::filesystem::path& path, const Signal& signal, SampleFormat format) {
  validate(signal);
  write_wav(path, std::vector<std::vector<double>>{signal.samples}, signal.sample_rate, format);
}

}  // namespace apf
