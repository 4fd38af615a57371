// SPDX-License-Identifier: Apache-2.0

#include "lct/dsp/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace dsp {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                 static_cast<char>((v >> 16) & 0xFF),
                                 static_cast<char>((v >> 24) & 0xFF)};
  os.write(b.data(), 4);
}
void put16(std::ostream& os, std::uint16_t v) {
  const std::array<char, 2> b = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF)};
  os.write(b.data(), 2);
}

}  // namespace

Wave read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw IoError(name + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size() && std::memcmp(chunk, "data", 4) != 0)
      throw IoError(name + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw IoError(name + ": short fmt chunk");
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      if (format == kFormatExtensible && size >= 26) format = le16(bytes.data() + body + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    pos = body + size + (size & 1u);
  }
  if (!data || channels == 0) throw IoError(name + ": missing fmt or data chunk");
  if (channels != 1)
    throw IoError(name + ": expected mono audio, found " + std::to_string(channels) + " channels");
  if (rate != static_cast<std::uint32_t>(kSampleRate))
    throw IoError(name + ": expected " + std::to_string(kSampleRate) + " Hz, found " +
                  std::to_string(rate) + " Hz (resampling is not supported)");

  Wave wave;
  wave.sample_rate = static_cast<int>(rate);
  if (format == kFormatPcm && bits == 16) {
    wave.format = WavFormat::kPcm16;
    const std::size_t n = data_size / 2;
    wave.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      wave.samples[i] = static_cast<Real>(static_cast<std::int16_t>(le16(data + 2 * i))) /
                        static_cast<Real>(32768);
  } else if (format == kFormatFloat && bits == 32) {
    wave.format = WavFormat::kFloat32;
    const std::size_t n = data_size / 4;
    wave.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t raw = le32(data + 4 * i);
      float v;
      std::memcpy(&v, &raw, 4);
      wave.samples[i] = static_cast<Real>(v);
    }
  } else {
    throw IoError(name + ": unsupported encoding (format " + std::to_string(format) + ", " +
                  std::to_string(bits) + " bits); need 16-bit PCM or 32-bit float");
  }
  return wave;
}

void write_wav(const std::filesystem::path& path, const std::vector<Real>& samples,
               WavFormat format, int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint16_t bits = format == WavFormat::kPcm16 ? 16 : 32;
  const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * (bits / 8));
  out.write("RIFF", 4);
  put32(out, 36 + data_size);
  out.write("WAVEfmt ", 8);
  put32(out, 16);
  put16(out, format == WavFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate) * (bits / 8));
  put16(out, static_cast<std::uint16_t>(bits / 8));
  put16(out, bits);
  out.write("data", 4);
  put32(out, data_size);
  for (Real s : samples) {
    if (format == WavFormat::kPcm16) {
      const double scaled = std::round(static_cast<double>(s) * 32768.0);
      put16(out, static_cast<std::uint16_t>(
                     static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0))));
    } else {
      const float v = static_cast<float>(s);
      std::uint32_t raw;
      std::memcpy(&raw, &v, 4);
      put32(out, raw);
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace dsp
}  // namespace LCT_PRECISION_NS
}  // namespace lct
