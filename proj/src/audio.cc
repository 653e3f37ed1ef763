// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/audio.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "bss/io_audit.h"

namespace bss {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;

template <typename T>
T ReadLE(std::istream& in) {
  unsigned char b[sizeof(T)];
  in.read(reinterpret_cast<char*>(b), sizeof(T));
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  T out;
  std::memcpy(&out, &v, sizeof(T));
  return out;
}

template <typename T>
void WriteLE(std::ostream& out, T value) {
  uint64_t v = 0;
  std::memcpy(&v, &value, sizeof(T));
  unsigned char b[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

}  // namespace

AudioBuffer ReadWav(const std::string& path) {
  io_audit::Record(path);
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), "ReadWav: cannot open " + path);

  char riff[4], wave[4];
  in.read(riff, 4);
  Require(in.good() && std::memcmp(riff, "RIFF", 4) == 0,
          "ReadWav: missing RIFF header in " + path);
  ReadLE<uint32_t>(in);  // chunk size, unused
  in.read(wave, 4);
  Require(in.good() && std::memcmp(wave, "WAVE", 4) == 0,
          "ReadWav: not a WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::vector<char> data;

  while (in.peek() != EOF) {
    char id[4];
    in.read(id, 4);
    if (!in.good()) break;
    uint32_t size = ReadLE<uint32_t>(in);
    Require(in.good(), "ReadWav: truncated chunk header in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      Require(size >= 16, "ReadWav: malformed fmt chunk in " + path);
      format = ReadLE<uint16_t>(in);
      channels = ReadLE<uint16_t>(in);
      sample_rate = ReadLE<uint32_t>(in);
      ReadLE<uint32_t>(in);  // byte rate
      ReadLE<uint16_t>(in);  // block align
      bits = ReadLE<uint16_t>(in);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      Require(have_fmt, "ReadWav: data chunk before fmt in " + path);
      data.resize(size);
      in.read(data.data(), size);
      Require(in.good(), "ReadWav: truncated data chunk in " + path);
      break;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
    Require(in.good(), "ReadWav: malformed chunk layout in " + path);
  }

  Require(have_fmt, "ReadWav: no fmt chunk in " + path);
  Require(channels >= 1, "ReadWav: zero channels in " + path);
  Require(sample_rate > 0, "ReadWav: zero sample rate in " + path);

  int bytes_per_sample;
  if (format == kFormatPcm && bits == 16) {
    bytes_per_sample = 2;
  } else if (format == kFormatFloat && bits == 32) {
    bytes_per_sample = 4;
  } else {
    Fail("ReadWav: unsupported encoding (format=" + std::to_string(format) +
         ", bits=" + std::to_string(bits) + ") in " + path);
  }

  size_t frame_bytes = static_cast<size_t>(channels) * bytes_per_sample;
  int num_samples = static_cast<int>(data.size() / frame_bytes);
  AudioBuffer buffer(channels, num_samples, static_cast<int>(sample_rate));
  const unsigned char* raw = reinterpret_cast<const unsigned char*>(data.data());
  for (int i = 0; i < num_samples; ++i) {
    for (int ch = 0; ch < channels; ++ch) {
      const unsigned char* p = raw + i * frame_bytes + ch * bytes_per_sample;
      if (bytes_per_sample == 2) {
        int16_t v = static_cast<int16_t>(p[0] | (p[1] << 8));
        buffer.at(ch, i) = v / 32768.0;
      } else {
        uint32_t u = p[0] | (p[1] << 8) | (p[2] << 16)
            | (static_cast<uint32_t>(p[3]) << 24);
        float f;
        std::memcpy(&f, &u, 4);
        buffer.at(ch, i) = f;
      }
    }
  }
  return buffer;
}

void WriteWav(const AudioBuffer& buffer, const std::string& path,
              WavEncoding encoding) {
  Require(buffer.num_channels >= 1, "WriteWav: buffer has no channels");
  Require(buffer.sample_rate > 0, "WriteWav: invalid sample rate");
  for (double s : buffer.samples)
    Require(std::isfinite(s), "WriteWav: non-finite sample");

  const bool pcm = encoding == WavEncoding::kPcm16;
  const int bytes_per_sample = pcm ? 2 : 4;
  const uint32_t data_size = static_cast<uint32_t>(buffer.samples.size()) *
                             bytes_per_sample;

  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    Require(out.good(), "WriteWav: cannot open " + tmp);

    out.write("RIFF", 4);
    WriteLE<uint32_t>(out, 36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    WriteLE<uint32_t>(out, 16);
    WriteLE<uint16_t>(out, pcm ? kFormatPcm : kFormatFloat);
    WriteLE<uint16_t>(out, static_cast<uint16_t>(buffer.num_channels));
    WriteLE<uint32_t>(out, static_cast<uint32_t>(buffer.sample_rate));
    WriteLE<uint32_t>(out, static_cast<uint32_t>(
        buffer.sample_rate * buffer.num_channels * bytes_per_sample));
    WriteLE<uint16_t>(out, static_cast<uint16_t>(
        buffer.num_channels * bytes_per_sample));
    WriteLE<uint16_t>(out, pcm ? 16 : 32);
    out.write("data", 4);
    WriteLE<uint32_t>(out, data_size);

    for (int i = 0; i < buffer.num_samples; ++i) {
      for (int ch = 0; ch < buffer.num_channels; ++ch) {
        double s = buffer.at(ch, i);
        if (pcm) {
          double scaled = std::round(s * 32768.0);
          if (scaled > 32767.0) scaled = 32767.0;
          if (scaled < -32768.0) scaled = -32768.0;
          WriteLE<int16_t>(out, static_cast<int16_t>(scaled));
        } else {
          WriteLE<float>(out, static_cast<float>(s));
        }
      }
    }
    Require(out.good(), "WriteWav: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace bss
