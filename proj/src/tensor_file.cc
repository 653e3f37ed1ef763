// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bss/tensor_file.h"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "bss/common.h"
#include "bss/io_audit.h"

namespace bss {

namespace {

constexpr char kMagic[8] = {'B', 'S', 'S', 'T', 'N', 'S', 'R', '\0'};
constexpr uint32_t kVersion = 1;

void PutU32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void PutU64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t GetU32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t GetU64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void WriteTensor(const std::string& path, const std::vector<uint64_t>& dims,
                 TensorDtype dtype, const std::vector<float>& payload) {
  uint64_t n = 1;
  for (uint64_t d : dims) n *= d;
  uint64_t expected = dtype == TensorDtype::kComplex64 ? 2 * n : n;
  Require(payload.size() == expected,
          "WriteTensor: payload length does not match dims for " + path);

  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    Require(out.good(), "WriteTensor: cannot open " + tmp);
    out.write(kMagic, 8);
    PutU32(out, kVersion);
    PutU32(out, static_cast<uint32_t>(dtype));
    PutU32(out, static_cast<uint32_t>(dims.size()));
    for (uint64_t d : dims) PutU64(out, d);
    for (float v : payload) {
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      PutU32(out, bits);
    }
    Require(out.good(), "WriteTensor: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

TensorFile ReadTensor(const std::string& path) {
  io_audit::Record(path);
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), "ReadTensor: cannot open " + path);

  char magic[8];
  in.read(magic, 8);
  Require(in.good() && std::memcmp(magic, kMagic, 8) == 0,
          "ReadTensor: bad magic in " + path);
  uint32_t version = GetU32(in);
  Require(version == kVersion,
          "ReadTensor: unsupported version " + std::to_string(version));
  uint32_t dtype_code = GetU32(in);
  Require(dtype_code == 1 || dtype_code == 2,
          "ReadTensor: unknown dtype code " + std::to_string(dtype_code));
  uint32_t ndim = GetU32(in);
  Require(in.good(), "ReadTensor: truncated header in " + path);

  TensorFile t;
  t.dtype = static_cast<TensorDtype>(dtype_code);
  t.dims.resize(ndim);
  for (uint32_t i = 0; i < ndim; ++i) t.dims[i] = GetU64(in);
  Require(in.good(), "ReadTensor: truncated dims in " + path);

  uint64_t n = t.NumElements();
  uint64_t floats = t.dtype == TensorDtype::kComplex64 ? 2 * n : n;
  t.payload.resize(floats);
  for (uint64_t i = 0; i < floats; ++i) {
    uint32_t bits = GetU32(in);
    std::memcpy(&t.payload[i], &bits, 4);
  }
  Require(in.good() || floats == 0, "ReadTensor: truncated payload in " + path);
  return t;
}

void WriteRealTensor(const std::string& path,
                     const std::vector<uint64_t>& dims,
                     const std::vector<double>& values) {
  std::vector<float> payload(values.size());
  for (size_t i = 0; i < values.size(); ++i)
    payload[i] = static_cast<float>(values[i]);
  WriteTensor(path, dims, TensorDtype::kReal32, payload);
}

void WriteComplexTensor(const std::string& path,
                        const std::vector<uint64_t>& dims,
                        const std::vector<std::complex<double>>& values) {
  std::vector<float> payload(2 * values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    payload[2 * i] = static_cast<float>(values[i].real());
    payload[2 * i + 1] = static_cast<float>(values[i].imag());
  }
  WriteTensor(path, dims, TensorDtype::kComplex64, payload);
}

std::vector<double> RealValues(const TensorFile& t) {
  Require(t.dtype == TensorDtype::kReal32, "RealValues: tensor is not real32");
  return std::vector<double>(t.payload.begin(), t.payload.end());
}

std::vector<std::complex<double>> ComplexValues(const TensorFile& t) {
  Require(t.dtype == TensorDtype::kComplex64,
          "ComplexValues: tensor is not complex64");
  std::vector<std::complex<double>> out(t.payload.size() / 2);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = {t.payload[2 * i], t.payload[2 * i + 1]};
  return out;
}

}  // namespace bss
