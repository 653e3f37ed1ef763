// Copyright 2026 BSS Pipeline Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BSS_TENSOR_FILE_H_
#define BSS_TENSOR_FILE_H_

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace bss {

// On-disk tensor container: 8-byte magic "BSSTNSR\0", u32 version, u32 dtype
// code, u32 ndim, ndim x u64 dims, then the row-major little-endian payload.
enum class TensorDtype : uint32_t { kReal32 = 1, kComplex64 = 2 };

struct TensorFile {
  TensorDtype dtype = TensorDtype::kReal32;
  std::vector<uint64_t> dims;
  // Raw float payload; complex64 stores interleaved (re, im) pairs.
  std::vector<float> payload;

  uint64_t NumElements() const {
    uint64_t n = 1;
    for (uint64_t d : dims) n *= d;
    return n;
  }
};

void WriteTensor(const std::string& path, const std::vector<uint64_t>& dims,
                 TensorDtype dtype, const std::vector<float>& payload);
TensorFile ReadTensor(const std::string& path);

// Convenience wrappers used across the pipeline.
void WriteRealTensor(const std::string& path,
                     const std::vector<uint64_t>& dims,
                     const std::vector<double>& values);
void WriteComplexTensor(const std::string& path,
                        const std::vector<uint64_t>& dims,
                        const std::vector<std::complex<double>>& values);
std::vector<double> RealValues(const TensorFile& t);
std::vector<std::complex<double>> ComplexValues(const TensorFile& t);

}  // namespace bss

#endif  // BSS_TENSOR_FILE_H_
