#pragma once

// PMT1 tensor files.
//
//   bytes 0..3   magic "PMT1"
//   byte  4      dtype code: 0 = f32, 1 = f64, 2 = u8
//   byte  5      ndim
//   ndim x u32   dims, little-endian
//   payload      row-major, little-endian, product(dims) * sizeof(dtype) bytes

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "pressmap/tensor.hpp"

namespace pressmap::pmt1 {

enum class DType : std::uint8_t { F32 = 0, F64 = 1, U8 = 2 };

std::size_t dtype_size(DType dtype);

// A tensor exactly as stored on disk. Payload bytes are little-endian.
struct RawTensor {
  DType dtype = DType::F64;
  std::vector<std::uint32_t> dims;
  std::vector<std::byte> payload;

  std::size_t element_count() const;
};

void write(std::ostream& out, const RawTensor& t);
RawTensor read(std::istream& in);

void write_file(const std::filesystem::path& path, const RawTensor& t);
RawTensor read_file(const std::filesystem::path& path);

// Conversions between the on-disk form and in-memory doubles. Encoding to
// F32 rounds; encoding to U8 requires integral values in [0, 255].
RawTensor encode(const Tensor& t, DType dtype = DType::F64);
Tensor decode(const RawTensor& raw);

inline void save(const std::filesystem::path& path, const Tensor& t, DType dtype = DType::F64) {
  write_file(path, encode(t, dtype));
}
inline Tensor load(const std::filesystem::path& path) { return decode(read_file(path)); }

}  // namespace pressmap::pmt1
