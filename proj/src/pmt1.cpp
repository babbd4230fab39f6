#include "pressmap/pmt1.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "pressmap/error.hpp"

namespace pressmap::pmt1 {
namespace {

constexpr std::array<char, 4> kMagic{'P', 'M', 'T', '1'};

template <typename U>
void put_le(std::byte* dst, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    dst[i] = static_cast<std::byte>((v >> (8 * i)) & 0xFF);
  }
}

template <typename U>
U get_le(const std::byte* src) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(std::to_integer<std::uint8_t>(src[i])) << (8 * i);
  }
  return v;
}

void read_exact(std::istream& in, void* dst, std::size_t n, const char* what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw Error(ErrorCode::IoError, std::string("truncated PMT1 stream while reading ") + what);
  }
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::F32: return 4;
    case DType::F64: return 8;
    case DType::U8: return 1;
  }
  throw Error(ErrorCode::IoError, "unknown PMT1 dtype");
}

std::size_t RawTensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write(std::ostream& out, const RawTensor& t) {
  if (t.dims.size() > 255) throw Error(ErrorCode::IoError, "PMT1 supports at most 255 dims");
  if (t.payload.size() != t.element_count() * dtype_size(t.dtype)) {
    throw Error(ErrorCode::IoError, "PMT1 payload length does not match dims");
  }
  std::vector<std::byte> header(6 + 4 * t.dims.size());
  std::memcpy(header.data(), kMagic.data(), 4);
  header[4] = static_cast<std::byte>(t.dtype);
  header[5] = static_cast<std::byte>(t.dims.size());
  for (std::size_t i = 0; i < t.dims.size(); ++i) put_le<std::uint32_t>(&header[6 + 4 * i], t.dims[i]);
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(t.payload.data()), static_cast<std::streamsize>(t.payload.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing PMT1 stream");
}

RawTensor read(std::istream& in) {
  std::array<char, 4> magic{};
  read_exact(in, magic.data(), 4, "magic");
  if (magic != kMagic) throw Error(ErrorCode::IoError, "bad PMT1 magic");
  std::array<std::uint8_t, 2> meta{};
  read_exact(in, meta.data(), 2, "header");
  RawTensor t;
  if (meta[0] > 2) throw Error(ErrorCode::IoError, "unknown PMT1 dtype code " + std::to_string(meta[0]));
  t.dtype = static_cast<DType>(meta[0]);
  std::vector<std::byte> dims_raw(4 * meta[1]);
  read_exact(in, dims_raw.data(), dims_raw.size(), "dims");
  t.dims.resize(meta[1]);
  for (std::size_t i = 0; i < t.dims.size(); ++i) t.dims[i] = get_le<std::uint32_t>(&dims_raw[4 * i]);
  t.payload.resize(t.element_count() * dtype_size(t.dtype));
  read_exact(in, t.payload.data(), t.payload.size(), "payload");
  return t;
}

void write_file(const std::filesystem::path& path, const RawTensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write(out, t);
}

RawTensor read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read(in);
}

RawTensor encode(const Tensor& t, DType dtype) {
  RawTensor raw;
  raw.dtype = dtype;
  for (auto d : t.shape) {
    if (d > 0xFFFFFFFFu) throw Error(ErrorCode::IoError, "dimension exceeds u32");
    raw.dims.push_back(static_cast<std::uint32_t>(d));
  }
  const std::size_t width = dtype_size(dtype);
  raw.payload.resize(t.size() * width);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::byte* dst = &raw.payload[i * width];
    switch (dtype) {
      case DType::F64: put_le<std::uint64_t>(dst, std::bit_cast<std::uint64_t>(t.data[i])); break;
      case DType::F32:
        put_le<std::uint32_t>(dst, std::bit_cast<std::uint32_t>(static_cast<float>(t.data[i])));
        break;
      case DType::U8: {
        const double v = t.data[i];
        if (!(v >= 0.0 && v <= 255.0) || std::floor(v) != v) {
          throw Error(ErrorCode::IoError, "value not representable as u8");
        }
        *dst = static_cast<std::byte>(static_cast<std::uint8_t>(v));
        break;
      }
    }
  }
  return raw;
}

Tensor decode(const RawTensor& raw) {
  Shape shape(raw.dims.begin(), raw.dims.end());
  Tensor t(shape);
  const std::size_t width = dtype_size(raw.dtype);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::byte* src = &raw.payload[i * width];
    switch (raw.dtype) {
      case DType::F64: t.data[i] = std::bit_cast<double>(get_le<std::uint64_t>(src)); break;
      case DType::F32: t.data[i] = std::bit_cast<float>(get_le<std::uint32_t>(src)); break;
      case DType::U8: t.data[i] = std::to_integer<std::uint8_t>(*src); break;
    }
  }
  return t;
}

}  // namespace pressmap::pmt1
