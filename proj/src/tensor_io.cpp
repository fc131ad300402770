// SPDX-License-Identifier: Apache-2.0
#include "hoi/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>

namespace hoi {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

namespace {

std::size_t product(std::span<const std::uint32_t> dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return bytes_.size() - pos_ >= n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint16_t u16() {
    need(2, "header");
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4, "header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (!has(n)) {
      throw Error(ErrorCode::TruncatedPayload, std::string("file ends inside ") + what);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Tensor::Tensor(std::vector<std::uint32_t> dims_, std::vector<float> data_)
    : dims(std::move(dims_)), data(std::move(data_)) {
  if (product(dims) != data.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "dims hold " + std::to_string(product(dims)) + " elements but " +
                    std::to_string(data.size()) + " were given");
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols) {
  return Tensor({static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)},
                std::vector<float>(rows * cols, 0.0f));
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw Error(ErrorCode::DimensionMismatch, "expected a rank-2 tensor");
  return dims[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw Error(ErrorCode::DimensionMismatch, "expected a rank-2 tensor");
  return dims[1];
}

std::span<const float> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const float>(data).subspan(r * c, c);
}

std::span<float> Tensor::row(std::size_t r) {
  const std::size_t c = cols();
  return std::span<float>(data).subspan(r * c, c);
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (product(t.dims) != t.data.size()) {
    throw Error(ErrorCode::DimensionMismatch, "tensor dims disagree with payload");
  }
  std::vector<std::uint8_t> out;
  out.reserve(12 + 4 * t.dims.size() + 4 * t.data.size());
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  put_u16(out, kTensorVersion);
  put_u16(out, kDtypeF32);
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  for (float f : t.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kTensorMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a DYTF tensor file");
  }
  Reader in(bytes.subspan(4));
  const auto version = in.u16();
  if (version != kTensorVersion) {
    throw Error(ErrorCode::BadVersion, "unsupported version " + std::to_string(version));
  }
  const auto dtype = in.u16();
  if (dtype != kDtypeF32) {
    throw Error(ErrorCode::UnsupportedDtype, "dtype code " + std::to_string(dtype));
  }
  const auto rank = in.u32();
  if (!in.has(static_cast<std::size_t>(rank) * 4)) {
    throw Error(ErrorCode::TruncatedPayload, "file ends inside the dims block");
  }
  std::vector<std::uint32_t> dims(rank);
  for (auto& d : dims) d = in.u32();

  const std::size_t count = product(dims);
  if (in.remaining() / 4 < count) {
    throw Error(ErrorCode::TruncatedPayload,
                "declared " + std::to_string(count) + " floats, found " +
                    std::to_string(in.remaining() / 4));
  }
  if (in.remaining() != count * 4) {
    throw Error(ErrorCode::TrailingData,
                std::to_string(in.remaining() - count * 4) + " bytes after payload");
  }
  std::vector<float> data(count);
  auto payload = in.take(count * 4);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(payload[4 * i + b]) << (8 * b);
    data[i] = std::bit_cast<float>(bits);
  }
  return Tensor(std::move(dims), std::move(data));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f), {});
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

Tensor read_tensor(const std::filesystem::path& path) {
  return decode_tensor(read_file_bytes(path));
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  write_file_bytes(path, encode_tensor(t));
}

}  // namespace hoi
