// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hoi/error.hpp"

namespace hoi {

// DYTF tensor files, all integers little-endian:
//
//    magic    - "DYTF" (4 bytes)
//    version  - u16, currently 1
//    dtype    - u16, 1 = f32 little-endian
//    rank     - u32
//    dims     - rank x u32
//    payload  - product(dims) x f32, row-major
//
// Nothing may follow the payload.

inline constexpr char kTensorMagic[4] = {'D', 'Y', 'T', 'F'};
inline constexpr std::uint16_t kTensorVersion = 1;
inline constexpr std::uint16_t kDtypeF32 = 1;

/// Dense row-major f32 tensor.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint32_t> dims_, std::vector<float> data_);

  static Tensor matrix(std::size_t rows, std::size_t cols);

  std::size_t rank() const noexcept { return dims.size(); }
  std::size_t element_count() const noexcept { return data.size(); }

  // Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;
  std::span<const float> row(std::size_t r) const;
  std::span<float> row(std::size_t r);

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
/// Throws BadMagic, BadVersion, UnsupportedDtype, TruncatedPayload or
/// TrailingData.
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace hoi
