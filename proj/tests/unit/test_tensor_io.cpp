// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstring>
#include <limits>
#include <random>

#include "hoi/json_io.hpp"
#include "hoi/tensor_io.hpp"
#include "test_support.hpp"

using namespace hoi;

namespace {

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_tensor(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode unexpectedly succeeded");
  return ErrorCode::Usage;
}

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("2x3 matrix round trip") {
  const auto dir = test::scratch_dir("tensor_rt");
  Tensor t({2, 3}, {1.5f, -2.0f, 0.25f, 3.0f, 1e-30f, -0.0f});
  write_tensor(t, dir / "m.dytf");
  const Tensor back = read_tensor(dir / "m.dytf");
  CHECK(back.dims == std::vector<std::uint32_t>{2, 3});
  CHECK(same_bits(back.data, t.data));
  CHECK(std::filesystem::file_size(dir / "m.dytf") == 4 + 2 + 2 + 4 + 2 * 4 + 6 * 4);
}

TEST_CASE("header layout is little-endian") {
  const auto bytes = encode_tensor(Tensor({1}, {1.0f}));
  REQUIRE(bytes.size() == 4 + 2 + 2 + 4 + 4 + 4);
  CHECK(std::memcmp(bytes.data(), "DYTF", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 1);
  CHECK(bytes[8] == 1);   // rank
  CHECK(bytes[12] == 1);  // dim 0
  // 1.0f = 0x3f800000
  CHECK(bytes[16] == 0x00);
  CHECK(bytes[19] == 0x3f);
}

TEST_CASE("random tensors round trip bit-exactly, including special values") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::uint32_t> dim(1, 6), rank(0, 4);
  std::uniform_int_distribution<std::uint32_t> bits;
  for (int t = 0; t < 100; ++t) {
    std::vector<std::uint32_t> dims(rank(rng));
    std::size_t n = 1;
    for (auto& x : dims) {
      x = dim(rng);
      n *= x;
    }
    std::vector<float> data(n);
    for (auto& x : data) {
      const std::uint32_t b = bits(rng);
      std::memcpy(&x, &b, sizeof x);
    }
    const Tensor in(dims, data);
    const Tensor out = decode_tensor(encode_tensor(in));
    CHECK(out.dims == in.dims);
    CHECK(same_bits(out.data, in.data));
  }
}

TEST_CASE("empty tensor is allowed") {
  const Tensor t({0, 5}, {});
  const Tensor back = decode_tensor(encode_tensor(t));
  CHECK(back.dims == t.dims);
  CHECK(back.data.empty());
}

TEST_CASE("tensor constructor checks payload length") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<float>(5)), Error);
}

TEST_CASE("corrupted headers raise the specified errors") {
  const auto good = encode_tensor(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(decode_error(bad_magic) == ErrorCode::BadMagic);

  auto bad_version = good;
  bad_version[4] = 9;
  CHECK(decode_error(bad_version) == ErrorCode::BadVersion);

  auto bad_dtype = good;
  bad_dtype[6] = 2;
  CHECK(decode_error(bad_dtype) == ErrorCode::UnsupportedDtype);

  // Declared 2x3, only 5 floats present.
  auto truncated = good;
  truncated.resize(truncated.size() - 4);
  CHECK(decode_error(truncated) == ErrorCode::TruncatedPayload);

  auto short_header = std::vector<std::uint8_t>(good.begin(), good.begin() + 6);
  CHECK(decode_error(short_header) == ErrorCode::TruncatedPayload);

  auto trailing = good;
  trailing.push_back(0);
  CHECK(decode_error(trailing) == ErrorCode::TrailingData);
}

TEST_CASE("missing file is an IO error") {
  try {
    read_tensor("/nonexistent/dir/x.dytf");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("json helpers") {
  const auto dir = test::scratch_dir("json_io");
  const Detection d{{1, 2, 3, 4}, "cup", 0.5};
  CHECK(detection_from_json(detection_to_json(d)) == d);
  CHECK(box_from_json(Json::array({0, 0, 1, 1})) == Box{0, 0, 1, 1});
  CHECK_THROWS_AS(box_from_json(Json::array({0, 0, 1})), Error);
  CHECK_THROWS_AS(box_from_json(Json::array({2, 0, 1, 1})), Error);

  Vocabulary v({test::category(0, true), test::category(1)}, "human");
  save_vocabulary(v, dir / "vocab.json");
  const Vocabulary back = load_vocabulary(dir / "vocab.json");
  CHECK(back.person_label() == "human");
  CHECK(back.categories() == v.categories());

  write_text_file(dir / "broken.json", "{ not json");
  try {
    read_json(dir / "broken.json");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
}
