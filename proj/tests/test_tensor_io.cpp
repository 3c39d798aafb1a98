#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include "burstsr/color.hpp"
#include "burstsr/error.hpp"
#include "burstsr/io.hpp"
#include "burstsr/tensor.hpp"
#include "test_support.hpp"

namespace burstsr {
namespace {

using testing::TempDir;

std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::uint32_t le_u32(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

TEST(Tensor, ShapeAndIndexing) {
  Image t(2, 3, 4);
  EXPECT_EQ(t.shape(), (Shape{2, 3, 4}));
  EXPECT_EQ(t.size(), 24);
  t(1, 2, 3) = 5.0;
  EXPECT_EQ(t.array()[((1 * 3) + 2) * 4 + 3], 5.0);
  EXPECT_TRUE((t.array() == 0.0).count() == 23);
}

TEST(Tensor, ArithmeticRequiresMatchingShapes) {
  Image a(2, 2, 1), b(2, 3, 1);
  EXPECT_THROW(a += b, DimensionError);
  EXPECT_THROW(Image(Shape{2, 2, 1}, Image::Storage::Zero(3)), DimensionError);
}

TEST(Tensor, BurstValidatesFrames) {
  std::vector<RawFrame> frames{RawFrame(4, 4), RawFrame(4, 5)};
  EXPECT_THROW(Burst{frames}, DimensionError);
  EXPECT_THROW(Burst(std::vector<RawFrame>{}), ArgumentError);
  EXPECT_THROW(Burst(std::vector<RawFrame>{RawFrame(4, 4)}, 1), ArgumentError);
}

TEST(TensorFile, RoundTripIsExactForFloatValues) {
  TempDir dir("tensor");
  std::mt19937_64 rng(1);
  const Image t = testing::random_image(5, 7, 3, rng).cast<float>().cast<double>();
  write_tensor(t, dir.path() / "t.btf");
  const Image back = read_tensor<double>(dir.path() / "t.btf");
  ASSERT_EQ(back.shape(), t.shape());
  EXPECT_TRUE((back.array() == t.array()).all());
}

TEST(TensorFile, HeaderLayout) {
  TempDir dir("tensor");
  Image t(384, 384, 3);
  t(0, 1, 2) = 0.75;
  write_tensor(t, dir.path() / "gt.btf");
  const auto b = file_bytes(dir.path() / "gt.btf");
  ASSERT_EQ(b.size(), 24u + 384u * 384u * 3u * 4u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "BTF1");
  EXPECT_EQ(le_u32(b, 4), 3u);
  EXPECT_EQ(le_u32(b, 8), 384u);
  EXPECT_EQ(le_u32(b, 12), 384u);
  EXPECT_EQ(le_u32(b, 16), 3u);
  EXPECT_EQ(le_u32(b, 20), 0u);
  // Element (0, 1, 2) is the sixth float of the payload.
  float v;
  const std::uint32_t bits = le_u32(b, 24 + 5 * 4);
  std::memcpy(&v, &bits, 4);
  EXPECT_EQ(v, 0.75f);
}

TEST(TensorFile, PackedFrameShape) {
  TempDir dir("tensor");
  write_tensor(Image(48, 48, 4), dir.path() / "f.btf");
  EXPECT_EQ(read_tensor<float>(dir.path() / "f.btf").shape(), (Shape{48, 48, 4}));
}

TEST(TensorFile, ZeroTensor) {
  TempDir dir("tensor");
  write_tensor(Image(2, 2, 1), dir.path() / "z.btf");
  const Image z = read_tensor<double>(dir.path() / "z.btf");
  EXPECT_EQ(z.shape(), (Shape{2, 2, 1}));
  EXPECT_TRUE((z.array() == 0.0).all());
}

TEST(TensorFile, BadMagicIsFormatError) {
  TempDir dir("tensor");
  write_tensor(Image(2, 2, 1), dir.path() / "x.btf");
  {
    std::fstream f(dir.path() / "x.btf", std::ios::binary | std::ios::in | std::ios::out);
    f.write("XXXX", 4);
  }
  EXPECT_THROW(read_tensor<double>(dir.path() / "x.btf"), FormatError);
}

TEST(TensorFile, TruncatedPayloadAndMissingFileAreIoErrors) {
  TempDir dir("tensor");
  write_tensor(Image(4, 4, 2), dir.path() / "t.btf");
  std::filesystem::resize_file(dir.path() / "t.btf", 40);
  EXPECT_THROW(read_tensor<double>(dir.path() / "t.btf"), IoError);
  EXPECT_THROW(read_tensor<double>(dir.path() / "missing.btf"), IoError);
}

TEST(TensorFile, RoundTripPropertyOverRandomShapes) {
  TempDir dir("tensor");
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> hw(1, 64), ch(1, 4);
  for (int trial = 0; trial < 25; ++trial) {
    const Tensor3<float> t =
        testing::random_image(hw(rng), hw(rng), ch(rng), rng, -10.0, 10.0).cast<float>();
    write_tensor(t, dir.path() / "p.btf");
    const Tensor3<float> back = read_tensor<float>(dir.path() / "p.btf");
    ASSERT_EQ(back.shape(), t.shape());
    ASSERT_TRUE((back.array() == t.array()).all());
  }
}

TEST(Color, SrgbCurveMatchesPiecewiseDefinition) {
  for (double v : {0.0, 0.001, 0.0031308, 0.2, 0.5, 1.0}) {
    const double expected = v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
    EXPECT_NEAR(srgb_encode(v), expected, 1e-15);
  }
}

TEST(Color, EncodeDecodeRoundTrip) {
  double worst = 0.0;
  for (int i = 0; i < 256; ++i) {
    const double v = i / 255.0;
    worst = std::max(worst, std::abs(srgb_encode(srgb_decode(v)) - v));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Png, SixteenBitWhiteReadsAsOne) {
  TempDir dir("png");
  write_png(Image::constant(3, 5, 3, 1.0), dir.path() / "w.png", 16);
  const auto b = file_bytes(dir.path() / "w.png");
  ASSERT_GT(b.size(), 25u);
  EXPECT_EQ(b[24], 16);  // IHDR bit depth
  const Image img = read_srgb_png(dir.path() / "w.png");
  EXPECT_EQ(img.shape(), (Shape{3, 5, 3}));
  EXPECT_TRUE((img.array() == 1.0).all());
}

TEST(Png, EightBitValueReadsAsFractionOf255) {
  TempDir dir("png");
  write_png(Image::constant(2, 2, 3, 128.0 / 255.0), dir.path() / "g.png", 8);
  EXPECT_EQ(file_bytes(dir.path() / "g.png")[24], 8);
  const Image img = read_srgb_png(dir.path() / "g.png");
  EXPECT_DOUBLE_EQ(img(1, 1, 2), 128.0 / 255.0);
}

TEST(Png, LinearHalfWritesAs188) {
  TempDir dir("png");
  write_srgb_png(Image::constant(1, 1, 3, 0.5), dir.path() / "h.png", 8);
  const double code = std::round((1.055 * std::pow(0.5, 1.0 / 2.4) - 0.055) * 255.0);
  ASSERT_EQ(code, 188.0);
  EXPECT_DOUBLE_EQ(read_srgb_png(dir.path() / "h.png")(0, 0, 0), 188.0 / 255.0);
}

TEST(Png, OutOfRangeValuesAreClamped) {
  TempDir dir("png");
  Image img(1, 2, 3);
  img(0, 0, 0) = -0.5;
  img(0, 1, 0) = 3.0;
  write_srgb_png(img, dir.path() / "c.png");
  const Image back = read_srgb_png(dir.path() / "c.png");
  EXPECT_EQ(back(0, 0, 0), 0.0);
  EXPECT_EQ(back(0, 1, 0), 1.0);
}

TEST(Png, NonPngIsRejected) {
  TempDir dir("png");
  std::ofstream(dir.path() / "bad.png") << "not a png";
  EXPECT_THROW(read_srgb_png(dir.path() / "bad.png"), Error);
  EXPECT_THROW(read_srgb_png(dir.path() / "missing.png"), IoError);
}

}  // namespace
}  // namespace burstsr
