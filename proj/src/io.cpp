#include "burstsr/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "burstsr/color.hpp"

namespace burstsr {
namespace {

constexpr std::array<char, 4> kMagic = {'B', 'T', 'F', '1'};
constexpr std::uint32_t kFloat32 = 0;

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::istream& is, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw IoError("truncated tensor header in " + path.string());
  }
  return to_little(v);
}

}  // namespace

template <typename Scalar>
Tensor3<Scalar> read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());

  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size())) {
    throw IoError("truncated tensor header in " + path.string());
  }
  if (magic != kMagic) throw FormatError("bad tensor magic in " + path.string());

  const std::uint32_t ndim = get_u32(is, path);
  if (ndim != 3) {
    throw FormatError(path.string() + ": expected 3 dims, found " + std::to_string(ndim));
  }
  Shape shape;
  shape.height = get_u32(is, path);
  shape.width = get_u32(is, path);
  shape.channels = get_u32(is, path);
  const std::uint32_t dtype = get_u32(is, path);
  if (dtype != kFloat32) {
    throw FormatError(path.string() + ": unsupported dtype " + std::to_string(dtype));
  }

  std::vector<std::uint32_t> raw(static_cast<std::size_t>(shape.size()));
  const auto bytes = static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t));
  if (!is.read(reinterpret_cast<char*>(raw.data()), bytes)) {
    throw IoError("truncated tensor payload in " + path.string());
  }
  typename Tensor3<Scalar>::Storage data(shape.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    data[static_cast<Index>(i)] = static_cast<Scalar>(std::bit_cast<float>(to_little(raw[i])));
  }
  return Tensor3<Scalar>(shape, std::move(data));
}

template <typename Scalar>
void write_tensor(const Tensor3<Scalar>& t, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, 3);
  put_u32(os, static_cast<std::uint32_t>(t.height()));
  put_u32(os, static_cast<std::uint32_t>(t.width()));
  put_u32(os, static_cast<std::uint32_t>(t.channels()));
  put_u32(os, kFloat32);
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(t.size()));
  for (Index i = 0; i < t.size(); ++i) {
    raw[static_cast<std::size_t>(i)] =
        to_little(std::bit_cast<std::uint32_t>(static_cast<float>(t.array()[i])));
  }
  os.write(reinterpret_cast<const char*>(raw.data()),
           static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
  if (!os) throw IoError("failed writing " + path.string());
}

template Tensor3<float> read_tensor<float>(const std::filesystem::path&);
template Tensor3<double> read_tensor<double>(const std::filesystem::path&);
template void write_tensor<float>(const Tensor3<float>&, const std::filesystem::path&);
template void write_tensor<double>(const Tensor3<double>&, const std::filesystem::path&);

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors through longjmp, so the setjmp frames below only
// touch plain locals and caller-owned memory.

struct PngInfo {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::size_t row_bytes = 0;
};

bool png_read_header(png_structp png, png_infop info, std::FILE* fp, PngInfo* out) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  out->color_type = png_get_color_type(png, info);
  if (out->color_type == PNG_COLOR_TYPE_RGB && out->bit_depth == 16 &&
      std::endian::native == std::endian::little) {
    png_set_swap(png);
  }
  png_read_update_info(png, info);
  out->row_bytes = png_get_rowbytes(png, info);
  return true;
}

bool png_read_rows(png_structp png, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

bool png_write_all(png_structp png, png_infop info, std::FILE* fp, const PngInfo* hdr,
                   png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_set_IHDR(png, info, hdr->width, hdr->height, hdr->bit_depth, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

}  // namespace

Image read_srgb_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + " is not a PNG file");
  }

  PngReader reader;
  reader.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (reader.png) reader.info = png_create_info_struct(reader.png);
  if (!reader.png || !reader.info) throw IoError("libpng initialisation failed");

  PngInfo hdr;
  if (!png_read_header(reader.png, reader.info, fp.get(), &hdr)) {
    throw FormatError("corrupt PNG " + path.string());
  }
  if (hdr.color_type != PNG_COLOR_TYPE_RGB || (hdr.bit_depth != 8 && hdr.bit_depth != 16)) {
    throw FormatError(path.string() + ": expected 8- or 16-bit RGB PNG");
  }

  std::vector<png_byte> buffer(hdr.row_bytes * hdr.height);
  std::vector<png_bytep> rows(hdr.height);
  for (png_uint_32 y = 0; y < hdr.height; ++y) rows[y] = buffer.data() + y * hdr.row_bytes;
  if (!png_read_rows(reader.png, rows.data())) throw FormatError("corrupt PNG " + path.string());

  Image img(hdr.height, hdr.width, 3);
  const double max_value = hdr.bit_depth == 16 ? 65535.0 : 255.0;
  for (Index i = 0; i < img.size(); ++i) {
    double v;
    if (hdr.bit_depth == 16) {
      std::uint16_t s;
      std::memcpy(&s, buffer.data() + 2 * i, 2);
      v = s;
    } else {
      v = buffer[static_cast<std::size_t>(i)];
    }
    img.array()[i] = v / max_value;
  }
  return img;
}

void write_png(const Image& encoded, const std::filesystem::path& path, int bit_depth) {
  if (encoded.channels() != 3) throw FormatError("PNG output needs 3 channels");
  if (bit_depth != 8 && bit_depth != 16) throw ArgumentError("bit depth must be 8 or 16");

  const double max_value = bit_depth == 16 ? 65535.0 : 255.0;
  const std::size_t bytes_per_sample = static_cast<std::size_t>(bit_depth / 8);
  const std::size_t row_bytes = static_cast<std::size_t>(encoded.width()) * 3 * bytes_per_sample;
  std::vector<png_byte> buffer(row_bytes * static_cast<std::size_t>(encoded.height()));
  for (Index i = 0; i < encoded.size(); ++i) {
    const double v = std::clamp(encoded.array()[i], 0.0, 1.0);
    const auto q = static_cast<std::uint32_t>(std::lround(v * max_value));
    if (bit_depth == 16) {
      // PNG stores 16-bit samples big-endian.
      buffer[2 * i] = static_cast<png_byte>(q >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(q & 0xFF);
    } else {
      buffer[i] = static_cast<png_byte>(q);
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(encoded.height()));
  for (std::size_t y = 0; y < rows.size(); ++y) rows[y] = buffer.data() + y * row_bytes;

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open " + path.string() + " for writing");
  PngWriter writer;
  writer.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (writer.png) writer.info = png_create_info_struct(writer.png);
  if (!writer.png || !writer.info) throw IoError("libpng initialisation failed");

  PngInfo hdr;
  hdr.width = static_cast<png_uint_32>(encoded.width());
  hdr.height = static_cast<png_uint_32>(encoded.height());
  hdr.bit_depth = bit_depth;
  if (!png_write_all(writer.png, writer.info, fp.get(), &hdr, rows.data())) {
    throw IoError("failed writing " + path.string());
  }
}

void write_srgb_png(const Image& linear, const std::filesystem::path& path, int bit_depth) {
  write_png(srgb_encode(clamp(linear, 0.0, 1.0)), path, bit_depth);
}

}  // namespace burstsr
