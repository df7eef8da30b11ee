#include <csetjmp>
#include <cstring>

#include <png.h>

#include "monodtf/kitti_io.hpp"

namespace monodtf {

namespace {

struct MemoryReader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t len) {
  auto* r = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (r->pos + len > r->bytes.size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, r->bytes.data() + r->pos, len);
  r->pos += len;
}

void write_callback(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void flush_callback(png_structp) {}

int channels_of(int color_type) {
  switch (color_type) {
    case PNG_COLOR_TYPE_GRAY: return 1;
    case PNG_COLOR_TYPE_GRAY_ALPHA: return 2;
    case PNG_COLOR_TYPE_RGB: return 3;
    case PNG_COLOR_TYPE_RGB_ALPHA: return 4;
    case PNG_COLOR_TYPE_PALETTE: return 1;
    default: return 0;
  }
}

}  // namespace

RawImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::IoError, "data is not a PNG image");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }
  MemoryReader reader{bytes, 0};
  RawImage img;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "corrupt PNG data");
  }
  png_set_read_fn(png, &reader, read_callback);
  png_read_info(png, info);
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  img.channels = channels_of(png_get_color_type(png, info));
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) {
    // Palette images are never depth maps; report them as colour data.
    img.channels = 3;
    png_set_palette_to_rgb(png);
  }
  if (img.bit_depth < 8) png_set_packing(png);
  png_read_update_info(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * img.height);
  rows.resize(img.height);
  for (std::size_t r = 0; r < img.height; ++r) rows[r] = buffer.data() + r * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count = img.width * img.height * static_cast<std::size_t>(img.channels);
  img.samples.resize(count);
  if (img.bit_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      img.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] << 8 | buffer[2 * i + 1]);  // PNG is big-endian
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) img.samples[i] = buffer[i];
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const RawImage& image) {
  int color_type = 0;
  switch (image.channels) {
    case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
    case 2: color_type = PNG_COLOR_TYPE_GRAY_ALPHA; break;
    case 3: color_type = PNG_COLOR_TYPE_RGB; break;
    case 4: color_type = PNG_COLOR_TYPE_RGB_ALPHA; break;
    default: throw Error(ErrorCode::WrongChannelCount, "PNG channel count must be 1-4");
  }
  if (image.bit_depth != 8 && image.bit_depth != 16) {
    throw Error(ErrorCode::WrongBitDepth, "only 8- and 16-bit PNG output is supported");
  }
  const std::size_t count = image.width * image.height * static_cast<std::size_t>(image.channels);
  if (image.samples.size() != count) throw Error(ErrorCode::DimMismatch, "PNG sample count does not match size");

  const std::size_t bytes_per_sample = image.bit_depth / 8;
  std::vector<std::uint8_t> buffer(count * bytes_per_sample);
  for (std::size_t i = 0; i < count; ++i) {
    if (bytes_per_sample == 2) {
      buffer[2 * i] = static_cast<std::uint8_t>(image.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<std::uint8_t>(image.samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<std::uint8_t>(image.samples[i]);
    }
  }
  const std::size_t row_bytes = image.width * static_cast<std::size_t>(image.channels) * bytes_per_sample;
  std::vector<png_bytep> rows(image.height);
  for (std::size_t r = 0; r < image.height; ++r) rows[r] = buffer.data() + r * row_bytes;

  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height),
               image.bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace monodtf
