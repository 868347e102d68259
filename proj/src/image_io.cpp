#include "stagesplat/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <png.h>

#include "stagesplat/error.hpp"

namespace stagesplat {

namespace {

std::vector<png_byte> quantize(std::span<const double> rgb) {
  std::vector<png_byte> out(rgb.size());
  for (std::size_t k = 0; k < rgb.size(); ++k)
    out[k] = static_cast<png_byte>(std::lround(std::clamp(rgb[k], 0.0, 1.0) * 255.0));
  return out;
}

// Kept free of objects with non-trivial destructors because of setjmp.
bool encode(FILE* fp, const png_byte* pixels, int width, int height) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) png_write_row(png, pixels + static_cast<std::size_t>(y) * width * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

void write_png(const std::string& path, std::span<const double> rgb, int width, int height) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) throw IoError("image size does not match dimensions");
  const std::vector<png_byte> pixels = quantize(rgb);
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot open '" + path + "' for writing");
  if (!encode(fp.get(), pixels.data(), width, height)) throw IoError("PNG encoding failed for '" + path + "'");
}

static_assert(std::endian::native == std::endian::little, "raw dumps assume a little-endian host");

void write_raw(const std::string& path, std::span<const double> data, int height, int width, int channels) {
  if (data.size() != static_cast<std::size_t>(height) * width * channels) throw IoError("raw dump shape mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << height << ' ' << width << ' ' << channels << '\n';
  for (double v : data) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(float));
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

RawImage read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  RawImage r;
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  if (!(hs >> r.height >> r.width >> r.channels)) throw ParseError("raw dump header must be 'H W C'");
  r.data.resize(static_cast<std::size_t>(r.height) * r.width * r.channels);
  in.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(r.data.size() * sizeof(float)));
  if (!in) throw ParseError("raw dump body is truncated");
  return r;
}

}  // namespace stagesplat
