#pragma once

#include <span>
#include <string>
#include <vector>

namespace stagesplat {

/// 8-bit RGB PNG from an H*W*3 image in [0,1] (clamped, rounded).
void write_png(const std::string& path, std::span<const double> rgb, int width, int height);

/// Raw dump: ASCII header "H W C\n" followed by little-endian float32
/// values in row-major order.
void write_raw(const std::string& path, std::span<const double> data, int height, int width, int channels);

struct RawImage {
  int height = 0, width = 0, channels = 0;
  std::vector<float> data;
};
RawImage read_raw(const std::string& path);

}  // namespace stagesplat
