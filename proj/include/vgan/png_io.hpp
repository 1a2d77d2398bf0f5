#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vgan {

// 8-bit RGB image, row-major, channel-interleaved.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bytes;  // height * width * 3

  std::size_t size() const { return bytes.size(); }
};

RgbImage read_png(const std::string& path);
void write_png(const RgbImage& img, const std::string& path);

}  // namespace vgan
