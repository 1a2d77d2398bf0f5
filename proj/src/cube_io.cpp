#include <cstdint>
#include <cstring>
#include <fstream>

#include "vgan/data.hpp"
#include "vgan/errors.hpp"

namespace vgan {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'C', '1'};
constexpr std::uint32_t kMaxExtent = 1u << 20;

std::uint32_t read_u32(std::istream& in, const std::string& what) {
  std::uint32_t v = 0;
  std::uint8_t buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4))
    throw FormatError("truncated cube file reading " + what);
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  std::uint8_t buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

SpectralCube load_cube(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("bad magic in " + path);
  SpectralCube cube;
  const std::uint32_t h = read_u32(in, "height");
  const std::uint32_t w = read_u32(in, "width");
  const std::uint32_t b = read_u32(in, "bands");
  if (h == 0 || w == 0 || b == 0 || h > kMaxExtent || w > kMaxExtent ||
      b > kMaxExtent)
    throw FormatError("implausible cube dimensions in " + path);
  cube.height = static_cast<int>(h);
  cube.width = static_cast<int>(w);
  cube.bands = static_cast<int>(b);
  const std::size_t n = static_cast<std::size_t>(h) * w * b;
  std::vector<float> seq(n);
  if (!in.read(reinterpret_cast<char*>(seq.data()),
               static_cast<std::streamsize>(n * sizeof(float))))
    throw FormatError("truncated payload in " + path);
  // Band-sequential on disk -> channel-interleaved in memory.
  cube.values.resize(n);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::uint32_t band = 0; band < b; ++band)
    for (std::size_t p = 0; p < plane; ++p)
      cube.values[p * b + band] = seq[band * plane + p];
  for (float v : cube.values)
    if (!std::isfinite(v)) throw ValidityError("non-finite value in " + path);
  return cube;
}

void save_cube(const SpectralCube& cube, const std::string& path) {
  if (cube.values.size() != static_cast<std::size_t>(cube.height) *
                                cube.width * cube.bands)
    throw DimensionError("save_cube: value count mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  out.write(kMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(cube.height));
  write_u32(out, static_cast<std::uint32_t>(cube.width));
  write_u32(out, static_cast<std::uint32_t>(cube.bands));
  const std::size_t plane = static_cast<std::size_t>(cube.height) * cube.width;
  std::vector<float> seq(cube.values.size());
  for (int band = 0; band < cube.bands; ++band)
    for (std::size_t p = 0; p < plane; ++p)
      seq[static_cast<std::size_t>(band) * plane + p] =
          cube.values[p * cube.bands + band];
  out.write(reinterpret_cast<const char*>(seq.data()),
            static_cast<std::streamsize>(seq.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace vgan
