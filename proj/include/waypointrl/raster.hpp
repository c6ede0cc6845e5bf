#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace waypointrl::prompt {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// Minimal RGB raster canvas for prompt annotations. Out-of-bounds writes
// are clipped silently.
class Image {
 public:
  Image(int width, int height, Rgb background = {255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }

  void set(int x, int y, Rgb c);
  Rgb at(int x, int y) const;

  void hline(int y, Rgb c);
  void vline(int x, Rgb c);
  void fill_disk(int cx, int cy, int radius, Rgb c);

  // 3x5 bitmap glyphs for digits, 'P' and 'Q'; unknown characters render
  // as blanks. (x, y) is the top-left corner of the first glyph.
  void draw_label(int x, int y, const std::string& text, Rgb c);

  const std::vector<std::uint8_t>& data() const { return pixels_; }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;  // row-major RGB triplets
};

// Binary PPM (P6) encoding; bit-exact for golden tests.
std::string encode_ppm(const Image& img);

// FNV-1a over arbitrary bytes; used to freeze golden raster hashes.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace waypointrl::prompt
