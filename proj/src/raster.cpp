#include "waypointrl/raster.hpp"

#include <stdexcept>

namespace waypointrl::prompt {

namespace {

// 3x5 glyphs, one row per 3-bit group from top to bottom.
struct Glyph {
  char ch;
  std::uint16_t rows;  // 15 bits: row0 in bits 14..12, ... row4 in bits 2..0
};

constexpr Glyph kGlyphs[] = {
    {'0', 0b111'101'101'101'111}, {'1', 0b010'110'010'010'111},
    {'2', 0b111'001'111'100'111}, {'3', 0b111'001'111'001'111},
    {'4', 0b101'101'111'001'001}, {'5', 0b111'100'111'001'111},
    {'6', 0b111'100'111'101'111}, {'7', 0b111'001'010'010'010},
    {'8', 0b111'101'111'101'111}, {'9', 0b111'101'111'001'111},
    {'P', 0b111'101'111'100'100}, {'Q', 0b111'101'101'111'001},
};

const Glyph* find_glyph(char ch) {
  for (const auto& g : kGlyphs)
    if (g.ch == ch) return &g;
  return nullptr;
}

}  // namespace

Image::Image(int width, int height, Rgb background) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("Image: dimensions must be positive");
  pixels_.resize(static_cast<std::size_t>(width) * height * 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) set(x, y, background);
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || x >= width_ || y < 0 || y >= height_) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  pixels_[i] = c.r;
  pixels_[i + 1] = c.g;
  pixels_[i + 2] = c.b;
}

Rgb Image::at(int x, int y) const {
  if (x < 0 || x >= width_ || y < 0 || y >= height_)
    throw std::out_of_range("Image::at: pixel outside image");
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void Image::hline(int y, Rgb c) {
  for (int x = 0; x < width_; ++x) set(x, y, c);
}

void Image::vline(int x, Rgb c) {
  for (int y = 0; y < height_; ++y) set(x, y, c);
}

void Image::fill_disk(int cx, int cy, int radius, Rgb c) {
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) set(cx + dx, cy + dy, c);
}

void Image::draw_label(int x, int y, const std::string& text, Rgb c) {
  int cursor = x;
  for (char ch : text) {
    if (const Glyph* g = find_glyph(ch)) {
      for (int row = 0; row < 5; ++row) {
        const int bits = (g->rows >> (3 * (4 - row))) & 0b111;
        for (int col = 0; col < 3; ++col)
          if (bits & (1 << (2 - col))) set(cursor + col, y + row, c);
      }
    }
    cursor += 4;  // 3 pixels plus spacing
  }
}

std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(img.data().data()), img.data().size());
  return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace waypointrl::prompt
