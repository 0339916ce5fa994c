#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pausepoint {

struct Rgba {
  std::uint8_t r = 0, g = 0, b = 0, a = 255;
  friend bool operator==(const Rgba&, const Rgba&) = default;
};

inline constexpr Rgba kWhite{255, 255, 255, 255};
inline constexpr Rgba kTransparent{0, 0, 0, 0};

static_assert(sizeof(Rgba) == 4, "Rgba must pack to 4 bytes for codec row pointers");

struct Size {
  int w = 0;
  int h = 0;
  friend bool operator==(const Size&, const Size&) = default;
};

// 8-bit RGBA raster, row-major, straight (non-premultiplied) alpha.
class Image {
 public:
  Image() = default;
  Image(Size size, Rgba fill);

  int width() const noexcept { return size_.w; }
  int height() const noexcept { return size_.h; }
  Size size() const noexcept { return size_; }
  bool empty() const noexcept { return pixels_.empty(); }

  Rgba& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * size_.w + x]; }
  const Rgba& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * size_.w + x]; }
  const std::vector<Rgba>& pixels() const noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Size size_;
  std::vector<Rgba> pixels_;
};

// Source-over blend of one pixel.
Rgba blend_over(Rgba dst, Rgba src) noexcept;

Image scale_nearest(const Image& src, Size size);

// Throws Error(io_error) on encoder failure.
std::string encode_png(const Image& image);
// Accepts PNG or JPEG. Throws Error(artifact_unreadable) on undecodable input.
Image decode_image(std::string_view bytes);

}  // namespace pausepoint
