#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pausepoint/image.hpp"

namespace pausepoint {

enum class PenAction : std::uint8_t { Down, Move, Up, SetStyle };

struct InkPoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const InkPoint&, const InkPoint&) = default;
};

inline constexpr double kMaxPenWidth = 0.1;

struct PenStyle {
  Rgba color{0, 0, 0, 255};
  // Fraction of min(canvas width, canvas height), in (0, 0.1].
  double width = 0.01;
  friend bool operator==(const PenStyle&, const PenStyle&) = default;
};

// Fields not carried by an action stay value-initialized, so defaulted
// equality is field-exact over the wire format.
struct InkEvent {
  std::int64_t t_ms = 0;
  PenAction action = PenAction::Down;
  InkPoint point;   // Down and Move only
  PenStyle style;   // SetStyle only

  static InkEvent down(std::int64_t t, double x, double y) { return {t, PenAction::Down, {x, y}, {}}; }
  static InkEvent move(std::int64_t t, double x, double y) { return {t, PenAction::Move, {x, y}, {}}; }
  static InkEvent up(std::int64_t t) { return {t, PenAction::Up, {}, {}}; }
  static InkEvent set_style(std::int64_t t, PenStyle s) { return {t, PenAction::SetStyle, {}, s}; }

  friend bool operator==(const InkEvent&, const InkEvent&) = default;
};

// A stream may end with a stroke still open (capture stopped mid-stroke);
// that stroke is rendered but is not a complete stroke.
struct InkStream {
  std::vector<InkEvent> events;
  std::int64_t declared_duration_ms = 0;
  friend bool operator==(const InkStream&, const InkStream&) = default;
};

struct Stroke {
  PenStyle style;
  std::vector<InkPoint> points;
  std::int64_t begin_ms = 0;
  std::int64_t end_ms = 0;
  bool complete = false;
};

// Throws InkFormatError with one of malformed-document, malformed-sequence,
// out-of-range, non-monotonic-time.
InkStream parse_ink_stream(std::string_view document);
std::string serialize_ink_stream(const InkStream& stream);

// Same checks parse applies, for streams built in memory.
void validate_ink_stream(const InkStream& stream);

// Strokes formed by events with t_ms <= until_ms.
std::vector<Stroke> strokes_until(const InkStream& stream, std::int64_t until_ms);
std::vector<Stroke> strokes(const InkStream& stream);

// True iff some complete stroke has at least two distinct points.
bool has_ink(const InkStream& stream);

// Draws events with t_ms <= t_ms as round-capped, round-joined polylines over
// a white canvas, or over `background` scaled to `size`. Throws invalid-size.
Image render_at(const InkStream& stream, std::int64_t t_ms, Size size, const Image* background = nullptr);
Image final_frame(const InkStream& stream, Size size, const Image* background = nullptr);

// Rasterization primitives shared by the renderer and its test oracles.
namespace raster {

// Coverage mask for one stroke over a canvas.
class StrokeMask {
 public:
  explicit StrokeMask(Size size) : size_(size), bits_(static_cast<std::size_t>(size.w) * size.h, 0) {}

  // Marks pixels whose centers lie within `radius` of segment a-b (pixel coordinates).
  void stamp_segment(double ax, double ay, double bx, double by, double radius);
  bool covered(int x, int y) const { return bits_[static_cast<std::size_t>(y) * size_.w + x] != 0; }
  Size size() const noexcept { return size_; }

 private:
  Size size_;
  std::vector<std::uint8_t> bits_;
};

double stroke_radius(const PenStyle& style, Size size) noexcept;
void composite(Image& canvas, const StrokeMask& mask, Rgba color);
Image blank_canvas(Size size, const Image* background);

}  // namespace raster

}  // namespace pausepoint
