#include "pausepoint/ink.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

#include "pausepoint/error.hpp"

namespace pausepoint {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

char action_code(PenAction action) {
  switch (action) {
    case PenAction::Down: return 'd';
    case PenAction::Move: return 'm';
    case PenAction::Up: return 'u';
    case PenAction::SetStyle: return 's';
  }
  return '?';
}

[[noreturn]] void fail(Errc code, std::string detail, std::optional<std::size_t> index = std::nullopt) {
  if (index) detail = "event " + std::to_string(*index) + ": " + detail;
  throw InkFormatError(code, std::move(detail), index);
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

bool valid_width(double w) { return std::isfinite(w) && w > 0.0 && w <= kMaxPenWidth; }

// Pen state machine plus time and range checks shared by parse and validate.
void check_events(const std::vector<InkEvent>& events, std::int64_t declared_duration_ms) {
  if (declared_duration_ms < 0) fail(Errc::out_of_range, "duration_ms is negative");
  bool open = false;
  std::int64_t last_t = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.t_ms < 0) fail(Errc::out_of_range, "negative timestamp", i);
    if (i > 0 && e.t_ms < last_t) fail(Errc::non_monotonic_time, "timestamp goes backwards", i);
    if (e.t_ms > declared_duration_ms) fail(Errc::out_of_range, "timestamp past duration_ms", i);
    last_t = e.t_ms;
    switch (e.action) {
      case PenAction::Down:
        if (open) fail(Errc::malformed_sequence, "pen-down while a stroke is open", i);
        open = true;
        break;
      case PenAction::Move:
        if (!open) fail(Errc::malformed_sequence, "pen-move with no open stroke", i);
        break;
      case PenAction::Up:
        if (!open) fail(Errc::malformed_sequence, "pen-up with no open stroke", i);
        open = false;
        break;
      case PenAction::SetStyle:
        if (open) fail(Errc::malformed_sequence, "set-style inside a stroke", i);
        break;
    }
    if (e.action == PenAction::Down || e.action == PenAction::Move) {
      if (!std::isfinite(e.point.x) || !std::isfinite(e.point.y) || !in_unit(e.point.x) || !in_unit(e.point.y)) {
        fail(Errc::out_of_range, "coordinate outside [0,1]", i);
      }
    }
    if (e.action == PenAction::SetStyle && !valid_width(e.style.width)) {
      fail(Errc::out_of_range, "pen width outside (0, 0.1]", i);
    }
  }
}

std::int64_t int_field(const json& obj, const char* key, std::optional<std::size_t> index) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(Errc::malformed_document, std::string("missing \"") + key + "\"", index);
  if (it->is_number_unsigned()) {
    if (it->get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      fail(Errc::out_of_range, std::string("\"") + key + "\" too large", index);
    }
    return static_cast<std::int64_t>(it->get<std::uint64_t>());
  }
  if (!it->is_number_integer()) fail(Errc::malformed_document, std::string("\"") + key + "\" must be an integer", index);
  return it->get<std::int64_t>();
}

double real_field(const json& obj, const char* key, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(Errc::malformed_document, std::string("missing \"") + key + "\"", index);
  if (!it->is_number()) fail(Errc::malformed_document, std::string("\"") + key + "\" must be a number", index);
  const double v = it->get<double>();
  if (!std::isfinite(v)) fail(Errc::out_of_range, std::string("\"") + key + "\" is not finite", index);
  return v;
}

PenStyle parse_style(const json& obj, std::size_t index) {
  if (!obj.is_object() || obj.size() != 2 || !obj.contains("rgba") || !obj.contains("w")) {
    fail(Errc::malformed_document, "style must be {\"rgba\":[r,g,b,a],\"w\":width}", index);
  }
  const auto& rgba = obj["rgba"];
  if (!rgba.is_array() || rgba.size() != 4) fail(Errc::malformed_document, "rgba must have four channels", index);
  std::uint8_t channels[4];
  for (std::size_t c = 0; c < 4; ++c) {
    if (!rgba[c].is_number_integer()) fail(Errc::malformed_document, "rgba channels must be integers", index);
    if (rgba[c].is_number_unsigned() ? rgba[c].get<std::uint64_t>() > 255
                                     : (rgba[c].get<std::int64_t>() < 0 || rgba[c].get<std::int64_t>() > 255)) {
      fail(Errc::out_of_range, "rgba channel outside 0..255", index);
    }
    channels[c] = static_cast<std::uint8_t>(rgba[c].get<std::int64_t>());
  }
  PenStyle style;
  style.color = Rgba{channels[0], channels[1], channels[2], channels[3]};
  style.width = real_field(obj, "w", index);
  if (!valid_width(style.width)) fail(Errc::out_of_range, "pen width outside (0, 0.1]", index);
  return style;
}

InkEvent parse_event(const json& obj, std::size_t index) {
  if (!obj.is_object()) fail(Errc::malformed_document, "event must be an object", index);
  auto kind = obj.find("k");
  if (kind == obj.end() || !kind->is_string()) fail(Errc::malformed_document, "missing \"k\"", index);
  const auto& k = kind->get_ref<const std::string&>();

  InkEvent event;
  event.t_ms = int_field(obj, "t", index);
  std::size_t expected_keys = 2;
  if (k == "d" || k == "m") {
    event.action = k == "d" ? PenAction::Down : PenAction::Move;
    event.point = InkPoint{real_field(obj, "x", index), real_field(obj, "y", index)};
    expected_keys = 4;
  } else if (k == "u") {
    event.action = PenAction::Up;
  } else if (k == "s") {
    event.action = PenAction::SetStyle;
    auto style = obj.find("style");
    if (style == obj.end()) fail(Errc::malformed_document, "set-style without \"style\"", index);
    event.style = parse_style(*style, index);
    expected_keys = 3;
  } else {
    fail(Errc::malformed_document, "unknown action \"" + k + "\"", index);
  }
  if (obj.size() != expected_keys) fail(Errc::malformed_document, "unexpected keys for action \"" + k + "\"", index);
  return event;
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ec == std::errc{} ? end : buf);
}

void append_int(std::string& out, std::int64_t v) {
  char buf[24];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

}  // namespace

InkStream parse_ink_stream(std::string_view document) {
  json doc = json::parse(document.begin(), document.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) fail(Errc::malformed_document, "not valid JSON");
  if (!doc.is_object()) fail(Errc::malformed_document, "top level must be an object");
  if (doc.size() != 3 || !doc.contains("version") || !doc.contains("duration_ms") || !doc.contains("events")) {
    fail(Errc::malformed_document, "expected exactly version, duration_ms, events");
  }
  if (!doc["version"].is_number_integer() || doc["version"].get<std::int64_t>() != kFormatVersion) {
    fail(Errc::malformed_document, "unsupported version");
  }
  InkStream stream;
  stream.declared_duration_ms = int_field(doc, "duration_ms", std::nullopt);
  const auto& events = doc["events"];
  if (!events.is_array()) fail(Errc::malformed_document, "events must be an array");
  stream.events.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) stream.events.push_back(parse_event(events[i], i));
  check_events(stream.events, stream.declared_duration_ms);
  return stream;
}

void validate_ink_stream(const InkStream& stream) { check_events(stream.events, stream.declared_duration_ms); }

std::string serialize_ink_stream(const InkStream& stream) {
  std::string out;
  out.reserve(48 + stream.events.size() * 40);
  out += "{\"version\":1,\"duration_ms\":";
  append_int(out, stream.declared_duration_ms);
  out += ",\"events\":[";
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const auto& e = stream.events[i];
    if (i > 0) out += ',';
    out += "{\"t\":";
    append_int(out, e.t_ms);
    out += ",\"k\":\"";
    out += action_code(e.action);
    out += '"';
    if (e.action == PenAction::Down || e.action == PenAction::Move) {
      out += ",\"x\":";
      append_number(out, e.point.x);
      out += ",\"y\":";
      append_number(out, e.point.y);
    } else if (e.action == PenAction::SetStyle) {
      out += ",\"style\":{\"rgba\":[";
      append_int(out, e.style.color.r);
      out += ',';
      append_int(out, e.style.color.g);
      out += ',';
      append_int(out, e.style.color.b);
      out += ',';
      append_int(out, e.style.color.a);
      out += "],\"w\":";
      append_number(out, e.style.width);
      out += '}';
    }
    out += '}';
  }
  out += "]}";
  return out;
}

std::vector<Stroke> strokes_until(const InkStream& stream, std::int64_t until_ms) {
  std::vector<Stroke> out;
  PenStyle style;
  bool open = false;
  for (const auto& e : stream.events) {
    if (e.t_ms > until_ms) break;
    switch (e.action) {
      case PenAction::SetStyle:
        style = e.style;
        break;
      case PenAction::Down:
        out.push_back(Stroke{style, {e.point}, e.t_ms, e.t_ms, false});
        open = true;
        break;
      case PenAction::Move:
        if (open) {
          out.back().points.push_back(e.point);
          out.back().end_ms = e.t_ms;
        }
        break;
      case PenAction::Up:
        if (open) {
          out.back().end_ms = e.t_ms;
          out.back().complete = true;
          open = false;
        }
        break;
    }
  }
  return out;
}

std::vector<Stroke> strokes(const InkStream& stream) {
  return strokes_until(stream, std::numeric_limits<std::int64_t>::max());
}

bool has_ink(const InkStream& stream) {
  for (const auto& stroke : strokes(stream)) {
    if (!stroke.complete) continue;
    for (std::size_t i = 1; i < stroke.points.size(); ++i) {
      if (stroke.points[i] != stroke.points.front()) return true;
    }
  }
  return false;
}

namespace raster {

void StrokeMask::stamp_segment(double ax, double ay, double bx, double by, double radius) {
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - radius)));
  const int x1 = std::min(size_.w - 1, static_cast<int>(std::ceil(std::max(ax, bx) + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - radius)));
  const int y1 = std::min(size_.h - 1, static_cast<int>(std::ceil(std::max(ay, by) + radius)));
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      double t = 0.0;
      if (len2 > 0.0) t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
      const double cx = ax + t * dx - px;
      const double cy = ay + t * dy - py;
      if (cx * cx + cy * cy <= r2) bits_[static_cast<std::size_t>(y) * size_.w + x] = 1;
    }
  }
}

double stroke_radius(const PenStyle& style, Size size) noexcept {
  // Half a pixel minimum so hairlines still land on pixel centers.
  return std::max(0.5, style.width * std::min(size.w, size.h) / 2.0);
}

void composite(Image& canvas, const StrokeMask& mask, Rgba color) {
  for (int y = 0; y < canvas.height(); ++y) {
    for (int x = 0; x < canvas.width(); ++x) {
      if (mask.covered(x, y)) canvas.at(x, y) = blend_over(canvas.at(x, y), color);
    }
  }
}

Image blank_canvas(Size size, const Image* background) {
  if (background && !background->empty()) {
    Image base(size, kWhite);
    const Image scaled = scale_nearest(*background, size);
    for (int y = 0; y < size.h; ++y) {
      for (int x = 0; x < size.w; ++x) base.at(x, y) = blend_over(base.at(x, y), scaled.at(x, y));
    }
    return base;
  }
  return Image(size, kWhite);
}

}  // namespace raster

Image render_at(const InkStream& stream, std::int64_t t_ms, Size size, const Image* background) {
  if (size.w < 1 || size.h < 1 || size.w > 8192 || size.h > 8192) {
    throw Error(Errc::invalid_size, std::to_string(size.w) + "x" + std::to_string(size.h));
  }
  Image canvas = raster::blank_canvas(size, background);
  for (const auto& stroke : strokes_until(stream, t_ms)) {
    raster::StrokeMask mask(size);
    const double r = raster::stroke_radius(stroke.style, size);
    const auto& pts = stroke.points;
    const double sx = size.w;
    const double sy = size.h;
    mask.stamp_segment(pts[0].x * sx, pts[0].y * sy, pts[0].x * sx, pts[0].y * sy, r);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      mask.stamp_segment(pts[i - 1].x * sx, pts[i - 1].y * sy, pts[i].x * sx, pts[i].y * sy, r);
    }
    raster::composite(canvas, mask, stroke.style.color);
  }
  return canvas;
}

Image final_frame(const InkStream& stream, Size size, const Image* background) {
  return render_at(stream, stream.declared_duration_ms, size, background);
}

}  // namespace pausepoint
