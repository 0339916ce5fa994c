#include "pausepoint/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pausepoint/error.hpp"

namespace pausepoint {

double rms_dbfs(const std::int16_t* samples, std::size_t count) noexcept {
  if (count == 0) return -std::numeric_limits<double>::infinity();
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double s = samples[i];
    sum_sq += s * s;
  }
  if (sum_sq == 0.0) return -std::numeric_limits<double>::infinity();
  constexpr double kFullScaleSq = 32768.0 * 32768.0;
  // 20*log10(sqrt(x)) == 10*log10(x)
  return 10.0 * std::log10(sum_sq / (static_cast<double>(count) * kFullScaleSq));
}

SilenceReport detect_silence(const AudioTrack& track) {
  if (!is_supported_rate(track.sample_rate_hz)) {
    throw Error(Errc::unsupported_rate, "sample rate " + std::to_string(track.sample_rate_hz) + " Hz not supported");
  }
  const std::size_t window = static_cast<std::size_t>(track.sample_rate_hz) * kSilenceWindowMs / 1000;
  SilenceReport report{true, -std::numeric_limits<double>::infinity()};
  for (std::size_t start = 0; start < track.samples.size(); start += window) {
    const std::size_t n = std::min(window, track.samples.size() - start);
    const double level = rms_dbfs(track.samples.data() + start, n);
    report.max_window_dbfs = std::max(report.max_window_dbfs, level);
    if (level >= kSilenceThresholdDbfs) report.silent = false;
  }
  return report;
}

std::vector<std::string> ResponseLabels::names() const {
  std::vector<std::string> out;
  if (no_audio) out.emplace_back("no-audio");
  if (no_ink) out.emplace_back("no-ink");
  return out;
}

ResponseLabels ResponseLabels::from_names(const std::vector<std::string>& names) {
  ResponseLabels labels;
  for (const auto& n : names) {
    if (n == "no-audio") labels.no_audio = true;
    else if (n == "no-ink") labels.no_ink = true;
  }
  return labels;
}

ResponseLabels label_response(const ResponseMedia& media) {
  ResponseLabels labels;
  if (ink_enabled(media.mode)) labels.no_ink = !media.ink || !has_ink(*media.ink);
  if (audio_enabled(media.mode) && media.audio) labels.no_audio = detect_silence(*media.audio).silent;
  return labels;
}

DurationReport measure_duration(const ResponseMedia& media) {
  struct Track {
    const char* name;
    std::int64_t ms;
  };
  std::vector<Track> tracks;
  if (media.ink) tracks.push_back({"ink", media.ink->declared_duration_ms});
  if (media.audio) tracks.push_back({"audio", media.audio->duration_ms()});
  if (media.video_duration_ms) tracks.push_back({"video", *media.video_duration_ms});

  DurationReport report;
  for (const auto& t : tracks) report.duration_ms = std::max(report.duration_ms, t.ms);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    for (std::size_t j = i + 1; j < tracks.size(); ++j) {
      if (std::llabs(tracks[i].ms - tracks[j].ms) >= kTrackMismatchMs) {
        report.warnings.push_back(std::string("track-length-mismatch: ") + tracks[i].name + " " +
                                  std::to_string(tracks[i].ms) + " ms vs " + tracks[j].name + " " +
                                  std::to_string(tracks[j].ms) + " ms");
      }
    }
  }
  return report;
}

Image placeholder_glyph(Size size) {
  // Speaker-style glyph: a light field with a dark disc and three bars.
  Image canvas(size, Rgba{236, 239, 241, 255});
  const double unit = std::min(size.w, size.h) / 12.0;
  const double cx = size.w / 2.0;
  const double cy = size.h / 2.0;
  const Rgba ink{84, 110, 122, 255};
  raster::StrokeMask disc(size);
  disc.stamp_segment(cx - 2.5 * unit, cy, cx - 2.5 * unit, cy, 1.5 * unit);
  raster::composite(canvas, disc, ink);
  for (int bar = 0; bar < 3; ++bar) {
    raster::StrokeMask mask(size);
    const double x = cx + (bar + 0.5) * 1.6 * unit;
    const double half = (1.0 + bar) * unit;
    mask.stamp_segment(x, cy - half, x, cy + half, 0.4 * unit);
    raster::composite(canvas, mask, ink);
  }
  return canvas;
}

Image make_thumbnail(const ResponseMedia& media, const Image* background, Size size) {
  if (media.ink && has_ink(*media.ink)) return final_frame(*media.ink, size, background);
  if (media.poster && !media.poster->empty()) {
    Image base(size, kWhite);
    const Image scaled = scale_nearest(*media.poster, size);
    for (int y = 0; y < size.h; ++y) {
      for (int x = 0; x < size.w; ++x) base.at(x, y) = blend_over(base.at(x, y), scaled.at(x, y));
    }
    return base;
  }
  return placeholder_glyph(size);
}

}  // namespace pausepoint
