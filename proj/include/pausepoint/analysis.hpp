#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pausepoint/audio.hpp"
#include "pausepoint/image.hpp"
#include "pausepoint/ink.hpp"
#include "pausepoint/model.hpp"

namespace pausepoint {

inline constexpr double kSilenceThresholdDbfs = -50.0;
inline constexpr int kSilenceWindowMs = 100;
// Track lengths at least this far apart produce a consistency warning.
inline constexpr std::int64_t kTrackMismatchMs = 1000;
inline constexpr Size kThumbnailSize{320, 240};

struct SilenceReport {
  bool silent = true;
  // -inf for an empty or all-zero track.
  double max_window_dbfs = 0.0;
};

// RMS per non-overlapping 100 ms window (a trailing partial window counts),
// relative to 16-bit full scale. Silent iff every window is below -50 dBFS.
// Throws unsupported-rate.
SilenceReport detect_silence(const AudioTrack& track);

// dBFS of the RMS of a block of samples; -inf when all zero or empty.
double rms_dbfs(const std::int16_t* samples, std::size_t count) noexcept;

struct ResponseLabels {
  bool no_audio = false;
  bool no_ink = false;

  std::vector<std::string> names() const;
  static ResponseLabels from_names(const std::vector<std::string>& names);
  friend bool operator==(const ResponseLabels&, const ResponseLabels&) = default;
};

// Decoded artifacts of one response, as post-processing sees them.
struct ResponseMedia {
  InputMode mode = InputMode::InkOnly;
  std::optional<InkStream> ink;
  std::optional<AudioTrack> audio;
  // Client-declared length of the opaque video blob; set iff video was submitted.
  std::optional<std::int64_t> video_duration_ms;
  std::optional<Image> poster;
};

ResponseLabels label_response(const ResponseMedia& media);

struct DurationReport {
  std::int64_t duration_ms = 0;
  std::vector<std::string> warnings;
};

DurationReport measure_duration(const ResponseMedia& media);

// Final ink frame over the background when the response has ink, else the
// poster frame, else a fixed placeholder glyph.
Image make_thumbnail(const ResponseMedia& media, const Image* background, Size size = kThumbnailSize);
Image placeholder_glyph(Size size);

}  // namespace pausepoint
