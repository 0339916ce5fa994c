#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pausepoint/blob_ref.hpp"
#include "pausepoint/clock.hpp"
#include "pausepoint/error.hpp"

namespace pausepoint {

enum class InputMode : std::uint8_t { InkOnly, AudioOnly, VideoOnly, InkAudio, InkVideo };

inline constexpr InputMode kAllInputModes[] = {InputMode::InkOnly, InputMode::AudioOnly, InputMode::VideoOnly,
                                               InputMode::InkAudio, InputMode::InkVideo};

constexpr bool is_known(InputMode mode) noexcept { return static_cast<std::uint8_t>(mode) <= 4; }

constexpr bool ink_enabled(InputMode mode) noexcept {
  return mode == InputMode::InkOnly || mode == InputMode::InkAudio || mode == InputMode::InkVideo;
}

constexpr bool video_enabled(InputMode mode) noexcept {
  return mode == InputMode::VideoOnly || mode == InputMode::InkVideo;
}

// Video modes record the microphone too; the client ships the soundtrack as a
// separate PCM track next to the opaque video blob.
constexpr bool audio_enabled(InputMode mode) noexcept {
  return mode == InputMode::AudioOnly || mode == InputMode::InkAudio || video_enabled(mode);
}

// "ink", "audio", "video", "ink+audio", "ink+video"
std::string_view to_wire(InputMode mode) noexcept;
std::optional<InputMode> input_mode_from_wire(std::string_view text) noexcept;

inline constexpr int kMinTimeLimitS = 1;
inline constexpr int kMaxTimeLimitS = 600;

struct RemoteImage {
  std::string url;
  friend bool operator==(const RemoteImage&, const RemoteImage&) = default;
};

using BackgroundImage = std::variant<BlobRef, RemoteImage>;

struct ExerciseSpec {
  std::string exercise_id;
  std::string instructions;
  int time_limit_s = 0;
  InputMode input_mode = InputMode::InkOnly;
  std::optional<BackgroundImage> background;
  Timestamp created_at{};

  friend bool operator==(const ExerciseSpec&, const ExerciseSpec&) = default;
};

struct Violation {
  Errc code;
  std::string detail;
};

using ValidationReport = std::vector<Violation>;

// Answers the questions validation needs about background images.
class ImageResolver {
 public:
  virtual ~ImageResolver() = default;
  virtual bool is_image_blob(const BlobRef& ref) const = 0;
  // Bytes at a remote locator, or nullopt when unreachable.
  virtual std::optional<std::string> fetch(const std::string& url) const = 0;
};

// Empty report means the spec is valid. Without a resolver, background
// references are checked for shape only.
ValidationReport validate_exercise(const ExerciseSpec& spec, const ImageResolver* resolver = nullptr);

struct VideoSegment {
  BlobRef video;
  std::optional<std::int64_t> duration_ms;
  friend bool operator==(const VideoSegment&, const VideoSegment&) = default;
};

struct ExerciseSegment {
  ExerciseSpec exercise;
  friend bool operator==(const ExerciseSegment&, const ExerciseSegment&) = default;
};

using Segment = std::variant<VideoSegment, ExerciseSegment>;

struct Lesson {
  std::string lesson_id;
  std::string title;
  std::vector<Segment> segments;
  bool published = false;
  std::string owner;

  friend bool operator==(const Lesson&, const Lesson&) = default;
};

// Both throw lesson-published once the lesson is published.
void append_segment(Lesson& lesson, Segment segment);
void mark_published(Lesson& lesson);

struct PlayEntry {
  std::int64_t start_offset_ms = 0;
  std::int64_t duration_ms = 0;
  BlobRef video;
  friend bool operator==(const PlayEntry&, const PlayEntry&) = default;
};

struct PauseEntry {
  std::string exercise_id;
  std::int64_t offset_ms = 0;
  friend bool operator==(const PauseEntry&, const PauseEntry&) = default;
};

using PlanEntry = std::variant<PlayEntry, PauseEntry>;

struct PlaybackPlan {
  std::vector<PlanEntry> entries;

  std::size_t pause_count() const;
  std::int64_t total_play_ms() const;

  friend bool operator==(const PlaybackPlan&, const PlaybackPlan&) = default;
};

// Throws empty-lesson or unknown-duration.
PlaybackPlan build_timeline(const Lesson& lesson);

// What the recording client shows for an exercise.
struct RecordingView {
  std::string exercise_id;
  std::string instructions;
  bool canvas = false;
  bool microphone = false;
  bool camera = false;
  int time_limit_s = 0;
  std::optional<BackgroundImage> background;

  friend bool operator==(const RecordingView&, const RecordingView&) = default;
};

// Throws invalid-spec when the spec fails shape validation.
RecordingView preview_descriptor(const ExerciseSpec& spec);

void to_json(nlohmann::json& j, const BackgroundImage& bg);
void to_json(nlohmann::json& j, const ExerciseSpec& spec);
void from_json(const nlohmann::json& j, ExerciseSpec& spec);
void to_json(nlohmann::json& j, const PlaybackPlan& plan);
void to_json(nlohmann::json& j, const RecordingView& view);

}  // namespace pausepoint
