#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pausepoint/model.hpp"

namespace pausepoint {

// Lesson import document:
//   {"title": ..., "segments": [
//      {"type": "video", "file": ..., "duration_ms": ...} |
//      {"type": "exercise", "instructions": ..., "time_limit_s": ...,
//       "input_mode": "ink+audio", "background": <file or http(s) URL>?}]}
struct ManifestVideo {
  std::filesystem::path file;
  std::optional<std::int64_t> duration_ms;
};

struct ManifestExercise {
  std::string instructions;
  int time_limit_s = 0;
  InputMode input_mode = InputMode::InkOnly;
  // Either a local file (resolved against the manifest's directory) or a URL.
  std::optional<std::string> background;
};

struct LessonManifest {
  std::string title;
  std::vector<std::variant<ManifestVideo, ManifestExercise>> segments;
};

// Relative paths are resolved against base_dir. Throws bad-manifest.
LessonManifest parse_lesson_manifest(std::string_view document, const std::filesystem::path& base_dir);

bool is_remote_locator(std::string_view text) noexcept;

}  // namespace pausepoint
