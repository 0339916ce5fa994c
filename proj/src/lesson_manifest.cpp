#include "pausepoint/lesson_manifest.hpp"

namespace pausepoint {

using nlohmann::json;

bool is_remote_locator(std::string_view text) noexcept {
  return text.rfind("http://", 0) == 0 || text.rfind("https://", 0) == 0;
}

LessonManifest parse_lesson_manifest(std::string_view document, const std::filesystem::path& base_dir) {
  const json doc = json::parse(document, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::bad_manifest, "manifest is not a JSON object");

  LessonManifest manifest;
  try {
    manifest.title = doc.at("title").get<std::string>();
    const auto& segments = doc.at("segments");
    if (!segments.is_array()) throw Error(Errc::bad_manifest, "segments must be an array");
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& seg = segments[i];
      const auto type = seg.at("type").get<std::string>();
      if (type == "video") {
        ManifestVideo video;
        video.file = base_dir / seg.at("file").get<std::string>();
        if (auto it = seg.find("duration_ms"); it != seg.end() && !it->is_null()) {
          if (!it->is_number_integer()) throw Error(Errc::bad_manifest, "segment " + std::to_string(i) + ": duration_ms");
          video.duration_ms = it->get<std::int64_t>();
        }
        manifest.segments.emplace_back(std::move(video));
      } else if (type == "exercise") {
        ManifestExercise ex;
        ex.instructions = seg.at("instructions").get<std::string>();
        ex.time_limit_s = seg.at("time_limit_s").get<int>();
        const auto mode = seg.at("input_mode").get<std::string>();
        auto parsed = input_mode_from_wire(mode);
        if (!parsed) throw Error(Errc::bad_manifest, "segment " + std::to_string(i) + ": unknown input_mode '" + mode + "'");
        ex.input_mode = *parsed;
        if (auto it = seg.find("background"); it != seg.end() && !it->is_null()) {
          auto bg = it->get<std::string>();
          ex.background = is_remote_locator(bg) ? bg : (base_dir / bg).string();
        }
        manifest.segments.emplace_back(std::move(ex));
      } else {
        throw Error(Errc::bad_manifest, "segment " + std::to_string(i) + ": unknown type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::bad_manifest, e.what());
  }
  return manifest;
}

}  // namespace pausepoint
