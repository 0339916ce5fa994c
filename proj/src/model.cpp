#include "pausepoint/model.hpp"

#include <algorithm>
#include <cctype>

namespace pausepoint {
namespace {

bool blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

bool looks_like_url(std::string_view url) {
  return url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0 || url.rfind("file://", 0) == 0;
}

}  // namespace

std::string_view to_wire(InputMode mode) noexcept {
  switch (mode) {
    case InputMode::InkOnly: return "ink";
    case InputMode::AudioOnly: return "audio";
    case InputMode::VideoOnly: return "video";
    case InputMode::InkAudio: return "ink+audio";
    case InputMode::InkVideo: return "ink+video";
  }
  return "unknown";
}

std::optional<InputMode> input_mode_from_wire(std::string_view text) noexcept {
  for (auto mode : kAllInputModes) {
    if (to_wire(mode) == text) return mode;
  }
  return std::nullopt;
}

ValidationReport validate_exercise(const ExerciseSpec& spec, const ImageResolver* resolver) {
  ValidationReport report;
  if (blank(spec.instructions)) {
    report.push_back({Errc::empty_instructions, "instructions are empty"});
  }
  if (spec.time_limit_s < kMinTimeLimitS || spec.time_limit_s > kMaxTimeLimitS) {
    report.push_back({Errc::limit_out_of_range,
                      "time limit " + std::to_string(spec.time_limit_s) + " s outside 1..600"});
  }
  if (!is_known(spec.input_mode)) {
    report.push_back({Errc::unknown_mode, "input mode is not one of the five supported modes"});
  }
  if (spec.background) {
    if (const auto* ref = std::get_if<BlobRef>(&*spec.background)) {
      if (!is_image(ref->media_type) || !is_valid_hash(ref->hash)) {
        report.push_back({Errc::background_unavailable, "background blob is not an image"});
      } else if (resolver && !resolver->is_image_blob(*ref)) {
        report.push_back({Errc::background_unavailable, "background blob " + ref->hash + " not in store"});
      }
    } else {
      const auto& url = std::get<RemoteImage>(*spec.background).url;
      if (!looks_like_url(url)) {
        report.push_back({Errc::background_unavailable, "background locator '" + url + "' is not a URL"});
      } else if (resolver) {
        auto bytes = resolver->fetch(url);
        if (!bytes || !sniff_image(*bytes)) {
          report.push_back({Errc::background_unavailable, "background '" + url + "' could not be fetched as an image"});
        }
      }
    }
  }
  return report;
}

void append_segment(Lesson& lesson, Segment segment) {
  if (lesson.published) throw Error(Errc::lesson_published, "lesson " + lesson.lesson_id + " is published");
  lesson.segments.push_back(std::move(segment));
}

void mark_published(Lesson& lesson) {
  if (lesson.published) throw Error(Errc::lesson_published, "lesson " + lesson.lesson_id + " is already published");
  lesson.published = true;
}

std::size_t PlaybackPlan::pause_count() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const PlanEntry& e) {
    return std::holds_alternative<PauseEntry>(e);
  }));
}

std::int64_t PlaybackPlan::total_play_ms() const {
  std::int64_t total = 0;
  for (const auto& e : entries) {
    if (const auto* play = std::get_if<PlayEntry>(&e)) total += play->duration_ms;
  }
  return total;
}

PlaybackPlan build_timeline(const Lesson& lesson) {
  if (lesson.segments.empty()) throw Error(Errc::empty_lesson, "lesson " + lesson.lesson_id + " has no segments");
  PlaybackPlan plan;
  plan.entries.reserve(lesson.segments.size());
  std::int64_t cursor = 0;
  for (std::size_t i = 0; i < lesson.segments.size(); ++i) {
    const auto& segment = lesson.segments[i];
    if (const auto* video = std::get_if<VideoSegment>(&segment)) {
      if (!video->duration_ms || *video->duration_ms <= 0) {
        throw Error(Errc::unknown_duration, "video segment " + std::to_string(i) + " has no duration");
      }
      plan.entries.emplace_back(PlayEntry{cursor, *video->duration_ms, video->video});
      cursor += *video->duration_ms;
    } else {
      plan.entries.emplace_back(PauseEntry{std::get<ExerciseSegment>(segment).exercise.exercise_id, cursor});
    }
  }
  return plan;
}

RecordingView preview_descriptor(const ExerciseSpec& spec) {
  auto report = validate_exercise(spec);
  if (!report.empty()) {
    throw Error(Errc::invalid_spec, std::string(to_string(report.front().code)) + ": " + report.front().detail);
  }
  return RecordingView{
      .exercise_id = spec.exercise_id,
      .instructions = spec.instructions,
      .canvas = ink_enabled(spec.input_mode),
      .microphone = audio_enabled(spec.input_mode),
      .camera = video_enabled(spec.input_mode),
      .time_limit_s = spec.time_limit_s,
      .background = spec.background,
  };
}

void to_json(nlohmann::json& j, const BackgroundImage& bg) {
  if (const auto* ref = std::get_if<BlobRef>(&bg)) {
    j = nlohmann::json{{"blob", *ref}};
  } else {
    j = nlohmann::json{{"url", std::get<RemoteImage>(bg).url}};
  }
}

void to_json(nlohmann::json& j, const ExerciseSpec& spec) {
  j = nlohmann::json{
      {"exercise_id", spec.exercise_id},
      {"instructions", spec.instructions},
      {"time_limit_s", spec.time_limit_s},
      {"input_mode", to_wire(spec.input_mode)},
      {"background", nullptr},
      {"created_at", format_utc(spec.created_at)},
  };
  if (spec.background) j["background"] = *spec.background;
}

void from_json(const nlohmann::json& j, ExerciseSpec& spec) {
  spec.exercise_id = j.value("exercise_id", std::string{});
  spec.instructions = j.at("instructions").get<std::string>();
  spec.time_limit_s = j.at("time_limit_s").get<int>();
  const auto mode_text = j.at("input_mode").get<std::string>();
  auto mode = input_mode_from_wire(mode_text);
  if (!mode) throw Error(Errc::unknown_mode, "unknown input mode '" + mode_text + "'");
  spec.input_mode = *mode;
  spec.background.reset();
  if (auto it = j.find("background"); it != j.end() && !it->is_null()) {
    if (it->contains("blob")) {
      spec.background = it->at("blob").get<BlobRef>();
    } else {
      spec.background = RemoteImage{it->at("url").get<std::string>()};
    }
  }
  spec.created_at = Timestamp{};
  if (auto it = j.find("created_at"); it != j.end() && it->is_string()) {
    if (auto t = parse_utc(it->get<std::string>())) spec.created_at = *t;
  }
}

void to_json(nlohmann::json& j, const PlaybackPlan& plan) {
  j = nlohmann::json::array();
  for (const auto& entry : plan.entries) {
    if (const auto* play = std::get_if<PlayEntry>(&entry)) {
      j.push_back({{"type", "play"},
                   {"start_offset_ms", play->start_offset_ms},
                   {"duration_ms", play->duration_ms},
                   {"video", play->video}});
    } else {
      const auto& pause = std::get<PauseEntry>(entry);
      j.push_back({{"type", "pause"}, {"exercise_id", pause.exercise_id}, {"offset_ms", pause.offset_ms}});
    }
  }
}

void to_json(nlohmann::json& j, const RecordingView& view) {
  j = nlohmann::json{
      {"exercise_id", view.exercise_id},
      {"instructions", view.instructions},
      {"canvas", view.canvas},
      {"microphone", view.microphone},
      {"camera", view.camera},
      {"time_limit_s", view.time_limit_s},
      {"background", nullptr},
  };
  if (view.background) j["background"] = *view.background;
}

}  // namespace pausepoint
