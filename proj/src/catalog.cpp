#include "pausepoint/catalog.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "pausepoint/error.hpp"

namespace pausepoint {

using nlohmann::json;

namespace {

constexpr int kMaxAttempts = 8;

std::uint64_t last_issued(const Store& store, EntityKind kind, char prefix) {
  std::uint64_t last = 0;
  store.for_each(kind, [&](const Record& r) { last = std::max(last, IdSequence::parse(prefix, r.id)); });
  return last;
}

json lesson_body(const Lesson& lesson) {
  json segments = json::array();
  for (const auto& seg : lesson.segments) {
    if (const auto* video = std::get_if<VideoSegment>(&seg)) {
      json s{{"type", "video"}, {"video", video->video}, {"duration_ms", nullptr}};
      if (video->duration_ms) s["duration_ms"] = *video->duration_ms;
      segments.push_back(std::move(s));
    } else {
      segments.push_back({{"type", "exercise"}, {"exercise_id", std::get<ExerciseSegment>(seg).exercise.exercise_id}});
    }
  }
  return json{{"lesson_id", lesson.lesson_id},
              {"title", lesson.title},
              {"owner", lesson.owner},
              {"published", lesson.published},
              {"segments", std::move(segments)}};
}

std::vector<BlobRef> lesson_blobs(const Lesson& lesson) {
  std::vector<BlobRef> out;
  for (const auto& seg : lesson.segments) {
    if (const auto* video = std::get_if<VideoSegment>(&seg)) out.push_back(video->video);
  }
  return out;
}

json exercise_body(const ExerciseInfo& info) {
  return json{{"spec", info.spec},
              {"lesson_id", info.lesson_id},
              {"owner", info.owner},
              {"published", info.published},
              {"student_gallery_access", info.student_gallery_access}};
}

std::vector<BlobRef> exercise_blobs(const ExerciseSpec& spec) {
  if (spec.background) {
    if (const auto* ref = std::get_if<BlobRef>(&*spec.background)) return {*ref};
  }
  return {};
}

ExerciseInfo exercise_from_record(const Record& r) {
  ExerciseInfo info;
  info.spec = r.body.at("spec").get<ExerciseSpec>();
  info.lesson_id = r.body.at("lesson_id").get<std::string>();
  info.owner = r.body.at("owner").get<std::string>();
  info.published = r.body.at("published").get<bool>();
  info.student_gallery_access = r.body.at("student_gallery_access").get<bool>();
  return info;
}

void require_owner(const Lesson& lesson, const std::string& actor) {
  if (lesson.owner != actor) throw Error(Errc::forbidden_role, "lesson " + lesson.lesson_id + " belongs to another teacher");
}

[[noreturn]] void throw_first(const ValidationReport& report, const std::string& context) {
  throw Error(report.front().code, context + report.front().detail);
}

}  // namespace

Catalog::Catalog(Store& store, const Clock& clock, bool default_gallery_access)
    : store_(store),
      clock_(clock),
      default_gallery_access_(default_gallery_access),
      lesson_ids_('L', last_issued(store, EntityKind::lesson, 'L')),
      exercise_ids_('E', last_issued(store, EntityKind::exercise, 'E')) {}

Lesson Catalog::create_lesson(const std::string& owner, const std::string& title) {
  Lesson lesson{lesson_ids_.next(), title, {}, false, owner};
  store_.commit({RecordWrite{EntityKind::lesson, lesson.lesson_id, 0, lesson_body(lesson), {}}});
  return lesson;
}

std::optional<Lesson> Catalog::find_lesson(const std::string& lesson_id) const {
  auto rec = store_.get(EntityKind::lesson, lesson_id);
  if (!rec) return std::nullopt;
  const auto& body = rec->body;
  Lesson lesson;
  lesson.lesson_id = body.at("lesson_id").get<std::string>();
  lesson.title = body.at("title").get<std::string>();
  lesson.owner = body.at("owner").get<std::string>();
  lesson.published = body.at("published").get<bool>();
  for (const auto& s : body.at("segments")) {
    if (s.at("type") == "video") {
      VideoSegment video{s.at("video").get<BlobRef>(), std::nullopt};
      if (!s.at("duration_ms").is_null()) video.duration_ms = s.at("duration_ms").get<std::int64_t>();
      lesson.segments.emplace_back(std::move(video));
    } else {
      auto ex = store_.get(EntityKind::exercise, s.at("exercise_id").get<std::string>());
      if (!ex) throw Error(Errc::io_error, "lesson " + lesson_id + " references a missing exercise");
      lesson.segments.emplace_back(ExerciseSegment{exercise_from_record(*ex).spec});
    }
  }
  return lesson;
}

Lesson Catalog::lesson(const std::string& lesson_id) const {
  auto lesson = find_lesson(lesson_id);
  if (!lesson) throw Error(Errc::unknown_lesson, "no lesson " + lesson_id);
  return *lesson;
}

std::optional<ExerciseInfo> Catalog::find_exercise(const std::string& exercise_id) const {
  auto rec = store_.get(EntityKind::exercise, exercise_id);
  if (!rec) return std::nullopt;
  return exercise_from_record(*rec);
}

ExerciseInfo Catalog::exercise(const std::string& exercise_id) const {
  auto info = find_exercise(exercise_id);
  if (!info) throw Error(Errc::unknown_exercise, "no exercise " + exercise_id);
  return *info;
}

std::vector<std::string> Catalog::exercise_ids(const std::string& lesson_id) const {
  std::vector<std::string> out;
  for (const auto& seg : lesson(lesson_id).segments) {
    if (const auto* ex = std::get_if<ExerciseSegment>(&seg)) out.push_back(ex->exercise.exercise_id);
  }
  return out;
}

Lesson Catalog::add_video(const std::string& lesson_id, const std::string& actor, const BlobRef& video,
                          std::optional<std::int64_t> duration_ms) {
  if (duration_ms && *duration_ms <= 0) throw Error(Errc::unknown_duration, "video duration must be positive");
  for (int attempt = 0;; ++attempt) {
    auto rec = store_.get(EntityKind::lesson, lesson_id);
    if (!rec) throw Error(Errc::unknown_lesson, "no lesson " + lesson_id);
    Lesson lesson = this->lesson(lesson_id);
    require_owner(lesson, actor);
    append_segment(lesson, VideoSegment{video, duration_ms});
    try {
      store_.commit({RecordWrite{EntityKind::lesson, lesson_id, rec->version, lesson_body(lesson), lesson_blobs(lesson)}});
      return lesson;
    } catch (const Error& e) {
      if (e.code() != Errc::version_conflict || attempt + 1 >= kMaxAttempts) throw;
    }
  }
}

ExerciseSpec Catalog::add_exercise(const std::string& lesson_id, const std::string& actor, const ExerciseDraft& draft) {
  ExerciseSpec spec{exercise_ids_.next(), draft.instructions, draft.time_limit_s, draft.input_mode, draft.background,
                    clock_.now()};
  if (auto report = validate_exercise(spec); !report.empty()) throw_first(report, "");
  if (spec.background) {
    if (const auto* ref = std::get_if<BlobRef>(&*spec.background)) {
      auto type = store_.blob_media_type(ref->hash);
      if (!type || !is_image(*type)) throw Error(Errc::background_unavailable, "background blob " + ref->hash + " is not a stored image");
    }
  }
  for (int attempt = 0;; ++attempt) {
    auto rec = store_.get(EntityKind::lesson, lesson_id);
    if (!rec) throw Error(Errc::unknown_lesson, "no lesson " + lesson_id);
    Lesson lesson = this->lesson(lesson_id);
    require_owner(lesson, actor);
    append_segment(lesson, ExerciseSegment{spec});
    ExerciseInfo info{spec, lesson_id, lesson.owner, false, default_gallery_access_};
    try {
      store_.commit({
          RecordWrite{EntityKind::lesson, lesson_id, rec->version, lesson_body(lesson), lesson_blobs(lesson)},
          RecordWrite{EntityKind::exercise, spec.exercise_id, 0, exercise_body(info), exercise_blobs(spec)},
      });
      return spec;
    } catch (const Error& e) {
      if (e.code() != Errc::version_conflict || attempt + 1 >= kMaxAttempts) throw;
    }
  }
}

Lesson Catalog::publish(const std::string& lesson_id, const std::string& actor, const ImageResolver& resolver) {
  auto rec = store_.get(EntityKind::lesson, lesson_id);
  if (!rec) throw Error(Errc::unknown_lesson, "no lesson " + lesson_id);
  Lesson lesson = this->lesson(lesson_id);
  require_owner(lesson, actor);
  if (lesson.published) throw Error(Errc::lesson_published, "lesson " + lesson_id + " is already published");
  build_timeline(lesson);  // empty-lesson, unknown-duration

  std::vector<RecordWrite> writes;
  std::vector<BlobLease> leases;
  for (auto& seg : lesson.segments) {
    auto* ex = std::get_if<ExerciseSegment>(&seg);
    if (!ex) continue;
    auto& spec = ex->exercise;
    if (auto report = validate_exercise(spec, &resolver); !report.empty()) {
      throw_first(report, "exercise " + spec.exercise_id + ": ");
    }
    if (spec.background && std::holds_alternative<RemoteImage>(*spec.background)) {
      const auto& url = std::get<RemoteImage>(*spec.background).url;
      auto bytes = resolver.fetch(url);
      auto type = bytes ? sniff_image(*bytes) : std::nullopt;
      if (!type) throw Error(Errc::background_unavailable, "background '" + url + "' became unavailable");
      BlobRef ref = store_.put_blob(*bytes, *type);
      leases.push_back(store_.lease(ref.hash));
      spec.background = ref;
    }
    auto ex_rec = store_.get(EntityKind::exercise, spec.exercise_id);
    ExerciseInfo info = exercise_from_record(*ex_rec);
    info.spec = spec;
    info.published = true;
    writes.push_back(RecordWrite{EntityKind::exercise, spec.exercise_id, ex_rec->version, exercise_body(info),
                                 exercise_blobs(spec)});
  }
  mark_published(lesson);
  writes.push_back(RecordWrite{EntityKind::lesson, lesson_id, rec->version, lesson_body(lesson), lesson_blobs(lesson)});
  store_.commit(std::move(writes));
  return lesson;
}

void Catalog::set_gallery_access(const std::string& exercise_id, const std::string& actor, bool enabled) {
  for (int attempt = 0;; ++attempt) {
    auto rec = store_.get(EntityKind::exercise, exercise_id);
    if (!rec) throw Error(Errc::unknown_exercise, "no exercise " + exercise_id);
    ExerciseInfo info = exercise_from_record(*rec);
    if (info.owner != actor) throw Error(Errc::forbidden_role, "exercise " + exercise_id + " belongs to another teacher");
    info.student_gallery_access = enabled;
    try {
      store_.commit({RecordWrite{EntityKind::exercise, exercise_id, rec->version, exercise_body(info), rec->blobs}});
      return;
    } catch (const Error& e) {
      if (e.code() != Errc::version_conflict || attempt + 1 >= kMaxAttempts) throw;
    }
  }
}

bool StoreImageResolver::is_image_blob(const BlobRef& ref) const {
  auto type = store_.blob_media_type(ref.hash);
  return type && is_image(*type);
}

std::optional<std::string> StoreImageResolver::fetch(const std::string& url) const {
  if (url.rfind("file://", 0) == 0) {
    std::ifstream in(url.substr(7), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
  }
  if (url.rfind("http://", 0) != 0) return std::nullopt;
  const auto slash = url.find('/', 7);
  const std::string host = url.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : url.substr(slash);
  httplib::Client client(host);
  client.set_connection_timeout(5);
  client.set_read_timeout(10);
  client.set_follow_location(true);
  auto res = client.Get(path);
  if (!res || res->status != 200) return std::nullopt;
  return res->body;
}

}  // namespace pausepoint
