#include "pausepoint/session.hpp"

#include "pausepoint/error.hpp"
#include "pausepoint/image.hpp"

namespace pausepoint {

using nlohmann::json;

namespace {

RecordingSession session_from_record(const Record& r) {
  RecordingSession s;
  s.session_id = r.body.at("session_id").get<std::string>();
  s.exercise_id = r.body.at("exercise_id").get<std::string>();
  s.student_id = r.body.at("student_id").get<std::string>();
  s.started_at = parse_utc(r.body.at("started_at").get<std::string>()).value_or(Timestamp{});
  const auto state = r.body.at("state").get<std::string>();
  s.state = state == "open" ? SessionState::open : state == "submitted" ? SessionState::submitted : SessionState::discarded;
  return s;
}

json session_body(const RecordingSession& s, const std::optional<std::string>& response_id = std::nullopt) {
  json j{{"session_id", s.session_id},
         {"exercise_id", s.exercise_id},
         {"student_id", s.student_id},
         {"started_at", format_utc(s.started_at)},
         {"state", to_string(s.state)}};
  if (response_id) j["response_id"] = *response_id;
  return j;
}

std::optional<BlobRef> optional_ref(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<BlobRef>();
}

void put_optional(json& j, const char* key, const std::optional<BlobRef>& ref) {
  if (ref) {
    j[key] = *ref;
  } else {
    j[key] = nullptr;
  }
}

// Stores one artifact, pinning it until the commit settles.
struct StagedBlobs {
  Store& store;
  std::vector<BlobRef> refs;
  std::vector<BlobLease> leases;

  BlobRef put(std::string_view bytes, MediaType type) {
    BlobRef ref = store.put_blob(bytes, type);
    leases.push_back(store.lease(ref.hash));
    refs.push_back(ref);
    return ref;
  }
};

}  // namespace

std::string_view to_string(SessionState state) noexcept {
  switch (state) {
    case SessionState::open: return "open";
    case SessionState::discarded: return "discarded";
    case SessionState::submitted: return "submitted";
  }
  return "open";
}

bool valid_rating(int value) noexcept { return value >= 1 && value <= 5; }

std::vector<BlobRef> ResponseBundle::blobs() const {
  std::vector<BlobRef> out;
  for (const auto* ref : {&ink, &audio, &video, &poster, &thumbnail}) {
    if (*ref) out.push_back(**ref);
  }
  return out;
}

void to_json(json& j, const ResponseBundle& b) {
  j = json{{"response_id", b.response_id},
           {"exercise_id", b.exercise_id},
           {"student_id", b.student_id},
           {"student_name", b.student_name},
           {"session_id", b.session_id},
           {"input_mode", to_wire(b.input_mode)},
           {"submitted_at", format_utc(b.submitted_at)},
           {"duration_ms", b.duration_ms},
           {"declared_duration_ms", b.declared_duration_ms},
           {"ratings", {{"confidence", b.ratings.confidence}, {"helpfulness", b.ratings.helpfulness}}},
           {"processed", b.processed},
           {"labels", b.labels.names()},
           {"consistency_warnings", b.consistency_warnings}};
  put_optional(j, "ink", b.ink);
  put_optional(j, "audio", b.audio);
  put_optional(j, "video", b.video);
  put_optional(j, "poster", b.poster);
  put_optional(j, "thumbnail", b.thumbnail);
}

void from_json(const json& j, ResponseBundle& b) {
  b.response_id = j.at("response_id").get<std::string>();
  b.exercise_id = j.at("exercise_id").get<std::string>();
  b.student_id = j.at("student_id").get<std::string>();
  b.student_name = j.at("student_name").get<std::string>();
  b.session_id = j.at("session_id").get<std::string>();
  b.input_mode = input_mode_from_wire(j.at("input_mode").get<std::string>()).value_or(InputMode::InkOnly);
  b.submitted_at = parse_utc(j.at("submitted_at").get<std::string>()).value_or(Timestamp{});
  b.duration_ms = j.at("duration_ms").get<std::int64_t>();
  b.declared_duration_ms = j.at("declared_duration_ms").get<std::int64_t>();
  b.ratings = Ratings{j.at("ratings").at("confidence").get<int>(), j.at("ratings").at("helpfulness").get<int>()};
  b.processed = j.at("processed").get<bool>();
  b.labels = ResponseLabels::from_names(j.at("labels").get<std::vector<std::string>>());
  b.consistency_warnings = j.at("consistency_warnings").get<std::vector<std::string>>();
  b.ink = optional_ref(j, "ink");
  b.audio = optional_ref(j, "audio");
  b.video = optional_ref(j, "video");
  b.poster = optional_ref(j, "poster");
  b.thumbnail = optional_ref(j, "thumbnail");
}

std::string submission_key(const std::string& exercise_id, const std::string& student_id) {
  return "submission|" + exercise_id + "|" + student_id;
}

Recorder::Recorder(Store& store, const Catalog& catalog, const Clock& clock)
    : store_(store), catalog_(catalog), clock_(clock), response_ids_('R', [&] {
        std::uint64_t last = 0;
        store.for_each(EntityKind::response, [&](const Record& r) { last = std::max(last, IdSequence::parse('R', r.id)); });
        return last;
      }()) {}

std::optional<RecordingSession> Recorder::find_session(const std::string& session_id) const {
  auto rec = store_.get(EntityKind::session, session_id);
  if (!rec) return std::nullopt;
  return session_from_record(*rec);
}

std::optional<ResponseBundle> Recorder::find_response(const std::string& response_id) const {
  auto rec = store_.get(EntityKind::response, response_id);
  if (!rec) return std::nullopt;
  return rec->body.get<ResponseBundle>();
}

SessionStart Recorder::start_session(const std::string& exercise_id, const std::string& student_id) {
  auto info = catalog_.find_exercise(exercise_id);
  if (!info) throw Error(Errc::unknown_exercise, "no exercise " + exercise_id);
  if (!info->published) throw Error(Errc::lesson_unpublished, "lesson " + info->lesson_id + " is not published");
  RecordingSession session{"S" + random_token(), exercise_id, student_id, clock_.now(), SessionState::open};
  store_.commit({RecordWrite{EntityKind::session, session.session_id, 0, session_body(session), {}}});
  return SessionStart{session, preview_descriptor(info->spec)};
}

RecordingSession Recorder::discard_and_rerecord(const std::string& session_id, const std::string& student_id) {
  auto rec = store_.get(EntityKind::session, session_id);
  if (!rec) throw Error(Errc::unknown_session, "no session " + session_id);
  RecordingSession old = session_from_record(*rec);
  if (old.student_id != student_id) throw Error(Errc::forbidden_role, "session belongs to another student");
  if (old.state != SessionState::open) {
    throw Error(Errc::session_terminal, "session " + session_id + " is " + std::string(to_string(old.state)));
  }
  old.state = SessionState::discarded;
  RecordingSession fresh{"S" + random_token(), old.exercise_id, student_id, clock_.now(), SessionState::open};
  try {
    store_.commit({
        RecordWrite{EntityKind::session, session_id, rec->version, session_body(old), {}},
        RecordWrite{EntityKind::session, fresh.session_id, 0, session_body(fresh), {}},
    });
  } catch (const Error& e) {
    if (e.code() == Errc::version_conflict) throw Error(Errc::session_terminal, "session " + session_id + " changed concurrently");
    throw;
  }
  return fresh;
}

ResponseBundle Recorder::submit(const SubmitRequest& request) {
  auto rec = store_.get(EntityKind::session, request.session_id);
  if (!rec) throw Error(Errc::unknown_session, "no session " + request.session_id);
  RecordingSession session = session_from_record(*rec);
  if (session.student_id != request.student_id) throw Error(Errc::forbidden_role, "session belongs to another student");
  if (session.state != SessionState::open) {
    throw Error(Errc::session_terminal, "session " + session.session_id + " is " + std::string(to_string(session.state)));
  }
  const ExerciseInfo info = catalog_.exercise(session.exercise_id);
  const InputMode mode = info.spec.input_mode;

  if (!valid_rating(request.ratings.confidence) || !valid_rating(request.ratings.helpfulness)) {
    throw Error(Errc::invalid_rating, "ratings must be integers in 1..5");
  }
  const auto& a = request.artifacts;
  if ((a.ink && !ink_enabled(mode)) || (a.audio && !audio_enabled(mode)) || (a.video && !video_enabled(mode)) ||
      (a.poster && !video_enabled(mode))) {
    throw Error(Errc::mode_mismatch, "artifact not enabled by input mode " + std::string(to_wire(mode)));
  }
  if (!a.ink && !a.audio && !a.video) throw Error(Errc::malformed_artifact, "submission carries no artifacts");
  if (request.declared_duration_ms < 0) throw Error(Errc::malformed_artifact, "declared duration is negative");

  ResponseMedia media;
  media.mode = mode;
  try {
    if (a.ink) media.ink = parse_ink_stream(*a.ink);
    if (a.audio) media.audio = parse_wav(*a.audio);
    if (a.poster) decode_image(*a.poster);
  } catch (const Error& e) {
    throw Error(Errc::malformed_artifact, std::string(to_string(e.code())) + ": " + e.detail());
  }
  if (a.video) {
    if (a.video->empty()) throw Error(Errc::malformed_artifact, "video part is empty");
    media.video_duration_ms = request.declared_duration_ms;
  }
  const DurationReport duration = measure_duration(media);
  const std::int64_t limit_ms = static_cast<std::int64_t>(info.spec.time_limit_s) * 1000 + kSubmitGraceMs;
  if (duration.duration_ms > limit_ms) {
    throw Error(Errc::over_limit, "response is " + std::to_string(duration.duration_ms) + " ms, limit with grace is " +
                                      std::to_string(limit_ms) + " ms");
  }

  const std::string key = submission_key(session.exercise_id, session.student_id);
  if (store_.get(EntityKind::index, key)) {
    throw Error(Errc::duplicate_submission, "student already submitted to exercise " + session.exercise_id);
  }

  ResponseBundle bundle;
  bundle.response_id = response_ids_.next();
  bundle.exercise_id = session.exercise_id;
  bundle.student_id = session.student_id;
  bundle.student_name = (names_ ? names_(session.student_id) : std::nullopt).value_or(session.student_id);
  bundle.session_id = session.session_id;
  bundle.input_mode = mode;
  bundle.submitted_at = clock_.now();
  bundle.duration_ms = duration.duration_ms;
  bundle.declared_duration_ms = request.declared_duration_ms;
  bundle.ratings = request.ratings;
  bundle.consistency_warnings = duration.warnings;

  StagedBlobs staged{store_, {}, {}};
  try {
    if (a.ink) bundle.ink = staged.put(*a.ink, MediaType::ink_json);
    if (a.audio) bundle.audio = staged.put(*a.audio, MediaType::wav);
    if (a.video) bundle.video = staged.put(*a.video, MediaType::video);
    if (a.poster) bundle.poster = staged.put(*a.poster, *sniff_image(*a.poster));

    session.state = SessionState::submitted;
    store_.commit({
        RecordWrite{EntityKind::response, bundle.response_id, 0, bundle, bundle.blobs()},
        RecordWrite{EntityKind::index, key, 0, json{{"response_id", bundle.response_id}}, {}},
        RecordWrite{EntityKind::session, session.session_id, rec->version, session_body(session, bundle.response_id), {}},
    });
  } catch (const Error& e) {
    auto refs = staged.refs;
    staged.leases.clear();
    store_.release_unreferenced(refs);
    if (e.code() == Errc::version_conflict) {
      if (store_.get(EntityKind::index, key)) {
        throw Error(Errc::duplicate_submission, "student already submitted to exercise " + session.exercise_id);
      }
      throw Error(Errc::session_terminal, "session " + session.session_id + " changed concurrently");
    }
    throw;
  }
  if (on_submit_) on_submit_(bundle.response_id);
  return bundle;
}

}  // namespace pausepoint
