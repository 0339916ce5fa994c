#include "pausepoint/service.hpp"

#include <httplib.h>

#include <atomic>
#include <iostream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "pausepoint/platform.hpp"

namespace pausepoint {
namespace {

using nlohmann::json;
using httplib::ContentReader;
using httplib::Request;
using httplib::Response;

constexpr std::size_t kSubmitBodyCap =
    kInkPartCap + kAudioPartCap + kVideoPartCap + kPosterPartCap + kMetadataPartCap + (1u << 20);
constexpr std::size_t kBlobBodyCap = kVideoPartCap;
// Rejected bodies up to this size are read to the end before replying.
constexpr std::size_t kDrainCap = 16u << 20;

void send_json(Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, Errc code, const std::string& detail) {
  send_json(res, http_status(code), json{{"code", to_string(code)}, {"detail", detail}});
}

// Bounded in-flight upload bytes across all connections.
class UploadBudget {
 public:
  explicit UploadBudget(std::size_t capacity) : capacity_(capacity) {}

  class Lease {
   public:
    Lease(UploadBudget* budget, std::size_t n) : budget_(budget), n_(n) {}
    Lease(Lease&& other) noexcept : budget_(std::exchange(other.budget_, nullptr)), n_(other.n_) {}
    Lease& operator=(Lease&&) = delete;
    ~Lease() {
      if (budget_) budget_->release(n_);
    }

   private:
    UploadBudget* budget_;
    std::size_t n_;
  };

  std::optional<Lease> try_acquire(std::size_t n) {
    std::lock_guard lock(mu_);
    if (in_flight_ + n > capacity_) return std::nullopt;
    in_flight_ += n;
    return Lease(this, n);
  }

 private:
  void release(std::size_t n) {
    std::lock_guard lock(mu_);
    in_flight_ -= n;
  }

  std::mutex mu_;
  std::size_t capacity_;
  std::size_t in_flight_ = 0;
};

json lesson_json(const Lesson& lesson) {
  json segments = json::array();
  for (const auto& seg : lesson.segments) {
    if (const auto* v = std::get_if<VideoSegment>(&seg)) {
      json s{{"type", "video"}, {"video", v->video}, {"duration_ms", nullptr}};
      if (v->duration_ms) s["duration_ms"] = *v->duration_ms;
      segments.push_back(std::move(s));
    } else {
      segments.push_back({{"type", "exercise"}, {"exercise", std::get<ExerciseSegment>(seg).exercise}});
    }
  }
  return json{{"lesson_id", lesson.lesson_id},
              {"title", lesson.title},
              {"owner", lesson.owner},
              {"published", lesson.published},
              {"segments", std::move(segments)}};
}

std::optional<BackgroundImage> parse_background(const json& body) {
  if (!body.contains("background") || body.at("background").is_null()) return std::nullopt;
  const json& bg = body.at("background");
  if (bg.contains("url")) return BackgroundImage{RemoteImage{bg.at("url").get<std::string>()}};
  return BackgroundImage{bg.get<BlobRef>()};
}

json parse_body(const Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw Error(Errc::bad_request, "request body must be a JSON object");
  return body;
}

std::optional<std::string> query(const Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

}  // namespace

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::unauthenticated: return 401;
    case Errc::forbidden_role:
    case Errc::unpublished:
    case Errc::lesson_unpublished: return 403;
    case Errc::unknown_lesson:
    case Errc::unknown_exercise:
    case Errc::unknown_session:
    case Errc::unknown_response:
    case Errc::not_found:
    case Errc::missing_blob: return 404;
    case Errc::lesson_published:
    case Errc::session_terminal:
    case Errc::duplicate_submission:
    case Errc::version_conflict:
    case Errc::not_yet_processed: return 409;
    case Errc::payload_too_large: return 413;
    case Errc::empty_instructions:
    case Errc::limit_out_of_range:
    case Errc::unknown_mode:
    case Errc::background_unavailable:
    case Errc::empty_lesson:
    case Errc::unknown_duration:
    case Errc::invalid_spec:
    case Errc::over_limit:
    case Errc::invalid_rating:
    case Errc::mode_mismatch:
    case Errc::empty_comment:
    case Errc::bad_parent:
    case Errc::like_with_body: return 422;
    case Errc::busy: return 503;
    case Errc::storage_full: return 507;
    case Errc::io_error:
    case Errc::port_in_use: return 500;
    default: return 400;
  }
}

struct Service::Impl {
  Impl(Platform& p, TokenAuthenticator a, ServiceOptions o)
      : platform(p), auth(std::move(a)), options(std::move(o)), budget(options.max_inflight_upload_bytes) {}

  Platform& platform;
  TokenAuthenticator auth;
  ServiceOptions options;
  UploadBudget budget;
  httplib::Server server;
  std::thread thread;
  bool bound = false;

  Principal authenticate(const Request& req) const {
    const std::string header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.compare(0, prefix.size(), prefix) != 0) throw Error(Errc::unauthenticated, "missing bearer token");
    auto principal = auth.authenticate(std::string_view(header).substr(prefix.size()));
    if (!principal) throw Error(Errc::unauthenticated, "unknown token");
    return *principal;
  }

  static void require_teacher(const Principal& who) {
    if (who.role != Role::teacher) throw Error(Errc::forbidden_role, who.user_id + " is not a teacher");
  }
  static void require_student(const Principal& who) {
    if (who.role != Role::student) throw Error(Errc::forbidden_role, who.user_id + " is not a student");
  }

  Lesson owned_lesson(const Principal& who, const std::string& lesson_id) const {
    require_teacher(who);
    auto lesson = platform.catalog().find_lesson(lesson_id);
    if (!lesson) throw Error(Errc::unknown_lesson, lesson_id);
    if (lesson->owner != who.user_id) throw Error(Errc::forbidden_role, who.user_id + " does not own " + lesson_id);
    return *lesson;
  }

  ExerciseInfo viewable_exercise(const Principal& who, const std::string& exercise_id) const {
    auto info = platform.catalog().find_exercise(exercise_id);
    if (!info) throw Error(Errc::unknown_exercise, exercise_id);
    if (!platform.gallery().can_view(who, *info)) {
      throw Error(Errc::forbidden_role, who.user_id + " may not view the gallery of " + exercise_id);
    }
    return *info;
  }

  ResponseBundle viewable_response(const Principal& who, const std::string& response_id) const {
    auto bundle = platform.gallery().find_response(response_id);
    if (!bundle) throw Error(Errc::unknown_response, response_id);
    viewable_exercise(who, bundle->exercise_id);
    return *bundle;
  }

  template <class Fn>
  auto guarded(Fn fn) {
    return [this, fn](const Request& req, Response& res) {
      try {
        fn(authenticate(req), req, res);
      } catch (...) {
        translate(res);
      }
    };
  }

  template <class Fn>
  auto guarded_upload(Fn fn) {
    return [this, fn](const Request& req, Response& res, const ContentReader& reader) {
      bool consumed = false;
      const ContentReader tracked(
          [&](httplib::ContentReceiver receiver) {
            consumed = true;
            return reader(std::move(receiver));
          },
          [&](httplib::MultipartContentHeader header, httplib::ContentReceiver receiver) {
            consumed = true;
            return reader(std::move(header), std::move(receiver));
          });
      try {
        fn(authenticate(req), req, res, tracked);
      } catch (...) {
        translate(res);
        // Read a modest unread body so the client sees the error instead of a reset.
        if (!consumed && req.has_header("Content-Length") && req.get_header_value_u64("Content-Length") <= kDrainCap) {
          auto discard = [](const char*, std::size_t) { return true; };
          if (req.is_multipart_form_data()) {
            reader([](const httplib::MultipartFormData&) { return true; }, discard);
          } else {
            reader(discard);
          }
        }
      }
    };
  }

  static void translate(Response& res) {
    try {
      throw;
    } catch (const Error& e) {
      send_error(res, e.code(), e.detail());
    } catch (const json::exception& e) {
      send_error(res, Errc::bad_request, e.what());
    } catch (const std::exception& e) {
      std::cerr << json{{"event", "request-failed"}, {"detail", e.what()}}.dump() << '\n';
      send_error(res, Errc::io_error, e.what());
    }
  }

  UploadBudget::Lease admit(const Request& req, std::size_t body_cap) {
    std::size_t declared = body_cap;
    if (req.has_header("Content-Length")) {
      declared = static_cast<std::size_t>(req.get_header_value_u64("Content-Length"));
      if (declared > body_cap) throw Error(Errc::payload_too_large, "request body exceeds " + std::to_string(body_cap) + " bytes");
    }
    auto lease = budget.try_acquire(declared);
    if (!lease) throw Error(Errc::busy, "too many uploads in flight");
    return std::move(*lease);
  }

  void routes();
  void lesson_routes();
  void recording_routes();
  void review_routes();
  void blob_routes();
};

void Service::Impl::routes() {
  server.set_payload_max_length(kSubmitBodyCap);
  // The library default adds SO_REUSEPORT, which would let a second server share the port.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  server.new_task_queue = [n = options.worker_threads] { return new httplib::ThreadPool(std::max<std::size_t>(1, n)); };
  server.set_error_handler([](const Request&, Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const Errc code = res.status == 404 ? Errc::not_found
                      : res.status == 413 ? Errc::payload_too_large
                                          : Errc::bad_request;
    res.set_content(json{{"code", to_string(code)}, {"detail", "HTTP " + std::to_string(res.status)}}.dump(),
                    "application/json");
    return httplib::Server::HandlerResponse::Handled;
  });
  lesson_routes();
  recording_routes();
  review_routes();
  blob_routes();
}

void Service::Impl::lesson_routes() {
  server.Post("/lessons", guarded([this](const Principal& who, const Request& req, Response& res) {
    require_teacher(who);
    const json body = parse_body(req);
    const Lesson lesson = platform.catalog().create_lesson(who.user_id, body.value("title", std::string()));
    send_json(res, 201, lesson_json(lesson));
  }));

  server.Get(R"(/lessons/([A-Za-z0-9]+))", guarded([this](const Principal& who, const Request& req, Response& res) {
    auto lesson = platform.catalog().find_lesson(req.matches[1]);
    if (!lesson) throw Error(Errc::unknown_lesson, req.matches[1]);
    if (!lesson->published && lesson->owner != who.user_id) throw Error(Errc::unpublished, lesson->lesson_id);
    send_json(res, 200, lesson_json(*lesson));
  }));

  server.Post(R"(/lessons/([A-Za-z0-9]+)/segments)",
              guarded([this](const Principal& who, const Request& req, Response& res) {
                const std::string lesson_id = req.matches[1];
                owned_lesson(who, lesson_id);
                const json body = parse_body(req);
                const std::string type = body.value("type", std::string());
                if (type == "video") {
                  std::optional<std::int64_t> duration;
                  if (body.contains("duration_ms") && !body.at("duration_ms").is_null()) {
                    duration = body.at("duration_ms").get<std::int64_t>();
                  }
                  const Lesson lesson =
                      platform.catalog().add_video(lesson_id, who.user_id, body.at("video").get<BlobRef>(), duration);
                  send_json(res, 201, json{{"lesson", lesson_json(lesson)}});
                } else if (type == "exercise") {
                  ExerciseDraft draft;
                  draft.instructions = body.value("instructions", std::string());
                  draft.time_limit_s = body.value("time_limit_s", 0);
                  const std::string mode = body.value("input_mode", std::string());
                  const auto parsed = input_mode_from_wire(mode);
                  if (!parsed) throw Error(Errc::unknown_mode, "unknown input mode '" + mode + "'");
                  draft.input_mode = *parsed;
                  draft.background = parse_background(body);
                  const ExerciseSpec spec = platform.catalog().add_exercise(lesson_id, who.user_id, draft);
                  send_json(res, 201,
                            json{{"exercise_id", spec.exercise_id},
                                 {"lesson", lesson_json(platform.catalog().lesson(lesson_id))}});
                } else {
                  throw Error(Errc::bad_request, "segment type must be video or exercise");
                }
              }));

  server.Post(R"(/lessons/([A-Za-z0-9]+)/publish)",
              guarded([this](const Principal& who, const Request& req, Response& res) {
                const std::string lesson_id = req.matches[1];
                owned_lesson(who, lesson_id);
                const Lesson lesson = platform.catalog().publish(lesson_id, who.user_id, platform.resolver());
                send_json(res, 200, lesson_json(lesson));
              }));

  server.Get(R"(/lessons/([A-Za-z0-9]+)/timeline)",
             guarded([this](const Principal& who, const Request& req, Response& res) {
               auto lesson = platform.catalog().find_lesson(req.matches[1]);
               if (!lesson) throw Error(Errc::unknown_lesson, req.matches[1]);
               if (!lesson->published && lesson->owner != who.user_id) {
                 throw Error(Errc::unpublished, lesson->lesson_id + " is not published");
               }
               json exercises = json::array();
               for (const auto& seg : lesson->segments) {
                 if (const auto* e = std::get_if<ExerciseSegment>(&seg)) {
                   exercises.push_back(preview_descriptor(e->exercise));
                 }
               }
               send_json(res, 200,
                         json{{"lesson_id", lesson->lesson_id},
                              {"plan", build_timeline(*lesson)},
                              {"exercises", std::move(exercises)}});
             }));

  server.Put(R"(/exercises/([A-Za-z0-9]+)/gallery-access)",
             guarded([this](const Principal& who, const Request& req, Response& res) {
               require_teacher(who);
               const std::string exercise_id = req.matches[1];
               auto info = platform.catalog().find_exercise(exercise_id);
               if (!info) throw Error(Errc::unknown_exercise, exercise_id);
               if (info->owner != who.user_id) throw Error(Errc::forbidden_role, who.user_id + " does not own " + exercise_id);
               const json body = parse_body(req);
               const bool enabled = body.at("enabled").get<bool>();
               platform.catalog().set_gallery_access(exercise_id, who.user_id, enabled);
               send_json(res, 200, json{{"exercise_id", exercise_id}, {"student_gallery_access", enabled}});
             }));
}

void Service::Impl::recording_routes() {
  server.Post(R"(/exercises/([A-Za-z0-9]+)/sessions)",
              guarded([this](const Principal& who, const Request& req, Response& res) {
                require_student(who);
                const std::string exercise_id = req.matches[1];
                const json body = parse_body(req);
                json out;
                if (body.contains("replaces") && !body.at("replaces").is_null()) {
                  const std::string old_id = body.at("replaces").get<std::string>();
                  auto old = platform.recorder().find_session(old_id);
                  if (!old || old->student_id != who.user_id) throw Error(Errc::unknown_session, old_id);
                  if (old->exercise_id != exercise_id) {
                    throw Error(Errc::bad_request, "session " + old_id + " belongs to another exercise");
                  }
                  const RecordingSession fresh = platform.recorder().discard_and_rerecord(old_id, who.user_id);
                  out = json{{"session_id", fresh.session_id},
                             {"view", preview_descriptor(platform.catalog().exercise(exercise_id).spec)}};
                } else {
                  const SessionStart started = platform.recorder().start_session(exercise_id, who.user_id);
                  out = json{{"session_id", started.session.session_id}, {"view", started.view}};
                }
                send_json(res, 201, out);
              }));

  server.Post(R"(/exercises/([A-Za-z0-9]+)/responses)",
              guarded_upload([this](const Principal& who, const Request& req, Response& res, const ContentReader& reader) {
                require_student(who);
                const std::string exercise_id = req.matches[1];
                if (!req.is_multipart_form_data()) throw Error(Errc::malformed_artifact, "expected multipart/form-data");
                auto lease = admit(req, kSubmitBodyCap);

                std::map<std::string, std::string> parts;
                std::string current;
                std::size_t cap = 0;
                std::optional<Error> failure;
                auto cap_for = [](const std::string& name) -> std::size_t {
                  if (name == "metadata") return kMetadataPartCap;
                  if (name == "ink") return kInkPartCap;
                  if (name == "audio") return kAudioPartCap;
                  if (name == "video") return kVideoPartCap;
                  if (name == "poster") return kPosterPartCap;
                  return 0;
                };
                // After a failure the rest of a modest body is read and dropped so
                // the error response reaches the client.
                std::size_t drained = 0;
                const bool ok = reader(
                    [&](const httplib::MultipartFormData& part) {
                      if (failure) return true;
                      current = part.name;
                      cap = cap_for(current);
                      if (cap == 0) {
                        failure = Error(Errc::malformed_artifact, "unexpected part '" + current + "'");
                        return true;
                      }
                      if (!parts.emplace(current, std::string()).second) {
                        failure = Error(Errc::malformed_artifact, "duplicate part '" + current + "'");
                        return true;
                      }
                      return true;
                    },
                    [&](const char* data, std::size_t n) {
                      if (failure) {
                        drained += n;
                        return drained <= kDrainCap;
                      }
                      std::string& buf = parts[current];
                      if (buf.size() + n > cap) {
                        failure = Error(Errc::payload_too_large,
                                        "part '" + current + "' exceeds " + std::to_string(cap) + " bytes");
                        return true;
                      }
                      buf.append(data, n);
                      return true;
                    });
                if (failure) throw *failure;
                if (!ok) throw Error(Errc::malformed_artifact, "unreadable multipart body");

                auto meta_it = parts.find("metadata");
                if (meta_it == parts.end()) throw Error(Errc::malformed_artifact, "missing metadata part");
                const json meta = json::parse(meta_it->second, nullptr, false);
                if (meta.is_discarded() || !meta.is_object()) throw Error(Errc::malformed_artifact, "metadata is not a JSON object");

                SubmitRequest submit;
                try {
                  submit.session_id = meta.at("session_id").get<std::string>();
                  submit.declared_duration_ms = meta.at("declared_duration_ms").get<std::int64_t>();
                  submit.ratings.confidence = meta.at("ratings").at("confidence").get<int>();
                  submit.ratings.helpfulness = meta.at("ratings").at("helpfulness").get<int>();
                } catch (const json::exception& e) {
                  throw Error(Errc::malformed_artifact, std::string("metadata: ") + e.what());
                }
                submit.student_id = who.user_id;
                auto session = platform.recorder().find_session(submit.session_id);
                if (!session || session->exercise_id != exercise_id) throw Error(Errc::unknown_session, submit.session_id);
                auto take = [&](const char* name) -> std::optional<std::string> {
                  auto it = parts.find(name);
                  if (it == parts.end()) return std::nullopt;
                  return std::move(it->second);
                };
                submit.artifacts.ink = take("ink");
                submit.artifacts.audio = take("audio");
                submit.artifacts.video = take("video");
                submit.artifacts.poster = take("poster");

                const ResponseBundle bundle = platform.recorder().submit(submit);
                send_json(res, 201,
                          json{{"response_id", bundle.response_id},
                               {"duration_ms", bundle.duration_ms},
                               {"consistency_warnings", bundle.consistency_warnings}});
              }));
}

void Service::Impl::review_routes() {
  server.Get(R"(/exercises/([A-Za-z0-9]+)/gallery)",
             guarded([this](const Principal& who, const Request& req, Response& res) {
               const std::string exercise_id = req.matches[1];
               viewable_exercise(who, exercise_id);
               SortSpec sort;
               if (auto key = query(req, "sort")) sort.key = parse_sort_key(*key);
               if (auto dir = query(req, "dir")) {
                 auto parsed = sort_direction_from_string(*dir);
                 if (!parsed) throw Error(Errc::bad_request, "dir must be asc or desc");
                 sort.direction = *parsed;
               }
               GalleryFilters filters;
               if (auto mode = query(req, "mode")) {
                 filters.mode_present = modality_from_string(*mode);
                 if (!filters.mode_present) throw Error(Errc::bad_request, "mode must be ink, audio or video");
               }
               if (auto review = query(req, "review")) {
                 filters.review_status = review_status_from_string(*review);
                 if (!filters.review_status) throw Error(Errc::bad_request, "review must be reviewed or not-reviewed");
               }
               auto cards = platform.gallery().list_responses(exercise_id, sort, filters, who.user_id);
               // Derived labels are teacher-facing only.
               if (who.role == Role::student) {
                 for (auto& card : cards) card.labels = {};
               }
               send_json(res, 200, json{{"exercise_id", exercise_id}, {"cards", cards}});
             }));

  server.Get(R"(/exercises/([A-Za-z0-9]+)/export)",
             guarded([this](const Principal& who, const Request& req, Response& res) {
               require_teacher(who);
               const std::string exercise_id = req.matches[1];
               viewable_exercise(who, exercise_id);
               const std::string format = query(req, "format").value_or("json");
               if (format != "csv" && format != "json") throw Error(Errc::bad_request, "format must be csv or json");
               const auto records = platform.gallery().export_records(exercise_id);
               res.status = 200;
               if (format == "csv") {
                 res.set_content(export_csv(records), "text/csv");
               } else {
                 res.set_content(export_json(records), "application/json");
               }
             }));

  server.Get(R"(/responses/([A-Za-z0-9]+)/manifest)",
             guarded([this](const Principal& who, const Request& req, Response& res) {
               const std::string response_id = req.matches[1];
               viewable_response(who, response_id);
               send_json(res, 200, platform.gallery().playback_manifest(response_id, who.user_id));
             }));

  server.Get(R"(/responses/([A-Za-z0-9]+)/annotations)",
             guarded([this](const Principal& who, const Request& req, Response& res) {
               const std::string response_id = req.matches[1];
               viewable_response(who, response_id);
               send_json(res, 200,
                         json{{"response_id", response_id}, {"annotations", platform.gallery().annotations(response_id)}});
             }));

  server.Post(R"(/responses/([A-Za-z0-9]+)/annotations)",
              guarded([this](const Principal& who, const Request& req, Response& res) {
                const std::string response_id = req.matches[1];
                viewable_response(who, response_id);
                const json body = parse_body(req);
                const std::string kind_text = body.value("kind", std::string());
                const auto kind = annotation_kind_from_string(kind_text);
                if (!kind) throw Error(Errc::bad_request, "kind must be like or comment");
                std::optional<std::string> text;
                std::optional<std::string> parent;
                if (body.contains("body") && !body.at("body").is_null()) text = body.at("body").get<std::string>();
                if (body.contains("parent_id") && !body.at("parent_id").is_null()) {
                  parent = body.at("parent_id").get<std::string>();
                }
                const Annotation a = platform.gallery().add_annotation(who.user_id, response_id, *kind, text, parent);
                send_json(res, 201, a);
              }));
}

void Service::Impl::blob_routes() {
  server.Get(R"(/blobs/([0-9a-f]+))", guarded([this](const Principal&, const Request& req, Response& res) {
               const std::string hash = req.matches[1];
               auto type = platform.store().blob_media_type(hash);
               auto bytes = platform.store().read_blob(hash);
               if (!type || !bytes) throw Error(Errc::not_found, "no blob " + hash);
               res.status = 200;
               res.set_content(std::move(*bytes), std::string(mime_type(*type)));
             }));

  // Teacher uploads of lesson videos and background images.
  server.Post("/blobs", guarded_upload([this](const Principal& who, const Request& req, Response& res,
                                              const ContentReader& reader) {
                require_teacher(who);
                const std::string type_text = query(req, "type").value_or("");
                const auto type = media_type_from_string(type_text);
                if (!type) throw Error(Errc::bad_request, "unknown blob type '" + type_text + "'");
                auto lease = admit(req, kBlobBodyCap);
                std::string body;
                bool too_large = false;
                const bool ok = reader([&](const char* data, std::size_t n) {
                  if (body.size() + n > kBlobBodyCap) {
                    too_large = true;
                    return false;
                  }
                  body.append(data, n);
                  return true;
                });
                if (too_large) throw Error(Errc::payload_too_large, "blob exceeds " + std::to_string(kBlobBodyCap) + " bytes");
                if (!ok) throw Error(Errc::bad_request, "unreadable body");
                if (is_image(*type) && sniff_image(body) != type) {
                  throw Error(Errc::malformed_artifact, "content is not " + type_text);
                }
                send_json(res, 201, platform.store().put_blob(body, *type));
              }));
}

Service::Service(Platform& platform, TokenAuthenticator auth, ServiceOptions options)
    : impl_(std::make_unique<Impl>(platform, std::move(auth), std::move(options))) {
  for (const auto& p : impl_->auth.principals()) platform.register_user(p);
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  if (impl_->bound) return port_;
  if (impl_->options.port == 0) {
    port_ = impl_->server.bind_to_any_port(impl_->options.host);
  } else {
    port_ = impl_->server.bind_to_port(impl_->options.host, impl_->options.port) ? impl_->options.port : -1;
  }
  if (port_ < 0) {
    throw Error(Errc::port_in_use,
                "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  impl_->bound = true;
  return port_;
}

void Service::run() {
  bind();
  impl_->server.listen_after_bind();
}

int Service::start() {
  bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace pausepoint
