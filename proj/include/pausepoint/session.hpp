#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pausepoint/analysis.hpp"
#include "pausepoint/catalog.hpp"
#include "pausepoint/model.hpp"
#include "pausepoint/store.hpp"

namespace pausepoint {

// Accepted responses may run this far past the exercise's time limit.
inline constexpr std::int64_t kSubmitGraceMs = 2000;

enum class SessionState { open, discarded, submitted };

std::string_view to_string(SessionState state) noexcept;

struct RecordingSession {
  std::string session_id;
  std::string exercise_id;
  std::string student_id;
  Timestamp started_at{};
  SessionState state = SessionState::open;
};

struct Ratings {
  int confidence = 0;
  int helpfulness = 0;
  friend bool operator==(const Ratings&, const Ratings&) = default;
};

bool valid_rating(int value) noexcept;

struct ResponseBundle {
  std::string response_id;
  std::string exercise_id;
  std::string student_id;
  std::string student_name;
  std::string session_id;
  InputMode input_mode = InputMode::InkOnly;
  Timestamp submitted_at{};
  std::int64_t duration_ms = 0;
  std::int64_t declared_duration_ms = 0;
  std::optional<BlobRef> ink;
  std::optional<BlobRef> audio;
  std::optional<BlobRef> video;
  std::optional<BlobRef> poster;
  Ratings ratings;
  // Written once by post-processing.
  bool processed = false;
  ResponseLabels labels;
  std::optional<BlobRef> thumbnail;
  std::vector<std::string> consistency_warnings;

  std::vector<BlobRef> blobs() const;
};

void to_json(nlohmann::json& j, const ResponseBundle& bundle);
void from_json(const nlohmann::json& j, ResponseBundle& bundle);

// Raw artifact bytes as received from the client.
struct SubmittedArtifacts {
  std::optional<std::string> ink;     // ink JSON document
  std::optional<std::string> audio;   // WAV
  std::optional<std::string> video;   // opaque container
  std::optional<std::string> poster;  // PNG or JPEG still
};

struct SubmitRequest {
  std::string session_id;
  std::string student_id;
  SubmittedArtifacts artifacts;
  std::int64_t declared_duration_ms = 0;
  Ratings ratings;
};

struct SessionStart {
  RecordingSession session;
  RecordingView view;
};

// Recording-session lifecycle and the atomic submit path.
class Recorder {
 public:
  using NameLookup = std::function<std::optional<std::string>(const std::string& user_id)>;
  using SubmitListener = std::function<void(const std::string& response_id)>;

  Recorder(Store& store, const Catalog& catalog, const Clock& clock);

  void set_name_lookup(NameLookup lookup) { names_ = std::move(lookup); }
  void set_submit_listener(SubmitListener listener) { on_submit_ = std::move(listener); }

  // Throws unknown-exercise, lesson-unpublished.
  SessionStart start_session(const std::string& exercise_id, const std::string& student_id);
  // Throws unknown-session, session-terminal.
  RecordingSession discard_and_rerecord(const std::string& session_id, const std::string& student_id);
  // Throws over-limit, invalid-rating, malformed-artifact, mode-mismatch,
  // duplicate-submission, session-terminal, unknown-session.
  ResponseBundle submit(const SubmitRequest& request);

  std::optional<RecordingSession> find_session(const std::string& session_id) const;
  std::optional<ResponseBundle> find_response(const std::string& response_id) const;

 private:
  Store& store_;
  const Catalog& catalog_;
  const Clock& clock_;
  IdSequence response_ids_;
  NameLookup names_;
  SubmitListener on_submit_;
};

std::string submission_key(const std::string& exercise_id, const std::string& student_id);

}  // namespace pausepoint
