#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pausepoint {

// Machine-readable failure codes shared by every module and surfaced
// verbatim on the wire as the "code" field of error bodies.
enum class Errc {
  // lessons and exercises
  empty_instructions,
  limit_out_of_range,
  unknown_mode,
  background_unavailable,
  empty_lesson,
  unknown_duration,
  invalid_spec,
  lesson_published,
  unknown_lesson,
  unpublished,
  // ink documents
  malformed_document,
  malformed_sequence,
  out_of_range,
  non_monotonic_time,
  invalid_size,
  // media analysis
  unsupported_rate,
  artifact_unreadable,
  // recording sessions
  unknown_exercise,
  lesson_unpublished,
  unknown_session,
  session_terminal,
  over_limit,
  invalid_rating,
  malformed_artifact,
  mode_mismatch,
  duplicate_submission,
  // gallery
  unknown_sort_key,
  unknown_response,
  not_yet_processed,
  empty_comment,
  bad_parent,
  like_with_body,
  // store
  storage_full,
  empty_content,
  version_conflict,
  missing_blob,
  io_error,
  // service and operator tooling
  forbidden_role,
  unauthenticated,
  payload_too_large,
  not_found,
  busy,
  bad_request,
  bad_config,
  port_in_use,
  bad_manifest,
  missing_file,
};

std::string_view to_string(Errc code) noexcept;
std::optional<Errc> errc_from_string(std::string_view name) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

// Ink parse failures that can be pinned to one event carry its index.
class InkFormatError : public Error {
 public:
  InkFormatError(Errc code, std::string detail, std::optional<std::size_t> event_index = std::nullopt);

  std::optional<std::size_t> event_index() const noexcept { return event_index_; }

 private:
  std::optional<std::size_t> event_index_;
};

}  // namespace pausepoint
