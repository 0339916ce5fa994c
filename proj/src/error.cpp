#include "pausepoint/error.hpp"

#include <array>
#include <utility>

namespace pausepoint {
namespace {

constexpr std::array<std::pair<Errc, std::string_view>, 47> kNames{{
    {Errc::empty_instructions, "empty-instructions"},
    {Errc::limit_out_of_range, "limit-out-of-range"},
    {Errc::unknown_mode, "unknown-mode"},
    {Errc::background_unavailable, "background-unavailable"},
    {Errc::empty_lesson, "empty-lesson"},
    {Errc::unknown_duration, "unknown-duration"},
    {Errc::invalid_spec, "invalid-spec"},
    {Errc::lesson_published, "lesson-published"},
    {Errc::unknown_lesson, "unknown-lesson"},
    {Errc::unpublished, "unpublished"},
    {Errc::malformed_document, "malformed-document"},
    {Errc::malformed_sequence, "malformed-sequence"},
    {Errc::out_of_range, "out-of-range"},
    {Errc::non_monotonic_time, "non-monotonic-time"},
    {Errc::invalid_size, "invalid-size"},
    {Errc::unsupported_rate, "unsupported-rate"},
    {Errc::artifact_unreadable, "artifact-unreadable"},
    {Errc::unknown_exercise, "unknown-exercise"},
    {Errc::lesson_unpublished, "lesson-unpublished"},
    {Errc::unknown_session, "unknown-session"},
    {Errc::session_terminal, "session-terminal"},
    {Errc::over_limit, "over-limit"},
    {Errc::invalid_rating, "invalid-rating"},
    {Errc::malformed_artifact, "malformed-artifact"},
    {Errc::mode_mismatch, "mode-mismatch"},
    {Errc::duplicate_submission, "duplicate-submission"},
    {Errc::unknown_sort_key, "unknown-sort-key"},
    {Errc::unknown_response, "unknown-response"},
    {Errc::not_yet_processed, "not-yet-processed"},
    {Errc::empty_comment, "empty-comment"},
    {Errc::bad_parent, "bad-parent"},
    {Errc::like_with_body, "like-with-body"},
    {Errc::storage_full, "storage-full"},
    {Errc::empty_content, "empty-content"},
    {Errc::version_conflict, "version-conflict"},
    {Errc::missing_blob, "missing-blob"},
    {Errc::io_error, "io-error"},
    {Errc::forbidden_role, "forbidden-role"},
    {Errc::unauthenticated, "unauthenticated"},
    {Errc::payload_too_large, "payload-too-large"},
    {Errc::not_found, "not-found"},
    {Errc::busy, "busy"},
    {Errc::bad_request, "bad-request"},
    {Errc::bad_config, "bad-config"},
    {Errc::port_in_use, "port-in-use"},
    {Errc::bad_manifest, "bad-manifest"},
    {Errc::missing_file, "missing-file"},
}};

}  // namespace

std::string_view to_string(Errc code) noexcept {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "internal";
}

std::optional<Errc> errc_from_string(std::string_view name) noexcept {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

Error::Error(Errc code, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(std::move(detail)) {}

InkFormatError::InkFormatError(Errc code, std::string detail, std::optional<std::size_t> event_index)
    : Error(code, std::move(detail)), event_index_(event_index) {}

}  // namespace pausepoint
