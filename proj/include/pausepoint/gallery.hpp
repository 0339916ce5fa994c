#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pausepoint/analysis.hpp"
#include "pausepoint/catalog.hpp"
#include "pausepoint/principal.hpp"
#include "pausepoint/session.hpp"
#include "pausepoint/store.hpp"

namespace pausepoint {

enum class SortKey { submitted_at, duration, student_name, confidence, helpfulness };
enum class SortDirection { ascending, descending };

inline constexpr SortKey kAllSortKeys[] = {SortKey::submitted_at, SortKey::duration, SortKey::student_name,
                                           SortKey::confidence, SortKey::helpfulness};

std::string_view to_string(SortKey key) noexcept;
// Throws unknown-sort-key.
SortKey parse_sort_key(std::string_view text);
std::string_view to_string(SortDirection direction) noexcept;
std::optional<SortDirection> sort_direction_from_string(std::string_view text) noexcept;

struct SortSpec {
  SortKey key = SortKey::submitted_at;
  SortDirection direction = SortDirection::ascending;
};

enum class Modality { ink, audio, video };
std::string_view to_string(Modality m) noexcept;
std::optional<Modality> modality_from_string(std::string_view text) noexcept;

enum class ReviewStatus { reviewed, not_reviewed };
std::optional<ReviewStatus> review_status_from_string(std::string_view text) noexcept;

struct GalleryFilters {
  std::optional<Modality> mode_present;
  std::optional<ReviewStatus> review_status;
};

struct ModalitySet {
  bool ink = false;
  bool audio = false;
  bool video = false;

  bool contains(Modality m) const noexcept;
  // "ink+audio" style, in ink, audio, video order; empty when none.
  std::string joined() const;
  std::vector<std::string> names() const;
  friend bool operator==(const ModalitySet&, const ModalitySet&) = default;
};

// Modalities a stored bundle actually carries: an artifact labeled absent
// (silent audio, no strokes) does not count.
ModalitySet captured_modes(const ResponseBundle& bundle);

struct GalleryCard {
  std::string response_id;
  std::string student_name;
  std::optional<BlobRef> thumbnail;
  std::int64_t duration_ms = 0;
  int confidence = 0;
  int helpfulness = 0;
  ModalitySet captured_modes;
  ResponseLabels labels;
  Timestamp submitted_at{};
  bool reviewed_by_viewer = false;
};

struct PlaybackTrack {
  Modality kind = Modality::ink;
  BlobRef artifact;
  std::int64_t clock_origin_ms = 0;
};

struct PlaybackManifest {
  std::string response_id;
  std::int64_t duration_ms = 0;
  std::vector<PlaybackTrack> tracks;
};

enum class AnnotationKind { like, comment };
std::string_view to_string(AnnotationKind kind) noexcept;
std::optional<AnnotationKind> annotation_kind_from_string(std::string_view text) noexcept;

struct Annotation {
  std::string annotation_id;
  std::string response_id;
  std::string author_id;
  AnnotationKind kind = AnnotationKind::like;
  std::string body;
  std::optional<std::string> parent_id;
  Timestamp created_at{};
};

// One exported gallery row.
struct ExportRecord {
  std::string response_id;
  std::string student_name;
  std::string submitted_at;
  std::int64_t duration_ms = 0;
  int confidence = 0;
  int helpfulness = 0;
  std::vector<std::string> modes;
  std::vector<std::string> labels;
  std::size_t like_count = 0;
  std::size_t comment_count = 0;
  friend bool operator==(const ExportRecord&, const ExportRecord&) = default;
};

class Gallery {
 public:
  Gallery(Store& store, const Catalog& catalog, const Clock& clock);

  // Owners always; students only when the exercise grants gallery access.
  bool can_view(const Principal& viewer, const ExerciseInfo& exercise) const;

  // Filters apply conjunctively; ties break by ascending response id in
  // both directions. Throws unknown-exercise.
  std::vector<GalleryCard> list_responses(const std::string& exercise_id, const SortSpec& sort,
                                          const GalleryFilters& filters, const std::string& viewer_id) const;

  // Idempotent. Throws unknown-response.
  void mark_reviewed(const std::string& viewer_id, const std::string& response_id);
  bool is_reviewed(const std::string& viewer_id, const std::string& response_id) const;

  // Serving a manifest marks the response reviewed for the viewer.
  // Throws unknown-response, not-yet-processed.
  PlaybackManifest playback_manifest(const std::string& response_id, const std::string& viewer_id);

  // A repeated like by the same author returns the existing like. Throws
  // unknown-response, empty-comment, bad-parent, like-with-body.
  Annotation add_annotation(const std::string& author_id, const std::string& response_id, AnnotationKind kind,
                            const std::optional<std::string>& body = std::nullopt,
                            const std::optional<std::string>& parent_id = std::nullopt);
  std::vector<Annotation> annotations(const std::string& response_id) const;

  // Rows in ascending response id order. Throws unknown-exercise.
  std::vector<ExportRecord> export_records(const std::string& exercise_id) const;

  std::optional<ResponseBundle> find_response(const std::string& response_id) const;

 private:
  Store& store_;
  const Catalog& catalog_;
  const Clock& clock_;
  IdSequence comment_ids_;
};

void to_json(nlohmann::json& j, const GalleryCard& card);
void to_json(nlohmann::json& j, const PlaybackManifest& manifest);
void to_json(nlohmann::json& j, const Annotation& annotation);
void to_json(nlohmann::json& j, const ExportRecord& record);
void from_json(const nlohmann::json& j, ExportRecord& record);

inline constexpr std::string_view kExportCsvHeader =
    "response_id,student_name,submitted_at,duration_ms,confidence,helpfulness,modes,labels,like_count,comment_count";

// RFC 4180 CSV; list columns are joined with '+'.
std::string export_csv(const std::vector<ExportRecord>& records);
std::vector<ExportRecord> parse_export_csv(std::string_view text);
std::string export_json(const std::vector<ExportRecord>& records);
std::vector<ExportRecord> parse_export_json(std::string_view text);

}  // namespace pausepoint
