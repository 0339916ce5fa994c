#include "pausepoint/gallery.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

#include "pausepoint/error.hpp"

namespace pausepoint {

using nlohmann::json;

namespace {

std::string review_key(const std::string& viewer_id, const std::string& response_id) {
  return viewer_id + "|" + response_id;
}

std::string like_key(const std::string& response_id, const std::string& author_id) {
  return "like|" + response_id + "|" + author_id;
}

bool blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

Annotation annotation_from_json(const json& j) {
  Annotation a;
  a.annotation_id = j.at("annotation_id").get<std::string>();
  a.response_id = j.at("response_id").get<std::string>();
  a.author_id = j.at("author_id").get<std::string>();
  a.kind = annotation_kind_from_string(j.at("kind").get<std::string>()).value_or(AnnotationKind::comment);
  a.body = j.at("body").get<std::string>();
  if (!j.at("parent_id").is_null()) a.parent_id = j.at("parent_id").get<std::string>();
  a.created_at = parse_utc(j.at("created_at").get<std::string>()).value_or(Timestamp{});
  return a;
}

// Card fields read straight from the stored document; listing is the hot path.
GalleryCard card_from_body(const json& body) {
  GalleryCard card;
  card.response_id = body.at("response_id").get<std::string>();
  card.student_name = body.at("student_name").get<std::string>();
  if (const auto& t = body.at("thumbnail"); !t.is_null()) card.thumbnail = t.get<BlobRef>();
  card.duration_ms = body.at("duration_ms").get<std::int64_t>();
  card.confidence = body.at("ratings").at("confidence").get<int>();
  card.helpfulness = body.at("ratings").at("helpfulness").get<int>();
  card.labels = ResponseLabels::from_names(body.at("labels").get<std::vector<std::string>>());
  const bool processed = body.at("processed").get<bool>();
  card.captured_modes.ink = !body.at("ink").is_null() && !(processed && card.labels.no_ink);
  card.captured_modes.audio = !body.at("audio").is_null() && !(processed && card.labels.no_audio);
  card.captured_modes.video = !body.at("video").is_null();
  card.submitted_at = parse_utc(body.at("submitted_at").get<std::string>()).value_or(Timestamp{});
  return card;
}

template <typename T>
int three_way(const T& a, const T& b) {
  return a < b ? -1 : (b < a ? 1 : 0);
}

int compare_key(const GalleryCard& a, const GalleryCard& b, SortKey key) {
  switch (key) {
    case SortKey::submitted_at: return three_way(a.submitted_at, b.submitted_at);
    case SortKey::duration: return three_way(a.duration_ms, b.duration_ms);
    case SortKey::student_name: return three_way(a.student_name, b.student_name);
    case SortKey::confidence: return three_way(a.confidence, b.confidence);
    case SortKey::helpfulness: return three_way(a.helpfulness, b.helpfulness);
  }
  return 0;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += '+';
    out += p;
  }
  return out;
}

std::vector<std::string> split_plus(std::string_view text) {
  std::vector<std::string> out;
  while (!text.empty()) {
    const auto pos = text.find('+');
    out.emplace_back(text.substr(0, pos));
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
  return out;
}

void csv_field(std::string& out, std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) {
    out += value;
    return;
  }
  out += '"';
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

std::vector<std::vector<std::string>> parse_csv_rows(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error(Errc::bad_request, "unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string_view to_string(SortKey key) noexcept {
  switch (key) {
    case SortKey::submitted_at: return "submitted_at";
    case SortKey::duration: return "duration";
    case SortKey::student_name: return "student_name";
    case SortKey::confidence: return "confidence";
    case SortKey::helpfulness: return "helpfulness";
  }
  return "submitted_at";
}

SortKey parse_sort_key(std::string_view text) {
  for (auto key : kAllSortKeys) {
    if (to_string(key) == text) return key;
  }
  throw Error(Errc::unknown_sort_key, "unknown sort key '" + std::string(text) + "'");
}

std::string_view to_string(SortDirection direction) noexcept {
  return direction == SortDirection::ascending ? "asc" : "desc";
}

std::optional<SortDirection> sort_direction_from_string(std::string_view text) noexcept {
  if (text == "asc") return SortDirection::ascending;
  if (text == "desc") return SortDirection::descending;
  return std::nullopt;
}

std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::ink: return "ink";
    case Modality::audio: return "audio";
    case Modality::video: return "video";
  }
  return "ink";
}

std::optional<Modality> modality_from_string(std::string_view text) noexcept {
  for (auto m : {Modality::ink, Modality::audio, Modality::video}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

std::optional<ReviewStatus> review_status_from_string(std::string_view text) noexcept {
  if (text == "reviewed") return ReviewStatus::reviewed;
  if (text == "not-reviewed") return ReviewStatus::not_reviewed;
  return std::nullopt;
}

bool ModalitySet::contains(Modality m) const noexcept {
  switch (m) {
    case Modality::ink: return ink;
    case Modality::audio: return audio;
    case Modality::video: return video;
  }
  return false;
}

std::vector<std::string> ModalitySet::names() const {
  std::vector<std::string> out;
  if (ink) out.emplace_back("ink");
  if (audio) out.emplace_back("audio");
  if (video) out.emplace_back("video");
  return out;
}

std::string ModalitySet::joined() const { return join(names()); }

ModalitySet captured_modes(const ResponseBundle& bundle) {
  ModalitySet m;
  m.ink = bundle.ink.has_value() && !(bundle.processed && bundle.labels.no_ink);
  m.audio = bundle.audio.has_value() && !(bundle.processed && bundle.labels.no_audio);
  m.video = bundle.video.has_value();
  return m;
}

std::string_view to_string(AnnotationKind kind) noexcept { return kind == AnnotationKind::like ? "like" : "comment"; }

std::optional<AnnotationKind> annotation_kind_from_string(std::string_view text) noexcept {
  if (text == "like") return AnnotationKind::like;
  if (text == "comment") return AnnotationKind::comment;
  return std::nullopt;
}

Gallery::Gallery(Store& store, const Catalog& catalog, const Clock& clock)
    : store_(store), catalog_(catalog), clock_(clock), comment_ids_('A', [&] {
        std::uint64_t last = 0;
        store.for_each(EntityKind::annotation, [&](const Record& r) { last = std::max(last, IdSequence::parse('A', r.id)); });
        return last;
      }()) {}

bool Gallery::can_view(const Principal& viewer, const ExerciseInfo& exercise) const {
  if (viewer.role == Role::teacher) return viewer.user_id == exercise.owner;
  return exercise.student_gallery_access;
}

std::optional<ResponseBundle> Gallery::find_response(const std::string& response_id) const {
  auto rec = store_.get(EntityKind::response, response_id);
  if (!rec) return std::nullopt;
  return rec->body.get<ResponseBundle>();
}

std::vector<GalleryCard> Gallery::list_responses(const std::string& exercise_id, const SortSpec& sort,
                                                 const GalleryFilters& filters, const std::string& viewer_id) const {
  if (!store_.contains(EntityKind::exercise, exercise_id)) throw Error(Errc::unknown_exercise, "no exercise " + exercise_id);
  std::vector<GalleryCard> cards;
  store_.for_each(EntityKind::response, [&](const Record& r) {
    if (r.body.at("exercise_id").get_ref<const std::string&>() != exercise_id) return;
    GalleryCard card = card_from_body(r.body);
    if (filters.mode_present && !card.captured_modes.contains(*filters.mode_present)) return;
    cards.push_back(std::move(card));
  });
  for (auto& card : cards) card.reviewed_by_viewer = is_reviewed(viewer_id, card.response_id);
  if (filters.review_status) {
    const bool want = *filters.review_status == ReviewStatus::reviewed;
    std::erase_if(cards, [&](const GalleryCard& c) { return c.reviewed_by_viewer != want; });
  }
  const bool descending = sort.direction == SortDirection::descending;
  std::sort(cards.begin(), cards.end(), [&](const GalleryCard& a, const GalleryCard& b) {
    const int c = compare_key(a, b, sort.key);
    if (c != 0) return descending ? c > 0 : c < 0;
    return a.response_id < b.response_id;
  });
  return cards;
}

bool Gallery::is_reviewed(const std::string& viewer_id, const std::string& response_id) const {
  return store_.contains(EntityKind::review_state, review_key(viewer_id, response_id));
}

void Gallery::mark_reviewed(const std::string& viewer_id, const std::string& response_id) {
  if (!store_.contains(EntityKind::response, response_id)) throw Error(Errc::unknown_response, "no response " + response_id);
  const auto key = review_key(viewer_id, response_id);
  if (store_.contains(EntityKind::review_state, key)) return;
  try {
    store_.commit({RecordWrite{EntityKind::review_state, key, 0,
                               json{{"viewer_id", viewer_id},
                                    {"response_id", response_id},
                                    {"reviewed_at", format_utc(clock_.now())}},
                               {}}});
  } catch (const Error& e) {
    // A concurrent mark won; the state is reviewed either way.
    if (e.code() != Errc::version_conflict) throw;
  }
}

PlaybackManifest Gallery::playback_manifest(const std::string& response_id, const std::string& viewer_id) {
  auto bundle = find_response(response_id);
  if (!bundle) throw Error(Errc::unknown_response, "no response " + response_id);
  if (!bundle->processed) throw Error(Errc::not_yet_processed, "response " + response_id + " is still being processed");
  PlaybackManifest manifest{response_id, bundle->duration_ms, {}};
  if (bundle->ink) manifest.tracks.push_back({Modality::ink, *bundle->ink, 0});
  if (bundle->audio) manifest.tracks.push_back({Modality::audio, *bundle->audio, 0});
  if (bundle->video) manifest.tracks.push_back({Modality::video, *bundle->video, 0});
  mark_reviewed(viewer_id, response_id);
  return manifest;
}

Annotation Gallery::add_annotation(const std::string& author_id, const std::string& response_id, AnnotationKind kind,
                                   const std::optional<std::string>& body, const std::optional<std::string>& parent_id) {
  if (!store_.contains(EntityKind::response, response_id)) throw Error(Errc::unknown_response, "no response " + response_id);
  Annotation a;
  a.response_id = response_id;
  a.author_id = author_id;
  a.kind = kind;
  a.created_at = clock_.now();
  if (kind == AnnotationKind::like) {
    if (body && !body->empty()) throw Error(Errc::like_with_body, "likes carry no text");
    if (parent_id) throw Error(Errc::bad_parent, "likes cannot reply to a comment");
    a.annotation_id = like_key(response_id, author_id);
  } else {
    if (!body || blank(*body)) throw Error(Errc::empty_comment, "comment text is empty");
    a.body = *body;
    if (parent_id) {
      auto parent = store_.get(EntityKind::annotation, *parent_id);
      if (!parent) throw Error(Errc::bad_parent, "no annotation " + *parent_id);
      const Annotation p = annotation_from_json(parent->body);
      if (p.kind != AnnotationKind::comment || p.response_id != response_id) {
        throw Error(Errc::bad_parent, "parent must be a comment on the same response");
      }
      a.parent_id = parent_id;
    }
    a.annotation_id = comment_ids_.next();
  }
  try {
    store_.commit({RecordWrite{EntityKind::annotation, a.annotation_id, 0, a, {}}});
  } catch (const Error& e) {
    if (e.code() == Errc::version_conflict && kind == AnnotationKind::like) {
      return annotation_from_json(store_.get(EntityKind::annotation, a.annotation_id)->body);
    }
    throw;
  }
  return a;
}

std::vector<Annotation> Gallery::annotations(const std::string& response_id) const {
  if (!store_.contains(EntityKind::response, response_id)) throw Error(Errc::unknown_response, "no response " + response_id);
  std::vector<Annotation> out;
  store_.for_each(EntityKind::annotation, [&](const Record& r) {
    if (r.body.at("response_id").get_ref<const std::string&>() == response_id) out.push_back(annotation_from_json(r.body));
  });
  std::sort(out.begin(), out.end(), [](const Annotation& a, const Annotation& b) {
    return std::tie(a.created_at, a.annotation_id) < std::tie(b.created_at, b.annotation_id);
  });
  return out;
}

std::vector<ExportRecord> Gallery::export_records(const std::string& exercise_id) const {
  if (!store_.contains(EntityKind::exercise, exercise_id)) throw Error(Errc::unknown_exercise, "no exercise " + exercise_id);
  std::map<std::string, ExportRecord> rows;
  store_.for_each(EntityKind::response, [&](const Record& r) {
    if (r.body.at("exercise_id").get_ref<const std::string&>() != exercise_id) return;
    const GalleryCard card = card_from_body(r.body);
    ExportRecord row;
    row.response_id = card.response_id;
    row.student_name = card.student_name;
    row.submitted_at = format_utc(card.submitted_at);
    row.duration_ms = card.duration_ms;
    row.confidence = card.confidence;
    row.helpfulness = card.helpfulness;
    row.modes = card.captured_modes.names();
    row.labels = card.labels.names();
    rows.emplace(row.response_id, std::move(row));
  });
  store_.for_each(EntityKind::annotation, [&](const Record& r) {
    auto it = rows.find(r.body.at("response_id").get<std::string>());
    if (it == rows.end()) return;
    if (r.body.at("kind") == "like") {
      ++it->second.like_count;
    } else {
      ++it->second.comment_count;
    }
  });
  std::vector<ExportRecord> out;
  out.reserve(rows.size());
  for (auto& [id, row] : rows) out.push_back(std::move(row));
  return out;
}

void to_json(json& j, const GalleryCard& card) {
  j = json{{"response_id", card.response_id},
           {"student_name", card.student_name},
           {"thumbnail", nullptr},
           {"duration_ms", card.duration_ms},
           {"confidence", card.confidence},
           {"helpfulness", card.helpfulness},
           {"captured_modes", card.captured_modes.names()},
           {"labels", card.labels.names()},
           {"submitted_at", format_utc(card.submitted_at)},
           {"reviewed_by_viewer", card.reviewed_by_viewer}};
  if (card.thumbnail) j["thumbnail"] = *card.thumbnail;
}

void to_json(json& j, const PlaybackManifest& manifest) {
  json tracks = json::array();
  for (const auto& t : manifest.tracks) {
    tracks.push_back({{"kind", to_string(t.kind)}, {"artifact", t.artifact}, {"clock_origin_ms", t.clock_origin_ms}});
  }
  j = json{{"response_id", manifest.response_id}, {"duration_ms", manifest.duration_ms}, {"tracks", std::move(tracks)}};
}

void to_json(json& j, const Annotation& a) {
  j = json{{"annotation_id", a.annotation_id},
           {"response_id", a.response_id},
           {"author_id", a.author_id},
           {"kind", to_string(a.kind)},
           {"body", a.body},
           {"parent_id", nullptr},
           {"created_at", format_utc(a.created_at)}};
  if (a.parent_id) j["parent_id"] = *a.parent_id;
}

void to_json(json& j, const ExportRecord& r) {
  j = json{{"response_id", r.response_id},   {"student_name", r.student_name}, {"submitted_at", r.submitted_at},
           {"duration_ms", r.duration_ms},   {"confidence", r.confidence},     {"helpfulness", r.helpfulness},
           {"modes", r.modes},               {"labels", r.labels},             {"like_count", r.like_count},
           {"comment_count", r.comment_count}};
}

void from_json(const json& j, ExportRecord& r) {
  r.response_id = j.at("response_id").get<std::string>();
  r.student_name = j.at("student_name").get<std::string>();
  r.submitted_at = j.at("submitted_at").get<std::string>();
  r.duration_ms = j.at("duration_ms").get<std::int64_t>();
  r.confidence = j.at("confidence").get<int>();
  r.helpfulness = j.at("helpfulness").get<int>();
  r.modes = j.at("modes").get<std::vector<std::string>>();
  r.labels = j.at("labels").get<std::vector<std::string>>();
  r.like_count = j.at("like_count").get<std::size_t>();
  r.comment_count = j.at("comment_count").get<std::size_t>();
}

std::string export_csv(const std::vector<ExportRecord>& records) {
  std::string out(kExportCsvHeader);
  out += "\r\n";
  for (const auto& r : records) {
    csv_field(out, r.response_id);
    out += ',';
    csv_field(out, r.student_name);
    out += ',' + r.submitted_at + ',' + std::to_string(r.duration_ms) + ',' + std::to_string(r.confidence) + ',' +
           std::to_string(r.helpfulness) + ',';
    csv_field(out, join(r.modes));
    out += ',';
    csv_field(out, join(r.labels));
    out += ',' + std::to_string(r.like_count) + ',' + std::to_string(r.comment_count) + "\r\n";
  }
  return out;
}

std::vector<ExportRecord> parse_export_csv(std::string_view text) {
  auto rows = parse_csv_rows(text);
  if (rows.empty()) throw Error(Errc::bad_request, "CSV has no header");
  std::ostringstream header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header << (i ? "," : "") << rows[0][i];
  if (header.str() != kExportCsvHeader) throw Error(Errc::bad_request, "unexpected CSV header");
  std::vector<ExportRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 10) throw Error(Errc::bad_request, "CSV row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
    ExportRecord r;
    r.response_id = f[0];
    r.student_name = f[1];
    r.submitted_at = f[2];
    r.duration_ms = std::stoll(f[3]);
    r.confidence = std::stoi(f[4]);
    r.helpfulness = std::stoi(f[5]);
    r.modes = split_plus(f[6]);
    r.labels = split_plus(f[7]);
    r.like_count = std::stoull(f[8]);
    r.comment_count = std::stoull(f[9]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string export_json(const std::vector<ExportRecord>& records) { return json(records).dump(2) + "\n"; }

std::vector<ExportRecord> parse_export_json(std::string_view text) {
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) throw Error(Errc::bad_request, "export JSON must be an array");
  return doc.get<std::vector<ExportRecord>>();
}

}  // namespace pausepoint
