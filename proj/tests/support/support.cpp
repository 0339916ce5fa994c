#include "support.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <stdio.h>
#include <stdlib.h>
#include <sys/wait.h>

#include "pausepoint/session.hpp"
#include "pausepoint/store.hpp"

namespace pptest {

using namespace pausepoint;

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "pptest-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

PlatformOptions fast_options(const fs::path& dir) {
  PlatformOptions o;
  o.data_dir = dir;
  o.durable = false;
  o.postprocess_workers = 2;
  return o;
}

Published publish_exercise(Platform& platform, InputMode mode, int time_limit_s, const std::string& owner,
                           bool gallery_access) {
  platform.register_user(Principal{owner, Role::teacher, "Teacher " + owner});
  Catalog& cat = platform.catalog();
  const Lesson lesson = cat.create_lesson(owner, "lesson");
  const BlobRef video = platform.store().put_blob("lesson video " + lesson.lesson_id, MediaType::video);
  cat.add_video(lesson.lesson_id, owner, video, 60000);
  ExerciseDraft draft;
  draft.instructions = "Show your work";
  draft.time_limit_s = time_limit_s;
  draft.input_mode = mode;
  const ExerciseSpec spec = cat.add_exercise(lesson.lesson_id, owner, draft);
  cat.publish(lesson.lesson_id, owner, platform.resolver());
  if (gallery_access) cat.set_gallery_access(spec.exercise_id, owner, true);
  return Published{lesson.lesson_id, spec.exercise_id, owner};
}

namespace {

double coord(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 9);
  switch (pick(rng)) {
    case 0: return 0.0;
    case 1: return 1.0;
    case 2: return std::uniform_int_distribution<int>(0, 100)(rng) / 100.0;
    default: return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  }
}

}  // namespace

InkStream random_ink_stream(std::mt19937_64& rng, const InkGenOptions& options) {
  InkStream s;
  std::int64_t t = std::uniform_int_distribution<std::int64_t>(0, 50)(rng);
  auto tick = [&] { t += std::uniform_int_distribution<std::int64_t>(0, 400)(rng); };
  const int n_strokes = std::uniform_int_distribution<int>(0, options.max_strokes)(rng);
  for (int i = 0; i < n_strokes; ++i) {
    if (std::bernoulli_distribution(0.4)(rng)) {
      PenStyle style;
      std::uniform_int_distribution<int> channel(0, 255);
      style.color = Rgba{static_cast<std::uint8_t>(channel(rng)), static_cast<std::uint8_t>(channel(rng)),
                         static_cast<std::uint8_t>(channel(rng)),
                         static_cast<std::uint8_t>(std::bernoulli_distribution(0.5)(rng) ? 255 : channel(rng))};
      style.width = std::bernoulli_distribution(0.1)(rng) ? kMaxPenWidth
                                                          : std::uniform_real_distribution<double>(1e-4, kMaxPenWidth)(rng);
      s.events.push_back(InkEvent::set_style(t, style));
      tick();
    }
    const int n_points = options.allow_degenerate ? std::uniform_int_distribution<int>(1, options.max_points)(rng)
                                                  : std::uniform_int_distribution<int>(2, std::max(2, options.max_points))(rng);
    s.events.push_back(InkEvent::down(t, coord(rng), coord(rng)));
    for (int p = 1; p < n_points; ++p) {
      tick();
      s.events.push_back(InkEvent::move(t, coord(rng), coord(rng)));
    }
    const bool last = i + 1 == n_strokes;
    if (last && options.allow_open_tail && std::bernoulli_distribution(0.2)(rng)) break;
    tick();
    s.events.push_back(InkEvent::up(t));
    tick();
  }
  s.declared_duration_ms = t + std::uniform_int_distribution<std::int64_t>(0, 1000)(rng);
  return s;
}

Image incremental_render(const InkStream& stream, std::int64_t t_ms, Size size, const Image* background) {
  Image committed = raster::blank_canvas(size, background);
  PenStyle style;
  std::optional<raster::StrokeMask> open;
  Rgba open_color;
  InkPoint last{};
  for (const InkEvent& e : stream.events) {
    if (e.t_ms > t_ms) break;
    const double px = e.point.x * size.w;
    const double py = e.point.y * size.h;
    switch (e.action) {
      case PenAction::SetStyle:
        style = e.style;
        break;
      case PenAction::Down:
        open.emplace(size);
        open_color = style.color;
        open->stamp_segment(px, py, px, py, raster::stroke_radius(style, size));
        last = e.point;
        break;
      case PenAction::Move:
        open->stamp_segment(last.x * size.w, last.y * size.h, px, py, raster::stroke_radius(style, size));
        last = e.point;
        break;
      case PenAction::Up:
        raster::composite(committed, *open, open_color);
        open.reset();
        break;
    }
  }
  if (open) raster::composite(committed, *open, open_color);
  return committed;
}

AudioTrack sine_track(double freq_hz, double amplitude, std::int64_t duration_ms, int rate) {
  AudioTrack track;
  track.sample_rate_hz = rate;
  const auto n = static_cast<std::size_t>(duration_ms * rate / 1000);
  track.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = amplitude * 32767.0 * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate);
    track.samples[i] = static_cast<std::int16_t>(std::lround(v));
  }
  return track;
}

AudioTrack zero_track(std::int64_t duration_ms, int rate) {
  AudioTrack track;
  track.sample_rate_hz = rate;
  track.samples.assign(static_cast<std::size_t>(duration_ms * rate / 1000), 0);
  return track;
}

namespace {

int compare(const ExportRecord& a, const ExportRecord& b, SortKey key) {
  auto cmp = [](const auto& x, const auto& y) { return x < y ? -1 : (y < x ? 1 : 0); };
  switch (key) {
    case SortKey::submitted_at: return cmp(a.submitted_at, b.submitted_at);
    case SortKey::duration: return cmp(a.duration_ms, b.duration_ms);
    case SortKey::student_name: return cmp(a.student_name, b.student_name);
    case SortKey::confidence: return cmp(a.confidence, b.confidence);
    case SortKey::helpfulness: return cmp(a.helpfulness, b.helpfulness);
  }
  return 0;
}

}  // namespace

std::vector<std::string> oracle_gallery_order(std::vector<ExportRecord> rows, const SortSpec& sort,
                                        const GalleryFilters& filters, const std::set<std::string>& reviewed) {
  std::erase_if(rows, [&](const ExportRecord& r) {
    if (filters.mode_present &&
        std::find(r.modes.begin(), r.modes.end(), std::string(to_string(*filters.mode_present))) == r.modes.end()) {
      return true;
    }
    if (filters.review_status) {
      const bool want = *filters.review_status == ReviewStatus::reviewed;
      if (reviewed.contains(r.response_id) != want) return true;
    }
    return false;
  });
  std::sort(rows.begin(), rows.end(), [&](const ExportRecord& a, const ExportRecord& b) {
    const int c = compare(a, b, sort.key);
    if (c != 0) return sort.direction == SortDirection::ascending ? c < 0 : c > 0;
    return a.response_id < b.response_id;
  });
  std::vector<std::string> ids;
  for (const auto& r : rows) ids.push_back(r.response_id);
  return ids;
}

CommandResult run_command(const std::string& command) {
  CommandResult result;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed: " + command);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) result.out.append(buf, n);
  const int status = ::pclose(pipe);
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

CrashAudit audit_after_crash(const fs::path& dir, const std::string& exercise_id, const std::string& student_id) {
  CrashAudit audit;
  auto problem = [&](std::string p) { audit.problems.push_back(std::move(p)); };
  StoreOptions so;
  so.root = dir;
  so.durable = false;
  so.gc_window = std::chrono::milliseconds(0);
  Store store(so);

  std::vector<Record> responses;
  store.for_each(EntityKind::response, [&](const Record& r) {
    if (r.body.at("student_id") == student_id && r.body.at("exercise_id") == exercise_id) responses.push_back(r);
  });
  const bool indexed = store.contains(EntityKind::index, submission_key(exercise_id, student_id));
  std::size_t submitted_sessions = 0;
  store.for_each(EntityKind::session, [&](const Record& r) {
    if (r.body.at("student_id") == student_id && r.body.at("state") == "submitted") ++submitted_sessions;
  });
  if (responses.size() > 1) problem("more than one bundle for the student");
  audit.bundle_visible = !responses.empty();
  if (indexed != audit.bundle_visible) problem("uniqueness index disagrees with bundle visibility");
  if (submitted_sessions != responses.size()) problem("session state disagrees with bundle visibility");

  std::set<std::string> referenced;
  for (std::size_t k = 0; k < kEntityKindCount; ++k) {
    store.for_each(static_cast<EntityKind>(k), [&](const Record& r) {
      for (const auto& b : r.blobs) referenced.insert(b.hash);
    });
  }
  for (const auto& r : responses) {
    const ResponseBundle bundle = r.body.get<ResponseBundle>();
    if (!bundle.ink || !bundle.audio) problem("bundle is missing an artifact");
  }
  for (const auto& hash : referenced) {
    auto bytes = store.read_blob(hash);
    if (!bytes) {
      problem("referenced blob " + hash + " is missing");
    } else if (content_hash(*bytes) != hash) {
      problem("blob " + hash + " content does not match its name");
    }
  }
  store.gc_orphans();
  for (const auto& hash : store.blob_hashes()) {
    if (!referenced.count(hash)) problem("unreferenced blob " + hash + " survived gc");
  }
  if (!fs::is_empty(dir / "blobs" / "tmp")) problem("temporary blob files left behind");
  return audit;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace pptest
