#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <set>
#include <string>

#include "pausepoint/audio.hpp"
#include "pausepoint/ink.hpp"
#include "pausepoint/platform.hpp"

namespace pptest {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

pausepoint::PlatformOptions fast_options(const fs::path& dir);

struct Published {
  std::string lesson_id;
  std::string exercise_id;
  std::string owner;
};

// One-video, one-exercise lesson, published.
Published publish_exercise(pausepoint::Platform& platform, pausepoint::InputMode mode, int time_limit_s,
                           const std::string& owner = "teacher", bool gallery_access = false);

// Random stream satisfying every ink invariant. May end with an open stroke.
struct InkGenOptions {
  int max_strokes = 8;
  int max_points = 12;
  bool allow_open_tail = true;
  bool allow_degenerate = true;
};
pausepoint::InkStream random_ink_stream(std::mt19937_64& rng, const InkGenOptions& options = {});

// Reference replay that applies events one at a time.
pausepoint::Image incremental_render(const pausepoint::InkStream& stream, std::int64_t t_ms, pausepoint::Size size,
                                     const pausepoint::Image* background = nullptr);

pausepoint::AudioTrack sine_track(double freq_hz, double amplitude, std::int64_t duration_ms, int rate = 16000);
pausepoint::AudioTrack zero_track(std::int64_t duration_ms, int rate = 16000);

// Independent gallery ordering over export rows: filter, then order by key
// with ascending response id breaking ties in either direction.
std::vector<std::string> oracle_gallery_order(std::vector<pausepoint::ExportRecord> rows,
                                              const pausepoint::SortSpec& sort,
                                              const pausepoint::GalleryFilters& filters,
                                              const std::set<std::string>& reviewed);

struct CommandResult {
  int exit_code = -1;  // 128 + signal when the child was killed
  std::string out;
};
// Runs through /bin/sh; stdout is captured, stderr passes through.
CommandResult run_command(const std::string& command);

// Reopens a data directory after a crash and checks that the student's
// submission is all-or-nothing and that blobs on disk match references.
struct CrashAudit {
  bool bundle_visible = false;
  std::vector<std::string> problems;
};
CrashAudit audit_after_crash(const fs::path& dir, const std::string& exercise_id, const std::string& student_id);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view content);

}  // namespace pptest
