#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pausepoint/model.hpp"
#include "pausepoint/session.hpp"

namespace pausepoint {

class Platform;

// Synthetic student population for filling galleries and load testing.
struct SimProfile {
  std::size_t n_students = 30;
  double ink_prob = 0.8;
  double silence_prob = 0.1;
  std::int64_t min_duration_ms = 5000;
  std::int64_t max_duration_ms = 40000;
  std::uint64_t seed = 1;

  // Throws bad-request when a probability or the range is invalid.
  void validate() const;
};

// The random decisions for one synthetic student. Every draw derives from
// (seed, index) alone, so any student can be replayed in isolation.
struct SimPlan {
  std::size_t index = 0;
  std::string student_id;
  std::string student_name;
  bool real_ink = false;
  bool silent = false;
  std::int64_t duration_ms = 0;
  Ratings ratings;
  std::uint64_t content_seed = 0;
};

SimPlan plan_student(const SimProfile& profile, int time_limit_s, std::size_t index);

// Artifacts honoring the input mode: an ink stream (strokes iff real_ink),
// a 16 kHz WAV (sine or digital silence), and for video modes an opaque
// video blob plus a PNG poster frame. All tracks span duration_ms.
SubmittedArtifacts synthesize_artifacts(const SimPlan& plan, InputMode mode);

struct SimOutcome {
  std::vector<SimPlan> plans;
  // Parallel to plans. A failed submission leaves its response id empty and
  // its error code name in errors.
  std::vector<std::string> response_ids;
  std::vector<std::string> errors;
};

// Submits one response per synthetic student with `parallelism` concurrent
// submitters and waits for post-processing. Throws unknown-exercise.
SimOutcome simulate(Platform& platform, const std::string& exercise_id, const SimProfile& profile,
                    std::size_t parallelism = 4);

}  // namespace pausepoint
