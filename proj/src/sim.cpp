#include "pausepoint/sim.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "pausepoint/audio.hpp"
#include "pausepoint/error.hpp"
#include "pausepoint/image.hpp"
#include "pausepoint/ink.hpp"
#include "pausepoint/platform.hpp"

namespace pausepoint {
namespace {

constexpr int kSimSampleRate = 16000;

constexpr std::array<std::string_view, 24> kGivenNames{
    "Avery", "Blake",  "Casey", "Devon",  "Emery",  "Finley", "Gray",  "Harper", "Indigo", "Jordan", "Kai",    "Logan",
    "Morgan", "Noel",  "Oakley", "Parker", "Quinn", "Reese",  "Sage",  "Taylor", "Umber",  "Val",    "Wren",   "Zion"};
constexpr std::array<std::string_view, 16> kFamilyNames{
    "Abara", "Brandt", "Castillo", "Dube",  "Eriksen", "Fujita", "Garcia", "Haddad",
    "Ivanova", "Jensen", "Kowalski", "Lindqvist", "Mensah", "Novak", "Okafor", "Petrov"};

// splitmix64 finalizer; decorrelates nearby seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return state_ = mix(state_); }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

std::string student_name(std::size_t index) {
  const std::size_t per_cycle = kGivenNames.size() * kFamilyNames.size();
  std::string name = std::string(kGivenNames[index % kGivenNames.size()]) + " " +
                     std::string(kFamilyNames[(index / kGivenNames.size()) % kFamilyNames.size()]);
  if (index >= per_cycle) name += " " + std::to_string(index / per_cycle + 1);
  return name;
}

InkStream synth_ink(Rng& rng, bool real_ink, std::int64_t duration_ms) {
  InkStream stream;
  stream.declared_duration_ms = duration_ms;
  if (!real_ink) return stream;
  const int n_strokes = static_cast<int>(rng.between(1, 4));
  const std::int64_t slot = duration_ms / (n_strokes + 1);
  std::int64_t cursor = 0;
  for (int s = 0; s < n_strokes; ++s) {
    std::int64_t t = std::max(cursor, slot * s + rng.between(0, std::max<std::int64_t>(0, slot / 4)));
    const PenStyle style{Rgba{static_cast<std::uint8_t>(rng.between(0, 200)), static_cast<std::uint8_t>(rng.between(0, 200)),
                              static_cast<std::uint8_t>(rng.between(0, 200)), 255},
                         0.005 + 0.015 * rng.unit()};
    stream.events.push_back(InkEvent::set_style(t, style));
    const int n_points = static_cast<int>(rng.between(3, 12));
    const std::int64_t step = std::max<std::int64_t>(1, slot / (n_points + 2));
    stream.events.push_back(InkEvent::down(t, 0.05 + 0.9 * rng.unit(), 0.05 + 0.9 * rng.unit()));
    for (int p = 1; p < n_points; ++p) {
      t = std::min(duration_ms, t + step);
      stream.events.push_back(InkEvent::move(t, 0.05 + 0.9 * rng.unit(), 0.05 + 0.9 * rng.unit()));
    }
    cursor = std::min(duration_ms, t + step);
    stream.events.push_back(InkEvent::up(cursor));
  }
  return stream;
}

AudioTrack synth_audio(Rng& rng, bool silent, std::int64_t duration_ms) {
  AudioTrack track;
  track.sample_rate_hz = kSimSampleRate;
  track.samples.assign(static_cast<std::size_t>(duration_ms * kSimSampleRate / 1000), 0);
  const double freq = 220.0 + static_cast<double>(rng.between(0, 400));
  if (silent) return track;
  const double amp = 0.3 * 32767.0;
  for (std::size_t i = 0; i < track.samples.size(); ++i) {
    track.samples[i] =
        static_cast<std::int16_t>(std::lround(amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / kSimSampleRate)));
  }
  return track;
}

}  // namespace

void SimProfile::validate() const {
  if (n_students == 0) throw Error(Errc::bad_request, "n_students must be positive");
  if (!(ink_prob >= 0.0 && ink_prob <= 1.0) || !(silence_prob >= 0.0 && silence_prob <= 1.0)) {
    throw Error(Errc::bad_request, "probabilities must lie in [0,1]");
  }
  if (min_duration_ms < 0 || min_duration_ms > max_duration_ms) {
    throw Error(Errc::bad_request, "duration range must satisfy 0 <= min <= max");
  }
}

SimPlan plan_student(const SimProfile& profile, int time_limit_s, std::size_t index) {
  Rng rng(mix(profile.seed) ^ mix(static_cast<std::uint64_t>(index) + 1));
  SimPlan plan;
  plan.index = index;
  plan.student_id = "sim-" + std::to_string(profile.seed) + "-" + std::to_string(index);
  plan.student_name = student_name(index);
  plan.real_ink = rng.unit() < profile.ink_prob;
  plan.silent = rng.unit() < profile.silence_prob;
  plan.duration_ms = std::min(rng.between(profile.min_duration_ms, profile.max_duration_ms),
                              static_cast<std::int64_t>(time_limit_s) * 1000);
  plan.ratings.confidence = static_cast<int>(rng.between(1, 5));
  plan.ratings.helpfulness = static_cast<int>(rng.between(1, 5));
  plan.content_seed = rng.next();
  return plan;
}

SubmittedArtifacts synthesize_artifacts(const SimPlan& plan, InputMode mode) {
  Rng rng(plan.content_seed);
  SubmittedArtifacts out;
  const InkStream ink = synth_ink(rng, plan.real_ink, plan.duration_ms);
  const AudioTrack audio = synth_audio(rng, plan.silent, plan.duration_ms);
  if (ink_enabled(mode)) out.ink = serialize_ink_stream(ink);
  if (audio_enabled(mode)) out.audio = encode_wav(audio);
  if (video_enabled(mode)) {
    std::string video = "SIMVIDEO";
    for (int i = 0; i < 4096; ++i) video.push_back(static_cast<char>(rng.next() & 0xFF));
    out.video = std::move(video);
    const Rgba tint{static_cast<std::uint8_t>(rng.between(0, 255)), static_cast<std::uint8_t>(rng.between(0, 255)),
                    static_cast<std::uint8_t>(rng.between(0, 255)), 255};
    out.poster = encode_png(Image(Size{64, 48}, tint));
  }
  return out;
}

SimOutcome simulate(Platform& platform, const std::string& exercise_id, const SimProfile& profile,
                    std::size_t parallelism) {
  profile.validate();
  const ExerciseInfo info = platform.catalog().exercise(exercise_id);
  SimOutcome outcome;
  outcome.plans.reserve(profile.n_students);
  for (std::size_t i = 0; i < profile.n_students; ++i) {
    outcome.plans.push_back(plan_student(profile, info.spec.time_limit_s, i));
    platform.register_user(Principal{outcome.plans.back().student_id, Role::student, outcome.plans.back().student_name});
  }
  outcome.response_ids.assign(profile.n_students, {});
  outcome.errors.assign(profile.n_students, {});

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < profile.n_students; i = next++) {
      const SimPlan& plan = outcome.plans[i];
      try {
        auto started = platform.recorder().start_session(exercise_id, plan.student_id);
        SubmitRequest req;
        req.session_id = started.session.session_id;
        req.student_id = plan.student_id;
        req.artifacts = synthesize_artifacts(plan, info.spec.input_mode);
        req.declared_duration_ms = plan.duration_ms;
        req.ratings = plan.ratings;
        outcome.response_ids[i] = platform.recorder().submit(req).response_id;
      } catch (const Error& e) {
        outcome.errors[i] = std::string(to_string(e.code()));
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < std::max<std::size_t>(1, parallelism); ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  platform.postprocessor().drain();
  return outcome;
}

}  // namespace pausepoint
