// One line per acceptance criterion; exit status is the number of failures.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pausepoint/analysis.hpp"
#include "pausepoint/error.hpp"
#include "pausepoint/platform.hpp"
#include "pausepoint/sim.hpp"
#include "support.hpp"

using namespace pausepoint;
using nlohmann::json;
using Stopwatch = std::chrono::steady_clock;

namespace {

// Collects failed checks with context; a criterion passes when none fail.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  bool ok() const { return failed_ == 0; }
  std::size_t total() const { return total_; }
  std::string summary() const {
    std::ostringstream out;
    out << failed_ << "/" << total_ << " checks failed";
    for (const auto& f : failures_) out << "; " << f;
    return out.str();
  }

 private:
  std::size_t total_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

struct Outcome {
  Checks checks;
  std::string note;
};

double seconds_since(Stopwatch::time_point start) {
  return std::chrono::duration<double>(Stopwatch::now() - start).count();
}

int run(const std::string& name, double budget_s, const std::function<void(Outcome&)>& body) {
  const auto start = Stopwatch::now();
  Outcome outcome;
  std::string crash;
  try {
    body(outcome);
  } catch (const Error& e) {
    crash = "error " + std::string(to_string(e.code())) + ": " + e.detail();
  } catch (const std::exception& e) {
    crash = std::string("exception: ") + e.what();
  }
  const double elapsed = seconds_since(start);
  const bool in_time = budget_s <= 0 || elapsed < budget_s;
  const bool pass = crash.empty() && outcome.checks.ok() && in_time;
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << "  " << name << "  [" << std::fixed << std::setprecision(2) << elapsed << " s";
  if (budget_s > 0) line << " of " << budget_s << " s";
  line << ", " << outcome.checks.total() << " checks]";
  if (!outcome.note.empty()) line << "  " << outcome.note;
  if (!crash.empty()) line << "  " << crash;
  if (!outcome.checks.ok()) line << "  " << outcome.checks.summary();
  if (!in_time) line << "  over time budget";
  std::cout << line.str() << std::endl;
  return pass ? 0 : 1;
}

std::string random_bytes(std::mt19937_64& rng, std::size_t n) {
  std::string s(n, '\0');
  for (auto& c : s) c = static_cast<char>(rng());
  return s;
}

void ink_round_trip(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::vector<std::string> seeds;
  for (int i = 0; i < 1000; ++i) {
    const InkStream s = pptest::random_ink_stream(rng);
    const std::string text = serialize_ink_stream(s);
    const InkStream back = parse_ink_stream(text);
    o.checks.expect(back == s, "stream " + std::to_string(i) + " did not round trip");
    if (i < 50) seeds.push_back(text);
  }
  std::size_t parsed = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string doc;
    switch (i % 3) {
      case 0: doc = random_bytes(rng, std::uniform_int_distribution<std::size_t>(0, 256)(rng)); break;
      case 1: {
        doc = seeds[rng() % seeds.size()];
        const int edits = std::uniform_int_distribution<int>(1, 8)(rng);
        for (int e = 0; e < edits && !doc.empty(); ++e) {
          const auto pos = rng() % doc.size();
          switch (rng() % 3) {
            case 0: doc[pos] = static_cast<char>(rng()); break;
            case 1: doc.erase(pos, 1 + rng() % 4); break;
            default: doc.insert(pos, 1, "{}[],:\"0.-e9dmus"[rng() % 16]); break;
          }
        }
        break;
      }
      default: {
        // Structurally valid JSON with hostile values.
        json d = json::parse(seeds[rng() % seeds.size()]);
        const json hostile[] = {nullptr, -1, 1e300, "x", json::array(), json::object(), 2.5, true};
        if (d.contains("events") && !d["events"].empty()) {
          auto& ev = d["events"][rng() % d["events"].size()];
          const auto key = std::vector<std::string>{"t", "k", "x", "y", "style", "extra"}[rng() % 6];
          ev[key] = hostile[rng() % 8];
        } else {
          d["duration_ms"] = hostile[rng() % 8];
        }
        doc = d.dump();
        break;
      }
    }
    try {
      const InkStream s = parse_ink_stream(doc);
      ++parsed;
      try {
        validate_ink_stream(s);
      } catch (const Error&) {
        o.checks.expect(false, "fuzz document " + std::to_string(i) + " parsed into an invalid stream");
      }
    } catch (const Error&) {
    } catch (const std::exception& e) {
      o.checks.expect(false, "fuzz document " + std::to_string(i) + " escaped as " + e.what());
    }
  }
  o.note = "1000 streams, 10000 fuzz documents (" + std::to_string(parsed) + " accepted)";
}

void replay_oracle(Outcome& o) {
  std::mt19937_64 rng(77);
  const pptest::InkGenOptions gen{10, 16, true, true};
  for (int i = 0; i < 200; ++i) {
    const InkStream s = pptest::random_ink_stream(rng, gen);
    const Size size{std::uniform_int_distribution<int>(16, 200)(rng), std::uniform_int_distribution<int>(16, 150)(rng)};
    const std::int64_t last = s.events.empty() ? 0 : s.events.back().t_ms;
    for (int q = 0; q < 20; ++q) {
      const std::int64_t t = std::uniform_int_distribution<std::int64_t>(-5, last + 5)(rng);
      const bool same = render_at(s, t, size) == pptest::incremental_render(s, t, size);
      o.checks.expect(same, "stream " + std::to_string(i) + " differs at t=" + std::to_string(t));
    }
  }
  o.note = "200 streams x 20 query times";
}

void silence_detector(Outcome& o) {
  const SilenceReport zero = detect_silence(pptest::zero_track(10000));
  o.checks.expect(zero.silent, "all-zero track not silent");

  const double analytic = 20.0 * std::log10(0.5 / std::sqrt(2.0));
  o.checks.expect(std::abs(analytic - -9.03) < 0.01, "analytic reference drifted");
  const SilenceReport tone = detect_silence(pptest::sine_track(440, 0.5, 10000));
  o.checks.expect(!tone.silent, "440 Hz tone labeled silent");
  o.checks.expect(std::abs(tone.max_window_dbfs - analytic) <= 0.5,
                  "tone measured " + std::to_string(tone.max_window_dbfs) + " dBFS");

  // Gaussian noise with RMS at -80 dBFS.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 32767.0 * std::pow(10.0, -80.0 / 20.0));
  AudioTrack hiss = pptest::zero_track(10000);
  for (auto& s : hiss.samples) s = static_cast<std::int16_t>(std::lround(noise(rng)));
  const SilenceReport quiet = detect_silence(hiss);
  o.checks.expect(quiet.silent, "-80 dBFS noise not silent (" + std::to_string(quiet.max_window_dbfs) + ")");

  std::ostringstream note;
  note << std::setprecision(4) << "tone " << tone.max_window_dbfs << " dBFS vs " << analytic << ", noise "
       << quiet.max_window_dbfs << " dBFS";
  o.note = note.str();
}

void timeline_pauses(Outcome& o) {
  std::mt19937_64 rng(31);
  std::size_t pauses = 0;
  for (int i = 0; i < 100; ++i) {
    Lesson lesson;
    lesson.lesson_id = "L" + std::to_string(i);
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    std::vector<std::pair<std::string, std::int64_t>> expected_pauses;
    std::vector<std::int64_t> expected_plays;
    std::int64_t offset = 0;
    for (int k = 0; k < n; ++k) {
      if (std::bernoulli_distribution(0.35)(rng)) {
        ExerciseSpec spec;
        spec.exercise_id = "E" + std::to_string(i) + "x" + std::to_string(k);
        spec.instructions = "q";
        spec.time_limit_s = 30;
        lesson.segments.emplace_back(ExerciseSegment{spec});
        expected_pauses.emplace_back(spec.exercise_id, offset);
      } else {
        const auto d = std::uniform_int_distribution<std::int64_t>(1, 900000)(rng);
        lesson.segments.emplace_back(VideoSegment{BlobRef{content_hash(std::to_string(k)), MediaType::video}, d});
        expected_plays.push_back(offset);
        offset += d;
      }
    }
    const PlaybackPlan plan = build_timeline(lesson);
    std::vector<std::pair<std::string, std::int64_t>> got_pauses;
    std::vector<std::int64_t> got_plays;
    for (const auto& e : plan.entries) {
      if (const auto* p = std::get_if<PauseEntry>(&e)) got_pauses.emplace_back(p->exercise_id, p->offset_ms);
      if (const auto* p = std::get_if<PlayEntry>(&e)) got_plays.push_back(p->start_offset_ms);
    }
    o.checks.expect(plan.pause_count() == expected_pauses.size(), "lesson " + std::to_string(i) + " pause count");
    o.checks.expect(got_pauses == expected_pauses, "lesson " + std::to_string(i) + " pause offsets");
    o.checks.expect(got_plays == expected_plays, "lesson " + std::to_string(i) + " play offsets");
    o.checks.expect(plan.total_play_ms() == offset, "lesson " + std::to_string(i) + " total play");
    pauses += expected_pauses.size();
  }
  o.note = "100 lessons, " + std::to_string(pauses) + " pauses";
}

void time_limit(Outcome& o) {
  pptest::TempDir dir;
  Platform platform(pptest::fast_options(dir.path()));
  const auto ex = pptest::publish_exercise(platform, InputMode::InkOnly, 45).exercise_id;
  int n = 0;
  auto submit = [&](std::int64_t ms) -> std::string {
    const std::string student = "s" + std::to_string(n++);
    platform.register_user(Principal{student, Role::student, student});
    InkStream ink;
    ink.declared_duration_ms = ms;
    ink.events = {InkEvent::down(0, 0.1, 0.1), InkEvent::move(100, 0.9, 0.9), InkEvent::up(200)};
    SubmitRequest req;
    req.session_id = platform.recorder().start_session(ex, student).session.session_id;
    req.student_id = student;
    req.artifacts.ink = serialize_ink_stream(ink);
    req.declared_duration_ms = ms;
    req.ratings = Ratings{3, 3};
    try {
      platform.recorder().submit(req);
      return "accepted";
    } catch (const Error& e) {
      return std::string(to_string(e.code()));
    }
  };
  const std::string a = submit(45000);
  const std::string b = submit(47000);
  const std::string c = submit(47001);
  o.checks.expect(a == "accepted", "45000 ms: " + a);
  o.checks.expect(b == "accepted", "47000 ms: " + b);
  o.checks.expect(c == "over-limit", "47001 ms: " + c);
  o.note = "45000 " + a + ", 47000 " + b + ", 47001 " + c;
}

void gallery_correctness(Outcome& o) {
  pptest::TempDir dir;
  Platform platform(pptest::fast_options(dir.path()));
  const InputMode modes[] = {InputMode::InkAudio, InputMode::InkVideo, InputMode::AudioOnly};
  std::size_t combos = 0;
  for (std::size_t m = 0; m < 3; ++m) {
    const auto ex = pptest::publish_exercise(platform, modes[m], 45).exercise_id;
    SimProfile profile;
    profile.n_students = 30;
    profile.ink_prob = 0.6;
    profile.silence_prob = 0.25;
    profile.seed = 100 + m;
    const SimOutcome sim = simulate(platform, ex, profile, 4);
    Gallery& g = platform.gallery();
    const auto rows = g.export_records(ex);
    o.checks.expect(rows.size() == 30, "exercise " + ex + " has " + std::to_string(rows.size()) + " rows");
    std::set<std::string> reviewed;
    std::mt19937_64 rng(m);
    for (const auto& r : rows) {
      if (rng() % 3 == 0) {
        g.playback_manifest(r.response_id, "teacher");
        reviewed.insert(r.response_id);
      }
    }
    for (SortKey key : kAllSortKeys) {
      for (SortDirection d : {SortDirection::ascending, SortDirection::descending}) {
        for (std::optional<Modality> mode :
             {std::optional<Modality>{}, std::optional{Modality::ink}, std::optional{Modality::audio},
              std::optional{Modality::video}}) {
          for (std::optional<ReviewStatus> review :
               {std::optional<ReviewStatus>{}, std::optional{ReviewStatus::reviewed},
                std::optional{ReviewStatus::not_reviewed}}) {
            const SortSpec sort{key, d};
            const GalleryFilters filters{mode, review};
            std::vector<std::string> got;
            for (const auto& c : g.list_responses(ex, sort, filters, "teacher")) got.push_back(c.response_id);
            o.checks.expect(got == pptest::oracle_gallery_order(rows, sort, filters, reviewed),
                            std::string(to_string(key)) + "/" + std::string(to_string(d)) + " mismatch");
            ++combos;
          }
        }
      }
    }
  }

  // Latency at 1000 responses.
  const auto ex = pptest::publish_exercise(platform, InputMode::InkAudio, 45).exercise_id;
  SimProfile big;
  big.n_students = 1000;
  big.min_duration_ms = 1000;
  big.max_duration_ms = 3000;
  big.seed = 9;
  const SimOutcome sim = simulate(platform, ex, big, 4);
  const auto failed = std::count_if(sim.errors.begin(), sim.errors.end(), [](const auto& e) { return !e.empty(); });
  o.checks.expect(failed == 0, std::to_string(failed) + " simulated submissions failed");
  std::mt19937_64 rng(3);
  std::vector<double> ms;
  for (int i = 0; i < 200; ++i) {
    const SortSpec sort{kAllSortKeys[rng() % 5], rng() % 2 ? SortDirection::ascending : SortDirection::descending};
    GalleryFilters filters;
    if (rng() % 2) filters.mode_present = Modality::ink;
    const auto t0 = Stopwatch::now();
    const auto cards = platform.gallery().list_responses(ex, sort, filters, "teacher");
    ms.push_back(seconds_since(t0) * 1000.0);
    if (!filters.mode_present) o.checks.expect(cards.size() == 1000, "listing missed responses");
  }
  std::sort(ms.begin(), ms.end());
  const double p95 = ms[static_cast<std::size_t>(0.95 * ms.size()) - 1];
  o.checks.expect(p95 < 50.0, "p95 " + std::to_string(p95) + " ms");
  std::ostringstream note;
  note << combos << " sort/filter combinations over 3x30 responses; p95 list " << std::setprecision(3) << p95
       << " ms at 1000";
  o.note = note.str();
}

void labeling(Outcome& o) {
  pptest::TempDir dir;
  Platform platform(pptest::fast_options(dir.path()));
  std::size_t audio_bundles = 0, ink_bundles = 0, changed = 0;
  for (InputMode mode : kAllInputModes) {
    const auto ex = pptest::publish_exercise(platform, mode, 30).exercise_id;
    SimProfile profile;
    profile.n_students = 12;
    profile.silence_prob = 1.0;
    profile.ink_prob = 0.0;
    profile.min_duration_ms = 1000;
    profile.max_duration_ms = 6000;
    const SimOutcome sim = simulate(platform, ex, profile, 4);
    for (std::size_t i = 0; i < sim.plans.size(); ++i) {
      const auto b = platform.recorder().find_response(sim.response_ids[i]);
      if (!b) {
        o.checks.expect(false, "missing bundle for " + sim.plans[i].student_id + ": " + sim.errors[i]);
        continue;
      }
      o.checks.expect(b->processed, "unprocessed bundle " + b->response_id);
      if (b->audio) {
        ++audio_bundles;
        o.checks.expect(b->labels.no_audio, b->response_id + " lacks no-audio");
      }
      if (ink_enabled(mode)) {
        ++ink_bundles;
        o.checks.expect(b->labels.no_ink, b->response_id + " lacks no-ink");
      }
    }
    changed += platform.postprocessor().reprocess_exercise(ex);
    changed += platform.postprocessor().reprocess_exercise(ex);
  }
  o.checks.expect(audio_bundles > 0 && ink_bundles > 0, "population lacks audio or ink bundles");
  o.checks.expect(changed == 0, "reprocess changed " + std::to_string(changed) + " records");
  o.note = std::to_string(audio_bundles) + " audio-bearing, " + std::to_string(ink_bundles) +
           " ink-enabled bundles; reprocess changed " + std::to_string(changed);
}

SubmitRequest sim_request(Platform& platform, const std::string& ex, const std::string& student, std::uint64_t seed) {
  SimProfile profile;
  profile.seed = seed;
  profile.min_duration_ms = 2000;
  profile.max_duration_ms = 5000;
  const SimPlan plan = plan_student(profile, 30, 0);
  SubmitRequest req;
  req.session_id = platform.recorder().start_session(ex, student).session.session_id;
  req.student_id = student;
  req.artifacts = synthesize_artifacts(plan, InputMode::InkAudio);
  req.declared_duration_ms = plan.duration_ms;
  req.ratings = plan.ratings;
  return req;
}

void atomicity(Outcome& o) {
  std::ostringstream note;
  {
    pptest::TempDir dir;
    Platform platform(pptest::fast_options(dir.path()));
    const auto ex = pptest::publish_exercise(platform, InputMode::InkAudio, 30).exercise_id;
    std::vector<SubmitRequest> reqs;
    for (int i = 0; i < 32; ++i) {
      const std::string student = "d" + std::to_string(i);
      platform.register_user(Principal{student, Role::student, student});
      reqs.push_back(sim_request(platform, ex, student, 1000 + i));
    }
    std::atomic<int> ok{0};
    std::vector<std::thread> threads;
    for (const auto& r : reqs) {
      threads.emplace_back([&, r] {
        try {
          platform.recorder().submit(r);
          ++ok;
        } catch (const Error&) {
        }
      });
    }
    for (auto& t : threads) t.join();
    const auto bundles = platform.store().scan(EntityKind::response).size();
    o.checks.expect(ok == 32 && bundles == 32, "distinct students: " + std::to_string(bundles) + " bundles");
    note << bundles << " bundles from 32 students; ";
  }
  {
    pptest::TempDir dir;
    Platform platform(pptest::fast_options(dir.path()));
    const auto ex = pptest::publish_exercise(platform, InputMode::InkAudio, 30).exercise_id;
    platform.register_user(Principal{"same", Role::student, "Same"});
    std::vector<SubmitRequest> reqs;
    for (int i = 0; i < 8; ++i) reqs.push_back(sim_request(platform, ex, "same", 2000 + i));
    std::atomic<int> ok{0}, dup{0};
    std::vector<std::thread> threads;
    for (const auto& r : reqs) {
      threads.emplace_back([&, r] {
        try {
          platform.recorder().submit(r);
          ++ok;
        } catch (const Error& e) {
          if (e.code() == Errc::duplicate_submission) ++dup;
        }
      });
    }
    for (auto& t : threads) t.join();
    const auto bundles = platform.store().scan(EntityKind::response).size();
    o.checks.expect(ok == 1 && bundles == 1, "one student: " + std::to_string(bundles) + " bundles");
    o.checks.expect(dup == 7, "one student: " + std::to_string(dup.load()) + " duplicate-submission errors");
    note << bundles << " bundle and " << dup.load() << " duplicates from one student; ";
  }
  {
    pptest::TempDir dir;
    const std::string bin = CRASH_SUBMIT_BIN;
    const std::string data = (dir.path() / "data").string();
    const auto setup = pptest::run_command(bin + " setup " + data);
    o.checks.expect(setup.exit_code == 0, "crash setup failed");
    if (setup.exit_code != 0) return;
    const std::string ex = setup.out.substr(0, setup.out.find('\n'));
    const auto probe = pptest::run_command("exec " + bin + " submit " + data + " " + ex + " probe 0");
    o.checks.expect(probe.exit_code == 0, "probe submit failed");
    if (probe.exit_code != 0) return;
    const long steps = json::parse(probe.out).at("steps").get<long>();
    std::mt19937_64 rng(12345);
    std::size_t visible = 0;
    for (int k = 0; k < 20; ++k) {
      const long at = std::uniform_int_distribution<long>(1, steps)(rng);
      const std::string student = "k" + std::to_string(k);
      const auto r = pptest::run_command("exec " + bin + " submit " + data + " " + ex + " " + student + " " +
                                         std::to_string(at));
      o.checks.expect(r.exit_code == 128 + SIGKILL, "kill point " + std::to_string(at) + " was not reached");
      const auto audit = pptest::audit_after_crash(data, ex, student);
      for (const auto& p : audit.problems) o.checks.expect(false, "kill at step " + std::to_string(at) + ": " + p);
      o.checks.expect(audit.problems.empty(), "kill at step " + std::to_string(at));
      if (audit.bundle_visible) ++visible;
    }
    note << "20 kills over " << steps << " storage steps (" << visible << " committed, " << 20 - visible
         << " absent)";
  }
  o.note = note.str();
}

void end_to_end(Outcome& o) {
  pptest::TempDir dir;
  const auto data = dir / "data";
  pptest::fs::create_directories(data);
  pptest::write_file(dir / "part1.bin", "video one");
  pptest::write_file(dir / "part2.bin", "video two");
  pptest::write_file(dir / "part3.bin", "video three");
  struct ExerciseDef {
    std::string mode;
    int limit_s;
    InputMode input_mode;
  };
  const std::vector<ExerciseDef> defs{{"ink+audio", 45, InputMode::InkAudio},
                                      {"audio", 60, InputMode::AudioOnly},
                                      {"ink+video", 30, InputMode::InkVideo}};
  json segments = json::array();
  for (std::size_t i = 0; i < defs.size(); ++i) {
    segments.push_back({{"type", "video"}, {"file", "part" + std::to_string(i + 1) + ".bin"}, {"duration_ms", 90000}});
    segments.push_back({{"type", "exercise"},
                        {"instructions", "Question " + std::to_string(i + 1)},
                        {"time_limit_s", defs[i].limit_s},
                        {"input_mode", defs[i].mode}});
  }
  pptest::write_file(dir / "lesson.json", json{{"title", "Linear functions"}, {"segments", segments}}.dump());

  const std::string bin = PAUSEPOINT_BIN;
  const std::string dd = " --data-dir '" + data.string() + "'";
  const auto imported = pptest::run_command(bin + " import-lesson" + dd + " '" + (dir / "lesson.json").string() + "' --publish");
  o.checks.expect(imported.exit_code == 0, "import exit " + std::to_string(imported.exit_code));
  if (imported.exit_code != 0) return;
  const json ids = json::parse(imported.out);
  o.checks.expect(ids.at("published") == true, "lesson not published");
  o.checks.expect(ids.at("exercise_ids").size() == 3, "expected three exercises");

  std::size_t rows_checked = 0;
  for (std::size_t i = 0; i < defs.size() && i < ids.at("exercise_ids").size(); ++i) {
    const std::string ex = ids.at("exercise_ids")[i];
    SimProfile profile;
    profile.n_students = 25;
    profile.ink_prob = 0.7;
    profile.silence_prob = 0.2;
    profile.min_duration_ms = 4000;
    profile.max_duration_ms = 70000;
    profile.seed = 500 + i;
    std::ostringstream args;
    args << " simulate" << dd << " --exercise " << ex << " --students " << profile.n_students << " --ink-prob "
         << profile.ink_prob << " --silence-prob " << profile.silence_prob << " --min-duration-ms "
         << profile.min_duration_ms << " --max-duration-ms " << profile.max_duration_ms << " --seed " << profile.seed
         << " --parallelism 4";
    const auto sim = pptest::run_command(bin + args.str());
    o.checks.expect(sim.exit_code == 0, ex + " simulate exit " + std::to_string(sim.exit_code));
    if (sim.exit_code != 0) continue;

    const auto out = dir / ("gallery-" + ex + ".json");
    const auto exported = pptest::run_command(bin + " export-gallery" + dd + " --exercise " + ex +
                                              " --format json --out '" + out.string() + "'");
    o.checks.expect(exported.exit_code == 0, ex + " export exit " + std::to_string(exported.exit_code));
    if (exported.exit_code != 0) continue;
    const auto rows = parse_export_json(pptest::read_file(out));
    o.checks.expect(rows.size() == profile.n_students, ex + " exported " + std::to_string(rows.size()) + " rows");

    std::map<std::string, ExportRecord> by_name;
    for (const auto& r : rows) by_name.emplace(r.student_name, r);
    const InputMode mode = defs[i].input_mode;
    for (std::size_t k = 0; k < profile.n_students; ++k) {
      const SimPlan plan = plan_student(profile, defs[i].limit_s, k);
      const auto it = by_name.find(plan.student_name);
      if (it == by_name.end()) {
        o.checks.expect(false, ex + " missing row for " + plan.student_name);
        continue;
      }
      const ExportRecord& r = it->second;
      ResponseLabels expected;
      expected.no_ink = ink_enabled(mode) && !plan.real_ink;
      expected.no_audio = audio_enabled(mode) && plan.silent;
      o.checks.expect(r.duration_ms == plan.duration_ms, plan.student_name + " duration");
      o.checks.expect(r.confidence == plan.ratings.confidence, plan.student_name + " confidence");
      o.checks.expect(r.helpfulness == plan.ratings.helpfulness, plan.student_name + " helpfulness");
      o.checks.expect(r.labels == expected.names(), plan.student_name + " labels");
      ++rows_checked;
    }
  }
  o.note = std::to_string(rows_checked) + " exported rows matched replayed plans";
}

}  // namespace

int main() {
  int failures = 0;
  failures += run("ink round-trip and parser fuzzing", 30, ink_round_trip);
  failures += run("replay matches incremental renderer", 60, replay_oracle);
  failures += run("silence detector", 0, silence_detector);
  failures += run("timeline pauses match prefix sums", 0, timeline_pauses);
  failures += run("time limit with grace", 0, time_limit);
  failures += run("gallery ordering and latency", 0, gallery_correctness);
  failures += run("labeling and reprocess fixed point", 0, labeling);
  failures += run("atomic and unique submissions", 0, atomicity);
  failures += run("end-to-end CLI flow", 120, end_to_end);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
