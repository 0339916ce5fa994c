#include <catch_amalgamated.hpp>

#include <chrono>
#include <csignal>
#include <thread>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pausepoint/error.hpp"
#include "pausepoint/platform.hpp"
#include "pausepoint/sim.hpp"
#include "support.hpp"

extern char** environ;

using namespace pausepoint;
using nlohmann::json;

namespace {

const std::string kBin = PAUSEPOINT_BIN;

SimProfile profile(std::uint64_t seed) {
  SimProfile p;
  p.n_students = 12;
  p.ink_prob = 0.6;
  p.silence_prob = 0.3;
  p.min_duration_ms = 2000;
  p.max_duration_ms = 9000;
  p.seed = seed;
  return p;
}

// Per student: hashes of every stored artifact, in submission order.
std::vector<std::string> content_fingerprint(std::uint64_t seed, InputMode mode) {
  pptest::TempDir dir;
  Platform platform(pptest::fast_options(dir.path()));
  const auto ex = pptest::publish_exercise(platform, mode, 30).exercise_id;
  const SimOutcome out = simulate(platform, ex, profile(seed), 3);
  std::vector<std::string> prints;
  for (std::size_t i = 0; i < out.plans.size(); ++i) {
    REQUIRE(out.errors[i].empty());
    const auto b = platform.recorder().find_response(out.response_ids[i]);
    REQUIRE(b);
    std::string fp = b->student_id + ":" + std::to_string(b->duration_ms) + ":";
    for (const auto& ref : b->blobs()) fp += ref.hash.substr(0, 16) + ",";
    prints.push_back(fp);
  }
  return prints;
}

std::string quote(const pptest::fs::path& p) { return "'" + p.string() + "'"; }

pptest::CommandResult cli(const std::string& args) { return pptest::run_command(kBin + " " + args + " 2>/dev/null"); }

struct Lab {
  pptest::TempDir dir;
  pptest::fs::path data = dir / "data";
  pptest::fs::path manifest = dir / "lesson.json";

  Lab() {
    pptest::fs::create_directories(data);
    pptest::write_file(dir / "intro.bin", "intro video bytes");
    pptest::write_file(manifest, json{{"title", "Slopes"},
                                      {"segments",
                                       {{{"type", "video"}, {"file", "intro.bin"}, {"duration_ms", 30000}},
                                        {{"type", "exercise"},
                                         {"instructions", "Sketch the line"},
                                         {"time_limit_s", 20},
                                         {"input_mode", "ink+audio"}}}}}
                                     .dump());
  }

  json import(bool publish) {
    const auto r = cli("import-lesson --data-dir " + quote(data) + " " + quote(manifest) + (publish ? " --publish" : ""));
    REQUIRE(r.exit_code == 0);
    return json::parse(r.out);
  }
};

}  // namespace

TEST_CASE("simulation is reproducible from its seed") {
  const auto a = content_fingerprint(42, InputMode::InkAudio);
  const auto b = content_fingerprint(42, InputMode::InkAudio);
  const auto c = content_fingerprint(43, InputMode::InkAudio);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(content_fingerprint(5, InputMode::InkVideo) == content_fingerprint(5, InputMode::InkVideo));
}

TEST_CASE("any student replays in isolation") {
  pptest::TempDir dir;
  Platform platform(pptest::fast_options(dir.path()));
  const auto ex = pptest::publish_exercise(platform, InputMode::InkAudio, 30).exercise_id;
  const SimProfile p = profile(9);
  const SimOutcome out = simulate(platform, ex, p, 4);
  REQUIRE(out.plans.size() == p.n_students);
  for (std::size_t i = 0; i < out.plans.size(); ++i) {
    const SimPlan replay = plan_student(p, 30, i);
    CHECK(replay.student_id == out.plans[i].student_id);
    CHECK(replay.real_ink == out.plans[i].real_ink);
    CHECK(replay.silent == out.plans[i].silent);
    CHECK(replay.duration_ms == out.plans[i].duration_ms);
    CHECK(replay.ratings == out.plans[i].ratings);
    CHECK(replay.duration_ms >= p.min_duration_ms);
    CHECK(replay.duration_ms <= p.max_duration_ms);
    CHECK(synthesize_artifacts(replay, InputMode::InkAudio).ink ==
          synthesize_artifacts(out.plans[i], InputMode::InkAudio).ink);
  }
}

TEST_CASE("plans respect the exercise limit and valid ratings") {
  SimProfile p;
  p.n_students = 200;
  p.min_duration_ms = 1000;
  p.max_duration_ms = 120000;
  for (std::size_t i = 0; i < p.n_students; ++i) {
    const SimPlan plan = plan_student(p, 45, i);
    CHECK(plan.duration_ms <= 45000);
    CHECK(valid_rating(plan.ratings.confidence));
    CHECK(valid_rating(plan.ratings.helpfulness));
  }
  SimProfile bad;
  bad.ink_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = SimProfile{};
  bad.min_duration_ms = 9000;
  bad.max_duration_ms = 100;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("cli import, simulate, export, reprocess and gc") {
  Lab lab;
  const json imported = lab.import(false);
  const std::string lesson = imported.at("lesson_id");
  const std::string ex = imported.at("exercise_ids")[0];
  CHECK(imported.at("published") == false);

  CHECK(cli("simulate --data-dir " + quote(lab.data) + " --exercise " + ex + " --students 3").exit_code == 5);
  CHECK(cli("publish --data-dir " + quote(lab.data) + " --lesson " + lesson).exit_code == 0);
  CHECK(cli("publish --data-dir " + quote(lab.data) + " --lesson " + lesson).exit_code == 6);

  const auto sim = cli("simulate --data-dir " + quote(lab.data) + " --exercise " + ex +
                       " --students 10 --seed 4 --min-duration-ms 3000 --max-duration-ms 8000");
  REQUIRE(sim.exit_code == 0);
  const json outcome = json::parse(sim.out);
  CHECK(outcome.at("response_ids").size() == 10);
  CHECK(outcome.at("errors").empty());

  const auto csv_path = lab.dir / "out.csv";
  REQUIRE(cli("export-gallery --data-dir " + quote(lab.data) + " --exercise " + ex + " --format csv --out " +
              quote(csv_path))
              .exit_code == 0);
  const auto rows = parse_export_csv(pptest::read_file(csv_path));
  REQUIRE(rows.size() == 10);
  const auto js = cli("export-gallery --data-dir " + quote(lab.data) + " --exercise " + ex + " --format json");
  REQUIRE(js.exit_code == 0);
  CHECK(parse_export_json(js.out) == rows);

  const auto rep = cli("reprocess --data-dir " + quote(lab.data) + " --exercise " + ex);
  REQUIRE(rep.exit_code == 0);
  CHECK(json::parse(rep.out).at("changed") == 0);
  CHECK(cli("gc --data-dir " + quote(lab.data)).exit_code == 0);
  CHECK(cli("export-gallery --data-dir " + quote(lab.data) + " --exercise E999999 --format csv").exit_code == 4);
}

TEST_CASE("cli import deduplicates content and reports bad inputs") {
  Lab lab;
  lab.import(false);
  std::size_t blobs_after_first = 0;
  {
    StoreOptions so;
    so.root = lab.data / "store";
    so.durable = false;
    Store store(so);
    blobs_after_first = store.stats().blob_count;
  }
  lab.import(true);
  {
    StoreOptions so;
    so.root = lab.data / "store";
    so.durable = false;
    Store store(so);
    CHECK(store.stats().blob_count == blobs_after_first);
  }
  pptest::write_file(lab.manifest, R"({"title": "x", "segments": [{"type": "video", "file": "gone.bin"}]})");
  CHECK(cli("import-lesson --data-dir " + quote(lab.data) + " " + quote(lab.manifest)).exit_code == 4);
  pptest::write_file(lab.manifest, R"({"title": "x", "segments": [{"type": "poll"}]})");
  CHECK(cli("import-lesson --data-dir " + quote(lab.data) + " " + quote(lab.manifest)).exit_code == 5);
  CHECK(cli("import-lesson --data-dir " + quote(lab.data) + " " + quote(lab.dir / "nope.json")).exit_code == 4);
  CHECK(cli("").exit_code == 2);
  CHECK(cli("simulate --data-dir " + quote(lab.data)).exit_code == 2);
}

TEST_CASE("serve validates its config and stops on SIGTERM") {
  Lab lab;
  const json imported = lab.import(true);
  const std::string ex = imported.at("exercise_ids")[0];
  pptest::write_file(lab.dir / "tokens.tsv", "tt\tteacher\tteacher\tMs Rivera\nst\tamy\tstudent\tAmy\n");

  pptest::write_file(lab.dir / "bad.conf", "port = 0\ntokens = tokens.tsv\n");
  CHECK(cli("serve --config " + quote(lab.dir / "bad.conf")).exit_code == 3);
  pptest::write_file(lab.dir / "bad2.conf", "port = 0\ndata_dir = missing\ntokens = tokens.tsv\n");
  CHECK(cli("serve --config " + quote(lab.dir / "bad2.conf")).exit_code == 3);

  pptest::write_file(lab.dir / "good.conf", "# test server\nport = 0\ndata_dir = data\ntokens = tokens.tsv\n");
  const auto log = lab.dir / "serve.out";
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  const std::string config = (lab.dir / "good.conf").string();
  std::vector<char*> argv{const_cast<char*>(kBin.c_str()), const_cast<char*>("serve"), const_cast<char*>("--config"),
                          const_cast<char*>(config.c_str()), nullptr};
  pid_t pid = 0;
  REQUIRE(posix_spawn(&pid, kBin.c_str(), &actions, nullptr, argv.data(), environ) == 0);
  posix_spawn_file_actions_destroy(&actions);

  int port = 0;
  for (int i = 0; i < 200 && port == 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    const std::string out = pptest::read_file(log);
    if (out.find('\n') != std::string::npos) {
      const json line = json::parse(out.substr(0, out.find('\n')));
      CHECK(line.at("event") == "listening");
      port = line.at("port");
    }
  }
  REQUIRE(port > 0);

  httplib::Client client("127.0.0.1", port);
  auto gallery = client.Get("/exercises/" + ex + "/gallery", {{"Authorization", "Bearer tt"}});
  REQUIRE(gallery);
  CHECK(gallery->status == 200);
  auto session = client.Post("/exercises/" + ex + "/sessions", {{"Authorization", "Bearer st"}}, "{}", "application/json");
  REQUIRE(session);
  CHECK(session->status == 201);

  // Export through the running service while it holds the data directory.
  const auto remote = cli("export-gallery --server-url http://127.0.0.1:" + std::to_string(port) +
                          " --token tt --exercise " + ex + " --format json");
  CHECK(remote.exit_code == 0);
  CHECK(parse_export_json(remote.out).empty());

  ::kill(pid, SIGTERM);
  int status = 0;
  REQUIRE(::waitpid(pid, &status, 0) == pid);
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);

  // The data directory is released and the session survived.
  Platform platform(pptest::fast_options(lab.data));
  CHECK(platform.store().scan(EntityKind::session).size() == 1);
}
