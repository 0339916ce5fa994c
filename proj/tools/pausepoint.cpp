// Operator tool: serve, import lessons, simulate students, reprocess, export, gc.
//
// Exit codes:
//   0 success
//   1 unexpected failure
//   2 usage error
//   3 bad configuration (bad-config, port-in-use)
//   4 unknown entity or missing file
//   5 invalid input (bad-manifest, validation failures, malformed data)
//   6 state conflict (already published, duplicate, version conflict)
//   7 storage failure (io-error, storage-full)
// Failures print one JSON object {"error", "detail"} on stderr.

#include <httplib.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <pthread.h>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pausepoint/platform.hpp"
#include "pausepoint/service.hpp"
#include "pausepoint/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pausepoint;

namespace {

int exit_code(Errc code) {
  switch (code) {
    case Errc::bad_config:
    case Errc::port_in_use: return 3;
    case Errc::unknown_lesson:
    case Errc::unknown_exercise:
    case Errc::unknown_response:
    case Errc::unknown_session:
    case Errc::not_found:
    case Errc::missing_file:
    case Errc::missing_blob: return 4;
    case Errc::lesson_published:
    case Errc::duplicate_submission:
    case Errc::version_conflict:
    case Errc::session_terminal: return 6;
    case Errc::io_error:
    case Errc::storage_full: return 7;
    default: return 5;
  }
}

void report(std::string_view code, const std::string& detail) {
  std::cerr << json{{"error", code}, {"detail", detail}}.dump() << std::endl;
}

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path data_dir;
  fs::path tokens;
  bool student_gallery_access = false;
  std::size_t postprocess_workers = 2;
  std::size_t worker_threads = 8;
};

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(Errc::bad_config, key + ": expected true or false, got '" + v + "'");
}

long parse_int(const std::string& key, const std::string& v, long lo, long hi) {
  std::size_t used = 0;
  long n = 0;
  try {
    n = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || n < lo || n > hi) {
    throw Error(Errc::bad_config, key + ": expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return n;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat "key = value" lines; '#' starts a comment line. Relative paths are
// resolved against the config file's directory.
ServeConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::bad_config, "cannot read config " + path.string());
  const fs::path base = fs::absolute(path).parent_path();
  ServeConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::bad_config, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "port") {
      cfg.port = static_cast<int>(parse_int(key, value, 0, 65535));
    } else if (key == "host") {
      cfg.host = value;
    } else if (key == "data_dir") {
      cfg.data_dir = base / value;
    } else if (key == "tokens") {
      cfg.tokens = base / value;
    } else if (key == "student_gallery_access") {
      cfg.student_gallery_access = parse_bool(key, value);
    } else if (key == "postprocess_workers") {
      cfg.postprocess_workers = static_cast<std::size_t>(parse_int(key, value, 1, 64));
    } else if (key == "worker_threads") {
      cfg.worker_threads = static_cast<std::size_t>(parse_int(key, value, 1, 256));
    } else {
      throw Error(Errc::bad_config, "unknown key '" + key + "'");
    }
  }
  if (cfg.data_dir.empty()) throw Error(Errc::bad_config, "data_dir is required");
  if (!fs::is_directory(cfg.data_dir)) throw Error(Errc::bad_config, "data_dir " + cfg.data_dir.string() + " does not exist");
  if (cfg.tokens.empty()) throw Error(Errc::bad_config, "tokens is required");
  return cfg;
}

PlatformOptions platform_options(const fs::path& data_dir, std::size_t workers = 2) {
  PlatformOptions o;
  o.data_dir = data_dir;
  o.postprocess_workers = workers;
  return o;
}

int cmd_serve(const fs::path& config_path) {
  const ServeConfig cfg = load_config(config_path);
  TokenAuthenticator auth = TokenAuthenticator::from_file(cfg.tokens);

  // Route termination signals to a waiter thread instead of async handlers.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  PlatformOptions po = platform_options(cfg.data_dir, cfg.postprocess_workers);
  po.default_gallery_access = cfg.student_gallery_access;
  Platform platform(po);
  ServiceOptions so;
  so.host = cfg.host;
  so.port = cfg.port;
  so.worker_threads = cfg.worker_threads;
  Service service(platform, std::move(auth), so);
  const int port = service.bind();
  std::cout << json{{"event", "listening"}, {"host", cfg.host}, {"port", port}}.dump() << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.run();
  // run() also returns if the listener fails; wake the waiter either way.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  platform.shutdown();
  std::cout << json{{"event", "stopped"}}.dump() << std::endl;
  return 0;
}

int cmd_import(const fs::path& data_dir, const fs::path& manifest, const std::string& owner, bool publish) {
  Platform platform(platform_options(data_dir));
  const ImportResult result = platform.import_lesson(manifest, owner);
  if (publish) platform.catalog().publish(result.lesson_id, owner, platform.resolver());
  platform.shutdown();
  std::cout << json{{"lesson_id", result.lesson_id}, {"exercise_ids", result.exercise_ids}, {"published", publish}}.dump()
            << std::endl;
  return 0;
}

int cmd_publish(const fs::path& data_dir, const std::string& lesson_id, const std::string& owner) {
  Platform platform(platform_options(data_dir));
  const Lesson lesson = platform.catalog().publish(lesson_id, owner, platform.resolver());
  platform.shutdown();
  std::cout << json{{"lesson_id", lesson.lesson_id}, {"published", lesson.published}}.dump() << std::endl;
  return 0;
}

int cmd_simulate(const fs::path& data_dir, const std::string& exercise_id, const SimProfile& profile,
                 std::size_t parallelism) {
  Platform platform(platform_options(data_dir));
  const SimOutcome outcome = simulate(platform, exercise_id, profile, parallelism);
  platform.shutdown();
  json errors = json::array();
  for (std::size_t i = 0; i < outcome.errors.size(); ++i) {
    if (!outcome.errors[i].empty()) errors.push_back({{"student_id", outcome.plans[i].student_id}, {"error", outcome.errors[i]}});
  }
  std::cout << json{{"exercise_id", exercise_id}, {"response_ids", outcome.response_ids}, {"errors", errors}}.dump()
            << std::endl;
  if (errors.empty()) return 0;
  const auto first = errc_from_string(errors[0].at("error").get<std::string>());
  return exit_code(first.value_or(Errc::io_error));
}

void write_output(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f || !(f << text) || !f.flush()) throw Error(Errc::io_error, "cannot write " + out);
}

int cmd_export_local(const fs::path& data_dir, const std::string& exercise_id, const std::string& format,
                     const std::string& out) {
  Platform platform(platform_options(data_dir));
  platform.postprocessor().drain();
  const auto records = platform.gallery().export_records(exercise_id);
  platform.shutdown();
  write_output(format == "csv" ? export_csv(records) : export_json(records), out);
  return 0;
}

int cmd_export_remote(const std::string& server_url, const std::string& token, const std::string& exercise_id,
                      const std::string& format, const std::string& out) {
  httplib::Client client(server_url);
  client.set_bearer_token_auth(token);
  auto res = client.Get("/exercises/" + exercise_id + "/export?format=" + format);
  if (!res) throw Error(Errc::io_error, "cannot reach " + server_url + ": " + httplib::to_string(res.error()));
  if (res->status != 200) {
    const json body = json::parse(res->body, nullptr, false);
    const std::string code = body.is_object() ? body.value("code", std::string("io-error")) : std::string("io-error");
    throw Error(errc_from_string(code).value_or(Errc::io_error),
                body.is_object() ? body.value("detail", res->body) : res->body);
  }
  write_output(res->body, out);
  return 0;
}

int cmd_reprocess(const fs::path& data_dir, const std::string& exercise_id) {
  Platform platform(platform_options(data_dir));
  platform.catalog().exercise(exercise_id);
  platform.postprocessor().drain();
  const std::size_t changed = platform.postprocessor().reprocess_exercise(exercise_id);
  platform.shutdown();
  std::cout << json{{"exercise_id", exercise_id}, {"changed", changed}}.dump() << std::endl;
  return 0;
}

int cmd_gc(const fs::path& data_dir, long window_s) {
  PlatformOptions po = platform_options(data_dir);
  po.gc_window = std::chrono::seconds(window_s);
  Platform platform(po);
  platform.postprocessor().drain();
  const std::size_t removed = platform.store().gc_orphans();
  platform.shutdown();
  const StoreStats st = platform.store().stats();
  std::cout << json{{"removed", removed}, {"blob_count", st.blob_count}, {"blob_bytes", st.blob_bytes}}.dump()
            << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pausepoint: lesson exercises, response capture and review galleries"};
  app.require_subcommand(1);

  std::string config, data_dir, manifest, owner = "teacher", lesson_id, exercise_id, format = "csv", out, server_url,
                                          token;
  bool publish = false;
  SimProfile profile;
  std::size_t parallelism = 4;
  long gc_window_s = 3600;

  auto* serve = app.add_subcommand("serve", "Run the HTTP service until SIGTERM");
  serve->add_option("--config", config, "Flat key=value config file")->required();

  auto* import = app.add_subcommand("import-lesson", "Import a lesson manifest (prints lesson and exercise ids)");
  import->add_option("--data-dir", data_dir)->required();
  import->add_option("manifest,--manifest", manifest, "Manifest JSON file")->required();
  import->add_option("--owner", owner, "Teacher user id that owns the lesson");
  import->add_flag("--publish", publish, "Publish right after importing");

  auto* pub = app.add_subcommand("publish", "Publish an imported lesson");
  pub->add_option("--data-dir", data_dir)->required();
  pub->add_option("--lesson", lesson_id)->required();
  pub->add_option("--owner", owner);

  auto* sim = app.add_subcommand("simulate", "Submit synthetic student responses to an exercise");
  sim->add_option("--data-dir", data_dir)->required();
  sim->add_option("--exercise", exercise_id)->required();
  sim->add_option("--students", profile.n_students)->check(CLI::PositiveNumber);
  sim->add_option("--ink-prob", profile.ink_prob)->check(CLI::Range(0.0, 1.0));
  sim->add_option("--silence-prob", profile.silence_prob)->check(CLI::Range(0.0, 1.0));
  sim->add_option("--min-duration-ms", profile.min_duration_ms)->check(CLI::NonNegativeNumber);
  sim->add_option("--max-duration-ms", profile.max_duration_ms)->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", profile.seed);
  sim->add_option("--parallelism", parallelism)->check(CLI::PositiveNumber);

  auto* exp = app.add_subcommand("export-gallery", "Export one exercise's gallery records");
  auto* exp_dir = exp->add_option("--data-dir", data_dir);
  auto* exp_url = exp->add_option("--server-url", server_url, "Export through a running service instead");
  exp_dir->excludes(exp_url);
  exp->add_option("--token", token, "Bearer token for --server-url");
  exp->add_option("--exercise", exercise_id)->required();
  exp->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  exp->add_option("--out", out, "Output file (default stdout)");

  auto* rep = app.add_subcommand("reprocess", "Re-run labeling and thumbnails for an exercise");
  rep->add_option("--data-dir", data_dir)->required();
  rep->add_option("--exercise", exercise_id)->required();

  auto* gc = app.add_subcommand("gc", "Delete unreferenced blobs older than the window");
  gc->add_option("--data-dir", data_dir)->required();
  gc->add_option("--window-s", gc_window_s)->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report("usage", e.what());
    return 2;
  }

  try {
    if (*serve) return cmd_serve(config);
    if (*import) return cmd_import(data_dir, manifest, owner, publish);
    if (*pub) return cmd_publish(data_dir, lesson_id, owner);
    if (*sim) return cmd_simulate(data_dir, exercise_id, profile, parallelism);
    if (*exp) {
      if (!server_url.empty()) return cmd_export_remote(server_url, token, exercise_id, format, out);
      if (data_dir.empty()) throw Error(Errc::bad_request, "export-gallery needs --data-dir or --server-url");
      return cmd_export_local(data_dir, exercise_id, format, out);
    }
    if (*rep) return cmd_reprocess(data_dir, exercise_id);
    if (*gc) return cmd_gc(data_dir, gc_window_s);
  } catch (const Error& e) {
    report(to_string(e.code()), e.detail());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    report("internal", e.what());
    return 1;
  }
  return 1;
}
