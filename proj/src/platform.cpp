#include "pausepoint/platform.hpp"

#include <fstream>
#include <sstream>

#include "pausepoint/error.hpp"
#include "pausepoint/lesson_manifest.hpp"

namespace pausepoint {

namespace fs = std::filesystem;

namespace {

std::string read_input_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

}  // namespace

Platform::Platform(PlatformOptions options) : options_(std::move(options)) {
  StoreOptions so;
  so.root = options_.data_dir;
  so.gc_window = options_.gc_window;
  so.clock = options_.clock;
  so.durable = options_.durable;
  so.capacity_bytes = options_.capacity_bytes;
  so.fault_hook = options_.fault_hook;
  store_ = std::make_unique<Store>(std::move(so));
  resolver_ = options_.resolver ? options_.resolver : std::make_shared<StoreImageResolver>(*store_);
  catalog_ = std::make_unique<Catalog>(*store_, *options_.clock, options_.default_gallery_access);
  recorder_ = std::make_unique<Recorder>(*store_, *catalog_, *options_.clock);
  gallery_ = std::make_unique<Gallery>(*store_, *catalog_, *options_.clock);
  postprocessor_ = std::make_unique<PostProcessor>(*store_, *catalog_, options_.postprocess_workers);
  recorder_->set_name_lookup([this](const std::string& id) -> std::optional<std::string> {
    auto p = user(id);
    if (!p) return std::nullopt;
    return p->display_name;
  });
  recorder_->set_submit_listener([this](const std::string& id) { postprocessor_->enqueue(id); });
  postprocessor_->enqueue_pending();
}

Platform::~Platform() {
  try {
    shutdown();
  } catch (...) {
  }
}

void Platform::shutdown() {
  if (postprocessor_) {
    postprocessor_->drain();
    postprocessor_->stop();
  }
  if (store_) store_->checkpoint();
}

void Platform::register_user(const Principal& principal) {
  std::lock_guard lock(users_mu_);
  users_.insert_or_assign(principal.user_id, principal);
}

std::optional<Principal> Platform::user(const std::string& user_id) const {
  std::lock_guard lock(users_mu_);
  auto it = users_.find(user_id);
  if (it == users_.end()) return std::nullopt;
  return it->second;
}

ImportResult Platform::import_lesson(const fs::path& manifest_path, const std::string& owner) {
  const std::string text = read_input_file(manifest_path);
  const LessonManifest manifest = parse_lesson_manifest(text, manifest_path.parent_path());

  // Read everything first so a missing file leaves no lesson behind.
  std::vector<std::string> videos;
  std::vector<std::optional<BackgroundImage>> backgrounds;
  for (const auto& seg : manifest.segments) {
    if (const auto* video = std::get_if<ManifestVideo>(&seg)) {
      videos.push_back(read_input_file(video->file));
      if (videos.back().empty()) throw Error(Errc::bad_manifest, video->file.string() + " is empty");
    } else {
      const auto& ex = std::get<ManifestExercise>(seg);
      ExerciseSpec probe{"", ex.instructions, ex.time_limit_s, ex.input_mode, std::nullopt, {}};
      if (auto report = validate_exercise(probe); !report.empty()) {
        throw Error(Errc::bad_manifest, std::string(to_string(report.front().code)) + ": " + report.front().detail);
      }
      if (!ex.background) {
        backgrounds.emplace_back();
      } else if (is_remote_locator(*ex.background)) {
        backgrounds.emplace_back(RemoteImage{*ex.background});
      } else {
        const std::string bytes = read_input_file(*ex.background);
        auto type = sniff_image(bytes);
        if (!type) throw Error(Errc::bad_manifest, *ex.background + " is not a PNG or JPEG image");
        backgrounds.emplace_back(store_->put_blob(bytes, *type));
      }
    }
  }

  ImportResult result;
  result.lesson_id = catalog_->create_lesson(owner, manifest.title).lesson_id;
  std::size_t video_i = 0;
  std::size_t ex_i = 0;
  for (const auto& seg : manifest.segments) {
    if (const auto* video = std::get_if<ManifestVideo>(&seg)) {
      const BlobRef ref = store_->put_blob(videos[video_i++], MediaType::video);
      catalog_->add_video(result.lesson_id, owner, ref, video->duration_ms);
    } else {
      const auto& ex = std::get<ManifestExercise>(seg);
      ExerciseDraft draft{ex.instructions, ex.time_limit_s, ex.input_mode, backgrounds[ex_i++]};
      result.exercise_ids.push_back(catalog_->add_exercise(result.lesson_id, owner, draft).exercise_id);
    }
  }
  return result;
}

}  // namespace pausepoint
