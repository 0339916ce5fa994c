#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pausepoint/catalog.hpp"
#include "pausepoint/gallery.hpp"
#include "pausepoint/postprocess.hpp"
#include "pausepoint/principal.hpp"
#include "pausepoint/session.hpp"
#include "pausepoint/store.hpp"

namespace pausepoint {

struct PlatformOptions {
  std::filesystem::path data_dir;
  bool default_gallery_access = false;
  std::size_t postprocess_workers = 1;
  bool durable = true;
  const Clock* clock = &system_clock();
  std::chrono::milliseconds gc_window = std::chrono::hours(1);
  std::optional<std::uint64_t> capacity_bytes;
  std::function<void(std::string_view)> fault_hook;
  // Custom background resolution (tests); defaults to the store plus HTTP/file fetches.
  std::shared_ptr<const ImageResolver> resolver;
};

struct ImportResult {
  std::string lesson_id;
  std::vector<std::string> exercise_ids;
};

// Everything one data directory serves: persistence, authoring, recording,
// review and background post-processing. Unprocessed responses left by a
// previous run are re-queued on open.
class Platform {
 public:
  explicit Platform(PlatformOptions options);
  ~Platform();
  Platform(const Platform&) = delete;
  Platform& operator=(const Platform&) = delete;

  Store& store() noexcept { return *store_; }
  Catalog& catalog() noexcept { return *catalog_; }
  Recorder& recorder() noexcept { return *recorder_; }
  Gallery& gallery() noexcept { return *gallery_; }
  PostProcessor& postprocessor() noexcept { return *postprocessor_; }
  const ImageResolver& resolver() const noexcept { return *resolver_; }
  const Clock& clock() const noexcept { return *options_.clock; }

  void register_user(const Principal& principal);
  std::optional<Principal> user(const std::string& user_id) const;

  // Ingests a lesson manifest file; the lesson is left unpublished.
  // Throws bad-manifest, missing-file.
  ImportResult import_lesson(const std::filesystem::path& manifest_path, const std::string& owner);

  // Stops background work and checkpoints the store.
  void shutdown();

 private:
  PlatformOptions options_;
  std::unique_ptr<Store> store_;
  std::shared_ptr<const ImageResolver> resolver_;
  std::unique_ptr<Catalog> catalog_;
  std::unique_ptr<Recorder> recorder_;
  std::unique_ptr<Gallery> gallery_;
  std::unique_ptr<PostProcessor> postprocessor_;
  mutable std::mutex users_mu_;
  std::map<std::string, Principal, std::less<>> users_;
};

}  // namespace pausepoint
