#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pausepoint/analysis.hpp"
#include "pausepoint/catalog.hpp"
#include "pausepoint/session.hpp"
#include "pausepoint/store.hpp"

namespace pausepoint {

// Bundle-level media analysis: loads a response's artifacts from the store
// and runs the pure analyses over them.
class BundleAnalyzer {
 public:
  BundleAnalyzer(Store& store, const Catalog& catalog) : store_(store), catalog_(catalog) {}

  // Throws artifact-unreadable when a referenced artifact cannot be decoded.
  ResponseMedia load_media(const ResponseBundle& bundle) const;
  ResponseLabels label(const ResponseBundle& bundle) const;
  std::int64_t duration(const ResponseBundle& bundle) const;
  // Renders, stores and returns the thumbnail blob (PNG).
  BlobRef thumbnail(const ResponseBundle& bundle, Size size = kThumbnailSize) const;
  // Background of the bundle's exercise, decoded; nullopt when it has none.
  std::optional<Image> background(const ResponseBundle& bundle) const;

 private:
  Store& store_;
  const Catalog& catalog_;
};

// Asynchronous labeling and thumbnailing of submitted responses.
class PostProcessor {
 public:
  PostProcessor(Store& store, const Catalog& catalog, std::size_t workers = 1);
  ~PostProcessor();
  PostProcessor(const PostProcessor&) = delete;
  PostProcessor& operator=(const PostProcessor&) = delete;

  void enqueue(std::string response_id);
  // Queues every stored response that has not been processed yet.
  std::size_t enqueue_pending();
  // Blocks until the queue is empty and no worker is busy.
  void drain();
  void stop();

  // Labels and thumbnails one response now. Returns true iff the stored
  // record changed, so a second call on the same bundle returns false.
  bool process(const std::string& response_id);
  // Re-runs labeling over one exercise; returns how many records changed.
  std::size_t reprocess_exercise(const std::string& exercise_id);

  std::size_t failures() const;
  const BundleAnalyzer& analyzer() const noexcept { return analyzer_; }

 private:
  void run();

  Store& store_;
  BundleAnalyzer analyzer_;
  mutable std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable idle_cv_;
  std::deque<std::string> queue_;
  std::size_t busy_ = 0;
  std::size_t failures_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace pausepoint
