#include "pausepoint/postprocess.hpp"

#include <iostream>

#include "pausepoint/error.hpp"
#include "pausepoint/image.hpp"

namespace pausepoint {

namespace {

constexpr int kMaxAttempts = 8;

std::string read_artifact(const Store& store, const BlobRef& ref) {
  auto bytes = store.read_blob(ref.hash);
  if (!bytes) throw Error(Errc::artifact_unreadable, "blob " + ref.hash + " is missing");
  return std::move(*bytes);
}

}  // namespace

ResponseMedia BundleAnalyzer::load_media(const ResponseBundle& bundle) const {
  ResponseMedia media;
  media.mode = bundle.input_mode;
  try {
    if (bundle.ink) media.ink = parse_ink_stream(read_artifact(store_, *bundle.ink));
    if (bundle.audio) media.audio = parse_wav(read_artifact(store_, *bundle.audio));
    if (bundle.video) media.video_duration_ms = bundle.declared_duration_ms;
    if (bundle.poster) media.poster = decode_image(read_artifact(store_, *bundle.poster));
  } catch (const Error& e) {
    if (e.code() == Errc::artifact_unreadable) throw;
    throw Error(Errc::artifact_unreadable, "response " + bundle.response_id + ": " + e.what());
  }
  return media;
}

ResponseLabels BundleAnalyzer::label(const ResponseBundle& bundle) const { return label_response(load_media(bundle)); }

std::int64_t BundleAnalyzer::duration(const ResponseBundle& bundle) const {
  return measure_duration(load_media(bundle)).duration_ms;
}

std::optional<Image> BundleAnalyzer::background(const ResponseBundle& bundle) const {
  auto info = catalog_.find_exercise(bundle.exercise_id);
  if (!info || !info->spec.background) return std::nullopt;
  const auto* ref = std::get_if<BlobRef>(&*info->spec.background);
  if (!ref) return std::nullopt;
  return decode_image(read_artifact(store_, *ref));
}

BlobRef BundleAnalyzer::thumbnail(const ResponseBundle& bundle, Size size) const {
  const ResponseMedia media = load_media(bundle);
  const auto bg = background(bundle);
  const Image thumb = make_thumbnail(media, bg ? &*bg : nullptr, size);
  return store_.put_blob(encode_png(thumb), MediaType::png);
}

PostProcessor::PostProcessor(Store& store, const Catalog& catalog, std::size_t workers)
    : store_(store), analyzer_(store, catalog) {
  for (std::size_t i = 0; i < std::max<std::size_t>(1, workers); ++i) workers_.emplace_back([this] { run(); });
}

PostProcessor::~PostProcessor() { stop(); }

void PostProcessor::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  work_cv_.notify_all();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
}

void PostProcessor::enqueue(std::string response_id) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(response_id));
  }
  work_cv_.notify_one();
}

std::size_t PostProcessor::enqueue_pending() {
  std::vector<std::string> pending;
  store_.for_each(EntityKind::response, [&](const Record& r) {
    if (!r.body.at("processed").get<bool>()) pending.push_back(r.id);
  });
  for (auto& id : pending) enqueue(id);
  return pending.size();
}

void PostProcessor::drain() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return (queue_.empty() && busy_ == 0) || stopping_; });
}

std::size_t PostProcessor::failures() const {
  std::lock_guard lock(mu_);
  return failures_;
}

void PostProcessor::run() {
  for (;;) {
    std::string id;
    {
      std::unique_lock lock(mu_);
      work_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) break;
      id = std::move(queue_.front());
      queue_.pop_front();
      ++busy_;
    }
    bool failed = false;
    try {
      process(id);
    } catch (const std::exception& e) {
      failed = true;
      std::cerr << "{\"event\":\"postprocess-failed\",\"response_id\":\"" << id << "\",\"detail\":"
                << nlohmann::json(e.what()).dump() << "}\n";
    }
    {
      std::lock_guard lock(mu_);
      --busy_;
      if (failed) ++failures_;
    }
    idle_cv_.notify_all();
  }
  idle_cv_.notify_all();
}

bool PostProcessor::process(const std::string& response_id) {
  for (int attempt = 0;; ++attempt) {
    auto rec = store_.get(EntityKind::response, response_id);
    if (!rec) throw Error(Errc::unknown_response, "no response " + response_id);
    ResponseBundle bundle = rec->body.get<ResponseBundle>();
    const ResponseLabels labels = analyzer_.label(bundle);
    BlobRef thumb = analyzer_.thumbnail(bundle);
    BlobLease lease = store_.lease(thumb.hash);
    if (bundle.processed && bundle.labels == labels && bundle.thumbnail == thumb) return false;
    bundle.labels = labels;
    bundle.thumbnail = thumb;
    bundle.processed = true;
    try {
      store_.commit({RecordWrite{EntityKind::response, response_id, rec->version, bundle, bundle.blobs()}});
      return true;
    } catch (const Error& e) {
      if (e.code() != Errc::version_conflict || attempt + 1 >= kMaxAttempts) throw;
    }
  }
}

std::size_t PostProcessor::reprocess_exercise(const std::string& exercise_id) {
  std::vector<std::string> ids;
  store_.for_each(EntityKind::response, [&](const Record& r) {
    if (r.body.at("exercise_id").get<std::string>() == exercise_id) ids.push_back(r.id);
  });
  std::size_t changed = 0;
  for (const auto& id : ids) changed += process(id) ? 1 : 0;
  return changed;
}

}  // namespace pausepoint
