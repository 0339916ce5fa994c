#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "pausepoint/blob_ref.hpp"
#include "pausepoint/clock.hpp"

namespace pausepoint {

enum class EntityKind : std::uint8_t { lesson, exercise, session, response, annotation, review_state, index };
inline constexpr std::size_t kEntityKindCount = 7;

std::string_view to_string(EntityKind kind) noexcept;
std::optional<EntityKind> entity_kind_from_string(std::string_view name) noexcept;

struct Record {
  EntityKind kind = EntityKind::lesson;
  std::string id;
  nlohmann::json body;
  std::uint64_t version = 0;
  // Blobs this record keeps alive.
  std::vector<BlobRef> blobs;
};

// expected_version is the version the writer last read: 0 creates the record.
struct RecordWrite {
  EntityKind kind = EntityKind::lesson;
  std::string id;
  std::uint64_t expected_version = 0;
  nlohmann::json body;
  std::vector<BlobRef> blobs;
};

struct CommitReceipt {
  std::uint64_t sequence = 0;
  std::vector<std::uint64_t> versions;
};

struct StoreOptions {
  std::filesystem::path root;
  // Unreferenced blobs younger than this survive gc.
  std::chrono::milliseconds gc_window = std::chrono::hours(1);
  const Clock* clock = &system_clock();
  // fsync blobs, the log and directories before acknowledging.
  bool durable = true;
  std::optional<std::uint64_t> capacity_bytes;
  std::size_t checkpoint_every = 4096;
  // Invoked at named internal steps; tests use it to kill the process mid-write.
  std::function<void(std::string_view step)> fault_hook;
};

class Store;

// Pins a blob against gc and orphan release while alive.
class BlobLease {
 public:
  BlobLease() = default;
  BlobLease(BlobLease&& other) noexcept;
  BlobLease& operator=(BlobLease&& other) noexcept;
  BlobLease(const BlobLease&) = delete;
  BlobLease& operator=(const BlobLease&) = delete;
  ~BlobLease();

 private:
  friend class Store;
  BlobLease(Store* store, std::string hash) : store_(store), hash_(std::move(hash)) {}
  void reset() noexcept;

  Store* store_ = nullptr;
  std::string hash_;
};

struct StoreStats {
  std::size_t blob_count = 0;
  std::uint64_t blob_bytes = 0;
  std::size_t record_count = 0;
  std::uint64_t log_bytes = 0;
};

// Single-node persistence rooted at one directory:
//   blobs/<hh>/<hash>       content, named by its SHA-256
//   blobs/<hh>/<hash>.type  media type sidecar
//   meta/snapshot.json      checkpointed records
//   meta/wal.log            committed batches since the snapshot
// Opening takes an exclusive lock on the directory and replays the log,
// discarding a torn tail.
class Store {
 public:
  explicit Store(StoreOptions options);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Durable before return. Throws empty-content, storage-full, io-error.
  BlobRef put_blob(std::string_view content, MediaType media_type);
  BlobLease lease(const std::string& hash);

  bool has_blob(std::string_view hash) const;
  std::optional<std::string> read_blob(std::string_view hash) const;
  std::optional<MediaType> blob_media_type(std::string_view hash) const;

  // All writes become visible together or not at all. Throws version-conflict,
  // missing-blob, storage-full, io-error.
  CommitReceipt commit(std::vector<RecordWrite> writes);

  std::optional<Record> get(EntityKind kind, std::string_view id) const;
  bool contains(EntityKind kind, std::string_view id) const;
  std::vector<Record> scan(EntityKind kind) const;
  // Visits records of one kind in id order under a consistent read snapshot.
  void for_each(EntityKind kind, const std::function<void(const Record&)>& visit) const;

  // Deletes blobs no committed record references that are older than the
  // gc window and not leased. Returns the number removed.
  std::size_t gc_orphans();
  // Eagerly deletes the given blobs when unreferenced and unleased,
  // regardless of age. Returns the number removed.
  std::size_t release_unreferenced(const std::vector<BlobRef>& blobs);

  // Folds the log into a fresh snapshot.
  void checkpoint();

  StoreStats stats() const;
  std::vector<std::string> blob_hashes() const;
  const std::filesystem::path& root() const noexcept { return options_.root; }

 private:
  friend class BlobLease;

  using Table = std::map<std::string, Record, std::less<>>;

  void recover();
  void replay_log();
  void apply(const std::vector<RecordWrite>& writes, std::vector<std::uint64_t>& versions);
  void append_log(const std::string& line);
  void write_snapshot();
  void hook(std::string_view step) const;
  void unpin(const std::string& hash) noexcept;
  bool removable(const std::string& hash) const;
  std::size_t remove_blob(const std::string& hash);
  std::filesystem::path blob_path(std::string_view hash) const;

  StoreOptions options_;
  int lock_fd_ = -1;
  int log_fd_ = -1;

  mutable std::shared_mutex state_mu_;
  std::array<Table, kEntityKindCount> tables_;
  std::unordered_map<std::string, std::size_t> refcounts_;

  std::mutex commit_mu_;
  std::uint64_t sequence_ = 0;
  std::uint64_t snapshot_sequence_ = 0;
  std::size_t log_entries_ = 0;
  std::atomic<std::uint64_t> log_bytes_{0};

  mutable std::mutex pin_mu_;
  std::unordered_map<std::string, std::size_t> pins_;

  std::atomic<std::uint64_t> blob_bytes_{0};
  std::atomic<std::uint64_t> tmp_counter_{0};
};

}  // namespace pausepoint
