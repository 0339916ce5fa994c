#include "pausepoint/store.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include "pausepoint/error.hpp"

namespace pausepoint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kEntityKindCount> kKindNames{
    "lesson", "exercise", "session", "response", "annotation", "review-state", "index"};

[[noreturn]] void throw_errno(const std::string& what, int err) {
  if (err == ENOSPC || err == EDQUOT) throw Error(Errc::storage_full, what + ": " + std::strerror(err));
  throw Error(Errc::io_error, what + ": " + std::strerror(err));
}

void write_all(int fd, std::string_view data, const std::string& what) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno(what, errno);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

void sync_dir(const fs::path& dir) {
  Fd fd(::open(dir.c_str(), O_RDONLY | O_DIRECTORY));
  if (fd.get() >= 0) ::fsync(fd.get());
}

// Writes a whole file through a temporary sibling and renames it into place.
void write_file_atomic(const fs::path& path, std::string_view content, bool durable, const std::string& tmp_suffix) {
  const fs::path tmp = path.string() + ".tmp" + tmp_suffix;
  {
    Fd fd(::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
    if (fd.get() < 0) throw_errno("create " + tmp.string(), errno);
    try {
      write_all(fd.get(), content, "write " + tmp.string());
      if (durable && ::fsync(fd.get()) != 0) throw_errno("fsync " + tmp.string(), errno);
    } catch (...) {
      ::unlink(tmp.c_str());
      throw;
    }
  }
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    const int err = errno;
    ::unlink(tmp.c_str());
    throw_errno("rename " + tmp.string(), err);
  }
}

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

std::string crc_hex(std::string_view data) {
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

json write_to_json(const RecordWrite& w, std::uint64_t version) {
  return json{{"kind", to_string(w.kind)}, {"id", w.id}, {"version", version}, {"body", w.body}, {"blobs", w.blobs}};
}

Record record_from_json(const json& j) {
  Record r;
  auto kind = entity_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw Error(Errc::io_error, "unknown record kind in metadata log");
  r.kind = *kind;
  r.id = j.at("id").get<std::string>();
  r.version = j.at("version").get<std::uint64_t>();
  r.body = j.at("body");
  r.blobs = j.at("blobs").get<std::vector<BlobRef>>();
  return r;
}

bool is_blob_file_name(const std::string& name) { return is_valid_hash(name); }

}  // namespace

std::string_view to_string(EntityKind kind) noexcept { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<EntityKind> entity_kind_from_string(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<EntityKind>(i);
  }
  return std::nullopt;
}

BlobLease::BlobLease(BlobLease&& other) noexcept : store_(other.store_), hash_(std::move(other.hash_)) {
  other.store_ = nullptr;
}

BlobLease& BlobLease::operator=(BlobLease&& other) noexcept {
  if (this != &other) {
    reset();
    store_ = other.store_;
    hash_ = std::move(other.hash_);
    other.store_ = nullptr;
  }
  return *this;
}

BlobLease::~BlobLease() { reset(); }

void BlobLease::reset() noexcept {
  if (store_) store_->unpin(hash_);
  store_ = nullptr;
}

Store::Store(StoreOptions options) : options_(std::move(options)) {
  if (options_.root.empty()) throw Error(Errc::bad_config, "store root is empty");
  std::error_code ec;
  fs::create_directories(options_.root / "blobs" / "tmp", ec);
  fs::create_directories(options_.root / "meta", ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + options_.root.string() + ": " + ec.message());

  const fs::path lock_path = options_.root / "LOCK";
  lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) throw_errno("open " + lock_path.string(), errno);
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    throw Error(Errc::io_error, "data directory " + options_.root.string() + " is in use by another process");
  }
  try {
    recover();
  } catch (...) {
    if (log_fd_ >= 0) ::close(log_fd_);
    ::close(lock_fd_);
    throw;
  }
}

Store::~Store() {
  try {
    if (log_entries_ > 0) checkpoint();
  } catch (...) {
    // The log still holds everything; the next open replays it.
  }
  if (log_fd_ >= 0) ::close(log_fd_);
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

void Store::hook(std::string_view step) const {
  if (options_.fault_hook) options_.fault_hook(step);
}

fs::path Store::blob_path(std::string_view hash) const {
  return options_.root / "blobs" / std::string(hash.substr(0, 2)) / std::string(hash);
}

void Store::recover() {
  for (const auto& entry : fs::directory_iterator(options_.root / "blobs" / "tmp")) fs::remove(entry.path());

  std::uint64_t bytes = 0;
  for (const auto& dir : fs::directory_iterator(options_.root / "blobs")) {
    if (!dir.is_directory() || dir.path().filename() == "tmp") continue;
    for (const auto& f : fs::directory_iterator(dir.path())) {
      const auto name = f.path().filename().string();
      if (is_blob_file_name(name)) {
        bytes += f.file_size();
      } else if (name.find(".tmp") != std::string::npos) {
        fs::remove(f.path());
      }
    }
  }
  blob_bytes_ = bytes;

  if (auto snap = read_file(options_.root / "meta" / "snapshot.json")) {
    const json doc = json::parse(*snap, nullptr, false);
    if (doc.is_discarded()) throw Error(Errc::io_error, "snapshot is corrupt");
    snapshot_sequence_ = sequence_ = doc.at("sequence").get<std::uint64_t>();
    for (const auto& r : doc.at("records")) {
      Record rec = record_from_json(r);
      tables_[static_cast<std::size_t>(rec.kind)].insert_or_assign(rec.id, std::move(rec));
    }
  }
  replay_log();
  for (const auto& table : tables_) {
    for (const auto& [id, rec] : table) {
      for (const auto& b : rec.blobs) ++refcounts_[b.hash];
    }
  }
}

void Store::replay_log() {
  const fs::path path = options_.root / "meta" / "wal.log";
  log_fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (log_fd_ < 0) throw_errno("open " + path.string(), errno);
  const std::string log = read_file(path).value_or(std::string{});

  std::size_t good = 0;
  std::size_t pos = 0;
  while (pos < log.size()) {
    const auto nl = log.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string_view line(log.data() + pos, nl - pos);
    if (line.size() < 10 || line[8] != ' ') break;
    const auto payload = line.substr(9);
    if (crc_hex(payload) != line.substr(0, 8)) break;
    const json entry = json::parse(payload, nullptr, false);
    if (entry.is_discarded()) break;
    const auto seq = entry.at("sequence").get<std::uint64_t>();
    if (seq > sequence_) {
      if (seq != sequence_ + 1) break;
      for (const auto& w : entry.at("writes")) {
        Record rec = record_from_json(w);
        tables_[static_cast<std::size_t>(rec.kind)].insert_or_assign(rec.id, std::move(rec));
      }
      sequence_ = seq;
      ++log_entries_;
    }
    pos = nl + 1;
    good = pos;
  }
  if (good != log.size()) {
    // Torn or corrupt tail from an interrupted commit: never acknowledged, drop it.
    if (::ftruncate(log_fd_, static_cast<off_t>(good)) != 0) throw_errno("truncate " + path.string(), errno);
    if (options_.durable) ::fsync(log_fd_);
  }
  log_bytes_ = good;
}

BlobRef Store::put_blob(std::string_view content, MediaType media_type) {
  if (content.empty()) throw Error(Errc::empty_content, "blob content is empty");
  BlobRef ref{content_hash(content), media_type};
  const fs::path final_path = blob_path(ref.hash);
  const fs::path dir = final_path.parent_path();
  const fs::path type_path = final_path.string() + ".type";

  if (::access(final_path.c_str(), F_OK) == 0) {
    // Dedup hit: refresh the age so a pending commit stays inside the gc window.
    ::utimensat(AT_FDCWD, final_path.c_str(), nullptr, 0);
    if (::access(type_path.c_str(), F_OK) != 0) {
      write_file_atomic(type_path, to_string(media_type), options_.durable, std::to_string(tmp_counter_++));
    }
    return ref;
  }
  if (options_.capacity_bytes && blob_bytes_.load() + content.size() > *options_.capacity_bytes) {
    throw Error(Errc::storage_full, "blob store capacity exhausted");
  }

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());

  const fs::path tmp = options_.root / "blobs" / "tmp" /
                       (ref.hash + "." + std::to_string(::getpid()) + "." + std::to_string(tmp_counter_++));
  {
    Fd fd(::open(tmp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644));
    if (fd.get() < 0) throw_errno("create " + tmp.string(), errno);
    try {
      write_all(fd.get(), content, "write blob");
      if (options_.durable && ::fsync(fd.get()) != 0) throw_errno("fsync blob", errno);
    } catch (...) {
      ::unlink(tmp.c_str());
      throw;
    }
  }
  hook("blob.tmp-written");
  try {
    write_file_atomic(type_path, to_string(media_type), options_.durable, std::to_string(tmp_counter_++));
  } catch (...) {
    ::unlink(tmp.c_str());
    throw;
  }
  // link() refuses to overwrite, so exactly one racing writer adds the bytes.
  if (::link(tmp.c_str(), final_path.c_str()) == 0) {
    blob_bytes_ += content.size();
  } else if (errno != EEXIST) {
    const int err = errno;
    ::unlink(tmp.c_str());
    throw_errno("link blob", err);
  }
  ::unlink(tmp.c_str());
  if (options_.durable) sync_dir(dir);
  hook("blob.linked");
  return ref;
}

BlobLease Store::lease(const std::string& hash) {
  std::lock_guard lock(pin_mu_);
  ++pins_[hash];
  return BlobLease(this, hash);
}

void Store::unpin(const std::string& hash) noexcept {
  std::lock_guard lock(pin_mu_);
  auto it = pins_.find(hash);
  if (it != pins_.end() && --it->second == 0) pins_.erase(it);
}

bool Store::has_blob(std::string_view hash) const {
  return is_valid_hash(hash) && ::access(blob_path(hash).c_str(), F_OK) == 0;
}

std::optional<std::string> Store::read_blob(std::string_view hash) const {
  if (!is_valid_hash(hash)) return std::nullopt;
  return read_file(blob_path(hash));
}

std::optional<MediaType> Store::blob_media_type(std::string_view hash) const {
  if (!has_blob(hash)) return std::nullopt;
  auto text = read_file(blob_path(hash).string() + ".type");
  if (!text) return std::nullopt;
  return media_type_from_string(*text);
}

void Store::append_log(const std::string& payload) {
  const std::string line = crc_hex(payload) + " " + payload + "\n";
  try {
    if (options_.fault_hook) {
      const std::size_t half = line.size() / 2;
      write_all(log_fd_, std::string_view(line).substr(0, half), "append log");
      hook("wal.partial");
      write_all(log_fd_, std::string_view(line).substr(half), "append log");
    } else {
      write_all(log_fd_, line, "append log");
    }
    if (options_.durable && ::fdatasync(log_fd_) != 0) throw_errno("fsync log", errno);
  } catch (...) {
    // Roll the file back so a failed append cannot leave a torn line mid-log.
    if (::ftruncate(log_fd_, static_cast<off_t>(log_bytes_.load())) != 0) {
      // Recovery drops the torn tail anyway.
    }
    throw;
  }
  log_bytes_ += line.size();
  ++log_entries_;
  hook("wal.synced");
}

CommitReceipt Store::commit(std::vector<RecordWrite> writes) {
  std::unique_lock commit_lock(commit_mu_);
  hook("commit.begin");
  {
    std::shared_lock read(state_mu_);
    std::set<std::pair<EntityKind, std::string>> seen;
    for (const auto& w : writes) {
      if (!seen.emplace(w.kind, w.id).second) {
        throw Error(Errc::bad_request, "record " + std::string(to_string(w.kind)) + "/" + w.id + " written twice");
      }
      const auto& table = tables_[static_cast<std::size_t>(w.kind)];
      auto it = table.find(w.id);
      const std::uint64_t current = it == table.end() ? 0 : it->second.version;
      if (current != w.expected_version) {
        throw Error(Errc::version_conflict, std::string(to_string(w.kind)) + "/" + w.id + " is at version " +
                                                std::to_string(current) + ", expected " +
                                                std::to_string(w.expected_version));
      }
    }
  }
  for (const auto& w : writes) {
    for (const auto& b : w.blobs) {
      if (!has_blob(b.hash)) throw Error(Errc::missing_blob, "blob " + b.hash + " is not stored");
    }
  }

  json entry{{"sequence", sequence_ + 1}, {"writes", json::array()}};
  for (const auto& w : writes) entry["writes"].push_back(write_to_json(w, w.expected_version + 1));
  append_log(entry.dump());
  ++sequence_;

  CommitReceipt receipt{sequence_, {}};
  apply(writes, receipt.versions);
  hook("commit.applied");

  if (log_entries_ >= options_.checkpoint_every) {
    commit_lock.unlock();
    try {
      checkpoint();
    } catch (const Error&) {
      // The commit is durable in the log; compaction retries next time.
    }
  }
  return receipt;
}

void Store::apply(const std::vector<RecordWrite>& writes, std::vector<std::uint64_t>& versions) {
  std::unique_lock lock(state_mu_);
  for (const auto& w : writes) {
    auto& table = tables_[static_cast<std::size_t>(w.kind)];
    auto it = table.find(w.id);
    if (it != table.end()) {
      for (const auto& b : it->second.blobs) {
        if (--refcounts_[b.hash] == 0) refcounts_.erase(b.hash);
      }
    }
    Record rec{w.kind, w.id, w.body, w.expected_version + 1, w.blobs};
    for (const auto& b : rec.blobs) ++refcounts_[b.hash];
    versions.push_back(rec.version);
    table.insert_or_assign(w.id, std::move(rec));
  }
}

std::optional<Record> Store::get(EntityKind kind, std::string_view id) const {
  std::shared_lock lock(state_mu_);
  const auto& table = tables_[static_cast<std::size_t>(kind)];
  auto it = table.find(id);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

bool Store::contains(EntityKind kind, std::string_view id) const {
  std::shared_lock lock(state_mu_);
  const auto& table = tables_[static_cast<std::size_t>(kind)];
  return table.find(id) != table.end();
}

std::vector<Record> Store::scan(EntityKind kind) const {
  std::shared_lock lock(state_mu_);
  std::vector<Record> out;
  for (const auto& [id, rec] : tables_[static_cast<std::size_t>(kind)]) out.push_back(rec);
  return out;
}

void Store::for_each(EntityKind kind, const std::function<void(const Record&)>& visit) const {
  std::shared_lock lock(state_mu_);
  for (const auto& [id, rec] : tables_[static_cast<std::size_t>(kind)]) visit(rec);
}

bool Store::removable(const std::string& hash) const {
  {
    std::shared_lock lock(state_mu_);
    if (refcounts_.count(hash) != 0) return false;
  }
  std::lock_guard lock(pin_mu_);
  return pins_.count(hash) == 0;
}

std::size_t Store::remove_blob(const std::string& hash) {
  const fs::path path = blob_path(hash);
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) return 0;
  if (::unlink(path.c_str()) != 0) return 0;
  ::unlink((path.string() + ".type").c_str());
  blob_bytes_ -= size;
  return 1;
}

std::size_t Store::gc_orphans() {
  const auto now = options_.clock->now();
  std::size_t removed = 0;
  for (const auto& hash : blob_hashes()) {
    // Holding the commit lock keeps any commit from referencing the blob mid-delete.
    std::lock_guard commit_lock(commit_mu_);
    if (!removable(hash)) continue;
    struct stat st {};
    if (::stat(blob_path(hash).c_str(), &st) != 0) continue;
    const Timestamp mtime{std::chrono::milliseconds(static_cast<std::int64_t>(st.st_mtim.tv_sec) * 1000 +
                                                    st.st_mtim.tv_nsec / 1000000)};
    if (now - mtime < options_.gc_window) continue;
    removed += remove_blob(hash);
  }
  return removed;
}

std::size_t Store::release_unreferenced(const std::vector<BlobRef>& blobs) {
  std::size_t removed = 0;
  for (const auto& b : blobs) {
    std::lock_guard commit_lock(commit_mu_);
    if (removable(b.hash)) removed += remove_blob(b.hash);
  }
  return removed;
}

void Store::write_snapshot() {
  json doc{{"sequence", sequence_}, {"records", json::array()}};
  {
    std::shared_lock lock(state_mu_);
    for (const auto& table : tables_) {
      for (const auto& [id, rec] : table) {
        doc["records"].push_back(json{{"kind", to_string(rec.kind)},
                                      {"id", rec.id},
                                      {"version", rec.version},
                                      {"body", rec.body},
                                      {"blobs", rec.blobs}});
      }
    }
  }
  write_file_atomic(options_.root / "meta" / "snapshot.json", doc.dump(), options_.durable, "");
  if (options_.durable) sync_dir(options_.root / "meta");
  hook("snapshot.written");
}

void Store::checkpoint() {
  std::lock_guard commit_lock(commit_mu_);
  write_snapshot();
  snapshot_sequence_ = sequence_;
  // Entries up to the snapshot sequence are skipped on replay, so a crash
  // before this truncate is harmless.
  if (::ftruncate(log_fd_, 0) != 0) throw_errno("truncate log", errno);
  if (options_.durable) ::fsync(log_fd_);
  log_bytes_ = 0;
  log_entries_ = 0;
}

std::vector<std::string> Store::blob_hashes() const {
  std::vector<std::string> out;
  for (const auto& dir : fs::directory_iterator(options_.root / "blobs")) {
    if (!dir.is_directory() || dir.path().filename() == "tmp") continue;
    for (const auto& f : fs::directory_iterator(dir.path())) {
      auto name = f.path().filename().string();
      if (is_blob_file_name(name)) out.push_back(std::move(name));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

StoreStats Store::stats() const {
  StoreStats s;
  s.blob_count = blob_hashes().size();
  s.blob_bytes = blob_bytes_.load();
  {
    std::shared_lock lock(state_mu_);
    for (const auto& t : tables_) s.record_count += t.size();
  }
  s.log_bytes = log_bytes_;
  return s;
}

}  // namespace pausepoint
