#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "pausepoint/auth.hpp"
#include "pausepoint/error.hpp"

namespace pausepoint {

class Platform;

// Per-part upload caps for response submissions.
inline constexpr std::size_t kInkPartCap = 5u << 20;
inline constexpr std::size_t kAudioPartCap = 50u << 20;
inline constexpr std::size_t kVideoPartCap = 200u << 20;
inline constexpr std::size_t kPosterPartCap = 2u << 20;
inline constexpr std::size_t kMetadataPartCap = 64u << 10;

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::size_t worker_threads = 8;
  // Upload bodies admitted concurrently; further uploads get busy (503).
  std::size_t max_inflight_upload_bytes = 512u << 20;
};

// Transport status for an error code.
int http_status(Errc code) noexcept;

// HTTP front end over a Platform. Every request authenticates with
// "Authorization: Bearer <token>"; errors are {"code", "detail"} bodies.
class Service {
 public:
  Service(Platform& platform, TokenAuthenticator auth, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the listening socket and returns the port. Throws port-in-use.
  int bind();
  // Serves until stop(); binds first if needed.
  void run();
  // run() on a background thread; returns the bound port.
  int start();
  void stop();
  int port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = -1;
};

}  // namespace pausepoint
