#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>

namespace pausepoint {

class Store;

// Monotonic identifiers of the form <prefix><8+ digits>, e.g. "R00000042".
// Zero padding keeps lexicographic order equal to assignment order.
class IdSequence {
 public:
  IdSequence(char prefix, std::uint64_t last_issued = 0) : prefix_(prefix), next_(last_issued + 1) {}

  std::string next();
  char prefix() const noexcept { return prefix_; }

  static std::string format(char prefix, std::uint64_t n);
  // Numeric part of an id with the given prefix, or 0 if it does not match.
  static std::uint64_t parse(char prefix, std::string_view id) noexcept;

 private:
  char prefix_;
  std::atomic<std::uint64_t> next_;
};

// Random 128-bit hex token.
std::string random_token();

}  // namespace pausepoint
