#include "pausepoint/ids.hpp"

#include <charconv>
#include <cstdio>
#include <random>

#include "pausepoint/principal.hpp"

namespace pausepoint {

std::string IdSequence::next() { return format(prefix_, next_.fetch_add(1)); }

std::string IdSequence::format(char prefix, std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%08llu", prefix, static_cast<unsigned long long>(n));
  return buf;
}

std::uint64_t IdSequence::parse(char prefix, std::string_view id) noexcept {
  if (id.size() < 2 || id.front() != prefix) return 0;
  std::uint64_t n = 0;
  auto [p, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), n);
  if (ec != std::errc{} || p != id.data() + id.size()) return 0;
  return n;
}

std::string random_token() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

std::string_view to_string(Role role) noexcept { return role == Role::teacher ? "teacher" : "student"; }

std::optional<Role> role_from_string(std::string_view text) noexcept {
  if (text == "teacher") return Role::teacher;
  if (text == "student") return Role::student;
  return std::nullopt;
}

}  // namespace pausepoint
