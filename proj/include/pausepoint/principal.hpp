#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace pausepoint {

enum class Role { teacher, student };

std::string_view to_string(Role role) noexcept;
std::optional<Role> role_from_string(std::string_view text) noexcept;

struct Principal {
  std::string user_id;
  Role role = Role::student;
  std::string display_name;
  friend bool operator==(const Principal&, const Principal&) = default;
};

}  // namespace pausepoint
