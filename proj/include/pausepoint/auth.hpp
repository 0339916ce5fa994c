#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pausepoint/principal.hpp"

namespace pausepoint {

// Bearer-token table. The token file holds one principal per line:
//   <token> TAB <user_id> TAB <teacher|student> TAB <display name>
// Blank lines and lines starting with '#' are skipped.
class TokenAuthenticator {
 public:
  TokenAuthenticator() = default;

  // Throws bad-config on unreadable files or malformed lines.
  static TokenAuthenticator from_file(const std::filesystem::path& path);
  static TokenAuthenticator parse(std::string_view text);

  // Throws bad-config on an empty token, duplicate token or empty name.
  void add(const std::string& token, Principal principal);
  std::optional<Principal> authenticate(std::string_view token) const;
  std::vector<Principal> principals() const;

 private:
  std::map<std::string, Principal, std::less<>> by_token_;
};

}  // namespace pausepoint
