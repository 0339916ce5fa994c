#include "pausepoint/auth.hpp"

#include <fstream>
#include <sstream>

#include "pausepoint/error.hpp"

namespace pausepoint {

TokenAuthenticator TokenAuthenticator::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::bad_config, "cannot read token file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

TokenAuthenticator TokenAuthenticator::parse(std::string_view text) {
  TokenAuthenticator auth;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
      const auto tab = line.find('\t', start);
      if (tab == std::string::npos) break;
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    fields.push_back(line.substr(start));
    if (fields.size() != 4) {
      throw Error(Errc::bad_config, "token file line " + std::to_string(lineno) + ": expected 4 tab-separated fields");
    }
    const auto role = role_from_string(fields[2]);
    if (!role) throw Error(Errc::bad_config, "token file line " + std::to_string(lineno) + ": unknown role " + fields[2]);
    auth.add(fields[0], Principal{fields[1], *role, fields[3]});
  }
  return auth;
}

void TokenAuthenticator::add(const std::string& token, Principal principal) {
  if (token.empty() || principal.user_id.empty()) throw Error(Errc::bad_config, "empty token or user id");
  if (principal.display_name.empty()) throw Error(Errc::bad_config, "empty display name for " + principal.user_id);
  if (!by_token_.emplace(token, std::move(principal)).second) throw Error(Errc::bad_config, "duplicate token");
}

std::optional<Principal> TokenAuthenticator::authenticate(std::string_view token) const {
  if (auto it = by_token_.find(token); it != by_token_.end()) return it->second;
  return std::nullopt;
}

std::vector<Principal> TokenAuthenticator::principals() const {
  std::vector<Principal> out;
  for (const auto& [token, p] : by_token_) out.push_back(p);
  return out;
}

}  // namespace pausepoint
