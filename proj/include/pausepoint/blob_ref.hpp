#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace pausepoint {

enum class MediaType { ink_json, wav, video, png, jpeg };

std::string_view to_string(MediaType type) noexcept;
std::optional<MediaType> media_type_from_string(std::string_view name) noexcept;
// MIME type served for artifact fetches.
std::string_view mime_type(MediaType type) noexcept;
bool is_image(MediaType type) noexcept;

// Detects PNG or JPEG by magic bytes.
std::optional<MediaType> sniff_image(std::string_view bytes) noexcept;

// Lowercase hex SHA-256 of the content.
std::string content_hash(std::string_view bytes);

struct BlobRef {
  std::string hash;
  MediaType media_type = MediaType::video;

  friend bool operator==(const BlobRef&, const BlobRef&) = default;
  friend auto operator<=>(const BlobRef&, const BlobRef&) = default;
};

bool is_valid_hash(std::string_view hash) noexcept;

void to_json(nlohmann::json& j, const BlobRef& ref);
void from_json(const nlohmann::json& j, BlobRef& ref);

}  // namespace pausepoint
