#include "pausepoint/blob_ref.hpp"

#include <array>
#include <memory>

#include <openssl/evp.h>

#include "pausepoint/error.hpp"

namespace pausepoint {

std::string_view to_string(MediaType type) noexcept {
  switch (type) {
    case MediaType::ink_json: return "ink-json";
    case MediaType::wav: return "wav";
    case MediaType::video: return "video";
    case MediaType::png: return "png";
    case MediaType::jpeg: return "jpeg";
  }
  return "video";
}

std::optional<MediaType> media_type_from_string(std::string_view name) noexcept {
  for (auto t : {MediaType::ink_json, MediaType::wav, MediaType::video, MediaType::png, MediaType::jpeg}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::string_view mime_type(MediaType type) noexcept {
  switch (type) {
    case MediaType::ink_json: return "application/json";
    case MediaType::wav: return "audio/wav";
    case MediaType::video: return "application/octet-stream";
    case MediaType::png: return "image/png";
    case MediaType::jpeg: return "image/jpeg";
  }
  return "application/octet-stream";
}

bool is_image(MediaType type) noexcept { return type == MediaType::png || type == MediaType::jpeg; }

std::optional<MediaType> sniff_image(std::string_view bytes) noexcept {
  static constexpr std::string_view kPng{"\x89PNG\r\n\x1a\n", 8};
  if (bytes.substr(0, kPng.size()) == kPng) return MediaType::png;
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
      static_cast<unsigned char>(bytes[1]) == 0xD8 && static_cast<unsigned char>(bytes[2]) == 0xFF) {
    return MediaType::jpeg;
  }
  return std::nullopt;
}

std::string content_hash(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw Error(Errc::io_error, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

bool is_valid_hash(std::string_view hash) noexcept {
  if (hash.size() != 64) return false;
  for (char c : hash) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

void to_json(nlohmann::json& j, const BlobRef& ref) {
  j = nlohmann::json{{"hash", ref.hash}, {"type", to_string(ref.media_type)}};
}

void from_json(const nlohmann::json& j, BlobRef& ref) {
  ref.hash = j.at("hash").get<std::string>();
  auto type = media_type_from_string(j.at("type").get<std::string>());
  if (!type || !is_valid_hash(ref.hash)) throw Error(Errc::bad_request, "invalid blob reference");
  ref.media_type = *type;
}

}  // namespace pausepoint
