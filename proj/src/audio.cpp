#include "pausepoint/audio.hpp"

#include <algorithm>
#include <cstring>

#include "pausepoint/error.hpp"

namespace pausepoint {
namespace {

std::uint32_t read_u32(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t read_u16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

bool is_supported_rate(int sample_rate_hz) noexcept {
  return std::find(std::begin(kSupportedSampleRates), std::end(kSupportedSampleRates), sample_rate_hz) !=
         std::end(kSupportedSampleRates);
}

std::int64_t AudioTrack::duration_ms() const noexcept {
  if (sample_rate_hz <= 0) return 0;
  return static_cast<std::int64_t>(samples.size()) * 1000 / sample_rate_hz;
}

AudioTrack parse_wav(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    throw Error(Errc::malformed_artifact, "audio is not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  int rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto id = bytes.substr(pos, 4);
    const std::uint64_t len = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) throw Error(Errc::malformed_artifact, "wav chunk overruns file");
    if (id == "fmt ") {
      if (len < 16) throw Error(Errc::malformed_artifact, "wav fmt chunk too short");
      const auto format = read_u16(bytes, body);
      const auto channels = read_u16(bytes, body + 2);
      rate = static_cast<int>(read_u32(bytes, body + 4));
      const auto bits = read_u16(bytes, body + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw Error(Errc::malformed_artifact, "wav must be 16-bit mono PCM");
      }
      if (!is_supported_rate(rate)) {
        throw Error(Errc::unsupported_rate, "sample rate " + std::to_string(rate) + " Hz not supported");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw Error(Errc::malformed_artifact, "wav data before fmt");
      if (len % 2 != 0) throw Error(Errc::malformed_artifact, "wav data has a partial sample");
      AudioTrack track;
      track.sample_rate_hz = rate;
      track.samples.resize(len / 2);
      for (std::size_t i = 0; i < track.samples.size(); ++i) {
        track.samples[i] = static_cast<std::int16_t>(read_u16(bytes, body + 2 * i));
      }
      return track;
    }
    pos = body + len + (len & 1);
  }
  throw Error(Errc::malformed_artifact, "wav has no data chunk");
}

std::string encode_wav(const AudioTrack& track) {
  const auto data_bytes = static_cast<std::uint32_t>(track.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(track.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(track.sample_rate_hz * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (auto s : track.samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

}  // namespace pausepoint
