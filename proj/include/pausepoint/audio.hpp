#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pausepoint {

inline constexpr int kSupportedSampleRates[] = {8000, 16000, 44100, 48000};

bool is_supported_rate(int sample_rate_hz) noexcept;

// Signed 16-bit mono linear PCM.
struct AudioTrack {
  std::vector<std::int16_t> samples;
  int sample_rate_hz = 16000;

  std::int64_t duration_ms() const noexcept;
  friend bool operator==(const AudioTrack&, const AudioTrack&) = default;
};

// RIFF/WAVE, PCM format 1, 16 bits, one channel. Throws malformed-artifact
// for anything else and unsupported-rate for a rate outside the allowed set.
AudioTrack parse_wav(std::string_view bytes);
std::string encode_wav(const AudioTrack& track);

}  // namespace pausepoint
