#include "pausepoint/clock.hpp"

#include <charconv>
#include <cstdio>

namespace pausepoint {

namespace chr = std::chrono;

std::string format_utc(Timestamp t) {
  const auto days = chr::floor<chr::days>(t);
  const chr::year_month_day ymd{days};
  const chr::hh_mm_ss hms{t - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()), static_cast<int>(hms.subseconds().count()));
  return buf;
}

std::optional<Timestamp> parse_utc(std::string_view text) {
  // Fixed layout only; this is the form format_utc produces.
  if (text.size() != 24 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':' || text[19] != '.' || text[23] != 'Z') {
    return std::nullopt;
  }
  auto field = [&](std::size_t pos, std::size_t len, int& out) {
    auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc{} && p == text.data() + pos + len;
  };
  int y, mo, d, h, mi, s, ms;
  if (!field(0, 4, y) || !field(5, 2, mo) || !field(8, 2, d) || !field(11, 2, h) || !field(14, 2, mi) ||
      !field(17, 2, s) || !field(20, 3, ms)) {
    return std::nullopt;
  }
  const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                                chr::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
  return Timestamp{chr::sys_days{ymd}} + chr::hours{h} + chr::minutes{mi} + chr::seconds{s} +
         chr::milliseconds{ms};
}

Timestamp SystemClock::now() const { return chr::floor<chr::milliseconds>(chr::system_clock::now()); }

const Clock& system_clock() {
  static const SystemClock clock;
  return clock;
}

}  // namespace pausepoint
