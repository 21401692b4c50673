#pragma once

#include <cstdint>
#include <string>

namespace lmpgan {

inline constexpr std::int64_t kHourSeconds = 3600;

// Parses "YYYY-MM-DDTHH:MM:SSZ" (UTC). Throws DataError on malformed input
// or when the time is not aligned to a whole hour.
std::int64_t parse_iso8601_utc_hour(const std::string& text);

std::string format_iso8601_utc(std::int64_t unix_seconds);

int hour_of_day_utc(std::int64_t unix_seconds);
int day_of_week_utc(std::int64_t unix_seconds);  // 0 = Monday ... 6 = Sunday

}  // namespace lmpgan
