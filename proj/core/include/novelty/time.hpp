#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace novelty {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS" (a space may replace the "T")
// optionally followed by "Z" or
// a "+HH:MM"/"-HH:MM" offset. Throws ValidationError on anything else.
Timestamp parse_timestamp(std::string_view text);

// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);

}  // namespace novelty
