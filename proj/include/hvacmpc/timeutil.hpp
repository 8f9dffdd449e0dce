#ifndef HVACMPC_TIMEUTIL_HPP
#define HVACMPC_TIMEUTIL_HPP

#include <cstdint>
#include <string>

namespace hvacmpc {

/// Parses "YYYY-MM-DDThh:mm:ssZ" to unix seconds. Throws Error(ingestion) on
/// malformed input.
std::int64_t parse_iso8601_utc(const std::string& s);

/// Formats unix seconds as "YYYY-MM-DDThh:mm:ssZ".
std::string format_iso8601_utc(std::int64_t epoch_s);

/// Seconds since local midnight of the same UTC day.
inline std::int64_t seconds_of_day(std::int64_t epoch_s) {
    std::int64_t r = epoch_s % 86400;
    return r < 0 ? r + 86400 : r;
}

} // namespace hvacmpc

#endif
