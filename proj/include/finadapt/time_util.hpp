#pragma once

#include <cstdint>
#include <string>

namespace finadapt {

// UTC timestamps are carried as seconds since the Unix epoch. Article files
// use ISO-8601 "YYYY-MM-DDTHH:MM:SSZ"; parsing is locale- and tz-independent.
int64_t parse_timestamp(const std::string& iso);
std::string format_timestamp(int64_t epoch_seconds);

} // namespace finadapt
