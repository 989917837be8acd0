#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

namespace storyloom {

using Instant = std::chrono::sys_time<std::chrono::milliseconds>;

// Time source, injected so replays are reproducible.
using Clock = std::function<Instant()>;

Clock system_clock();

// Returns `start`, then `start + step`, `start + 2*step`, ...
Clock stepping_clock(Instant start, std::chrono::milliseconds step = std::chrono::seconds(1));

// `YYYY-MM-DDTHH:MM:SS.mmmZ`
std::string format_instant(Instant t);

// Accepts `YYYY-MM-DDTHH:MM:SS[.fff]Z` (fraction optional, 1-3 digits).
// Throws ParseError on anything else.
Instant parse_instant(std::string_view text);

using IdGenerator = std::function<std::string()>;

// 32 lowercase hex chars from a random_device-seeded engine. Thread-safe.
IdGenerator random_id_generator();

// `prefix-1`, `prefix-2`, ...
IdGenerator sequential_id_generator(std::string prefix);

}  // namespace storyloom
