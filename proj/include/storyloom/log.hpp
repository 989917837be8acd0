#pragma once

#include <functional>
#include <string_view>

namespace storyloom {

enum class LogLevel { Debug, Info, Warning, Error };

using LogSink = std::function<void(LogLevel, std::string_view)>;

// Replaces the process-wide sink (default: stderr). Returns the previous one.
LogSink set_log_sink(LogSink sink);

void log(LogLevel level, std::string_view message);

}  // namespace storyloom
