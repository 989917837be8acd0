#include "storyloom/log.hpp"

#include <iostream>
#include <mutex>
#include <string>

namespace storyloom {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink& current_sink() {
  static LogSink sink = [](LogLevel level, std::string_view message) {
    static constexpr std::string_view kNames[] = {"debug", "info", "warning", "error"};
    std::clog << "[storyloom " << kNames[static_cast<int>(level)] << "] " << message << '\n';
  };
  return sink;
}

}  // namespace

LogSink set_log_sink(LogSink sink) {
  std::lock_guard lock(sink_mutex());
  std::swap(current_sink(), sink);
  return sink;
}

void log(LogLevel level, std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (current_sink()) current_sink()(level, message);
}

}  // namespace storyloom
