#include "storyloom/clock.hpp"

#include "storyloom/errors.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <mutex>
#include <random>

namespace storyloom {

Clock system_clock() {
  return [] { return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now()); };
}

Clock stepping_clock(Instant start, std::chrono::milliseconds step) {
  auto ticks = std::make_shared<std::atomic<std::int64_t>>(0);
  return [start, step, ticks] { return start + step * ticks->fetch_add(1); };
}

std::string format_instant(Instant t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss<milliseconds> tod{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()), static_cast<int>(tod.subseconds().count()));
  return buf;
}

namespace {

int digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) throw ParseError("", 0, "truncated timestamp: " + std::string(text));
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + count, value);
  if (ec != std::errc{} || ptr != text.data() + pos + count) {
    throw ParseError("", 0, "bad timestamp digits: " + std::string(text));
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw ParseError("", 0, "bad timestamp: " + std::string(text));
  }
}

}  // namespace

Instant parse_instant(std::string_view text) {
  using namespace std::chrono;
  const int y = digits(text, 0, 4);
  expect(text, 4, '-');
  const int mo = digits(text, 5, 2);
  expect(text, 7, '-');
  const int d = digits(text, 8, 2);
  expect(text, 10, 'T');
  const int h = digits(text, 11, 2);
  expect(text, 13, ':');
  const int mi = digits(text, 14, 2);
  expect(text, 16, ':');
  const int s = digits(text, 17, 2);
  std::size_t pos = 19;
  int ms = 0;
  if (pos < text.size() && text[pos] == '.') {
    std::size_t n = 0;
    while (pos + 1 + n < text.size() && n < 3 && text[pos + 1 + n] >= '0' && text[pos + 1 + n] <= '9') ++n;
    if (n == 0) throw ParseError("", 0, "bad timestamp fraction: " + std::string(text));
    ms = digits(text, pos + 1, n);
    for (std::size_t k = n; k < 3; ++k) ms *= 10;
    pos += 1 + n;
  }
  expect(text, pos, 'Z');
  if (pos + 1 != text.size()) throw ParseError("", 0, "trailing characters in timestamp: " + std::string(text));

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw ParseError("", 0, "timestamp out of range: " + std::string(text));
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
}

IdGenerator random_id_generator() {
  struct State {
    std::mutex mutex;
    std::mt19937_64 engine{std::random_device{}()};
  };
  auto state = std::make_shared<State>();
  return [state] {
    std::uint64_t hi, lo;
    {
      std::lock_guard lock(state->mutex);
      hi = state->engine();
      lo = state->engine();
    }
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                  static_cast<unsigned long long>(lo));
    return std::string(buf);
  };
}

IdGenerator sequential_id_generator(std::string prefix) {
  auto next = std::make_shared<std::atomic<std::uint64_t>>(1);
  return [prefix = std::move(prefix), next] { return prefix + "-" + std::to_string(next->fetch_add(1)); };
}

}  // namespace storyloom
