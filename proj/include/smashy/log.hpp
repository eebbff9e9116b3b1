#pragma once

#include <functional>
#include <mutex>
#include <string_view>

namespace smashy {

// Process-wide sink for non-fatal warnings (e.g. a sampler falling back to
// unfiltered draws). Silent unless a sink is installed.
using WarningSink = std::function<void(std::string_view)>;

namespace detail {
inline WarningSink& warning_sink_storage() {
  static WarningSink sink;
  return sink;
}
inline std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

inline void set_warning_sink(WarningSink sink) {
  std::lock_guard lock(detail::warning_mutex());
  detail::warning_sink_storage() = std::move(sink);
}

inline void warn(std::string_view message) {
  std::lock_guard lock(detail::warning_mutex());
  if (auto& sink = detail::warning_sink_storage()) sink(message);
}

}  // namespace smashy
