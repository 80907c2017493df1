#include "coopnav/log.hpp"

#include <iostream>
#include <mutex>
#include <string>

#include "coopnav/common.hpp"

namespace coopnav {
namespace {

void default_sink(LogLevel level, std::string_view message) {
  if (level < LogLevel::kWarning) return;
  std::cerr << (level == LogLevel::kError ? "error: " : "warning: ") << message << '\n';
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink& current_sink() {
  static LogSink sink = default_sink;
  return sink;
}

}  // namespace

LogSink set_log_sink(LogSink sink) {
  std::lock_guard lock(sink_mutex());
  LogSink previous = std::move(current_sink());
  current_sink() = sink ? std::move(sink) : LogSink(default_sink);
  return previous;
}

void log(LogLevel level, std::string_view message) {
  std::lock_guard lock(sink_mutex());
  current_sink()(level, message);
}

std::string to_string(const FootId& id) {
  std::string s = "agent" + std::to_string(id.agent);
  if (id.is_device()) return s + ".device";
  return s + (id.side == FootId::kLeft ? ".left" : ".right");
}

}  // namespace coopnav
