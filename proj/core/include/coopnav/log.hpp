#pragma once

#include <functional>
#include <string_view>

namespace coopnav {

enum class LogLevel { kDebug, kInfo, kWarning, kError };

using LogSink = std::function<void(LogLevel, std::string_view)>;

// Replaces the process-wide sink and returns the previous one. The default
// sink prints warnings and errors to stderr.
LogSink set_log_sink(LogSink sink);

void log(LogLevel level, std::string_view message);

inline void log_warning(std::string_view message) { log(LogLevel::kWarning, message); }
inline void log_info(std::string_view message) { log(LogLevel::kInfo, message); }

}  // namespace coopnav
