#pragma once

#include <functional>
#include <string_view>

namespace springmass {

enum class LogLevel { Info, Warning };

using LogSink = std::function<void(LogLevel, std::string_view)>;

/// Replaces the process-wide diagnostic sink (default: stderr). Passing an
/// empty function restores the default.
void set_log_sink(LogSink sink);
void log_message(LogLevel level, std::string_view message);
inline void log_warning(std::string_view message) { log_message(LogLevel::Warning, message); }
inline void log_info(std::string_view message) { log_message(LogLevel::Info, message); }

}  // namespace springmass
