#pragma once

#include <functional>
#include <string>

namespace suspvisc {

enum class LogLevel { debug, info, warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Replace the process-wide sink (default: warnings to stderr). Passing an
/// empty function silences the library.
void set_log_sink(LogSink sink);
void log_message(LogLevel level, const std::string& message);

inline void log_warning(const std::string& message) { log_message(LogLevel::warning, message); }
inline void log_info(const std::string& message) { log_message(LogLevel::info, message); }

}  // namespace suspvisc
