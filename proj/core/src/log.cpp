#include "aslab/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace aslab {
namespace {

std::atomic<bool> g_verbose{false};

void default_sink(LogLevel level, const std::string& message) {
  if (level == LogLevel::kWarning) {
    std::cerr << "warning: " << message << '\n';
  } else if (g_verbose.load()) {
    std::cerr << message << '\n';
  }
}

std::mutex& sink_mutex() {
  static std::mutex mu;
  return mu;
}

LogSink& sink() {
  static LogSink s = default_sink;
  return s;
}

void emit(LogLevel level, const std::string& message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink()) sink()(level, message);
}

}  // namespace

LogSink set_log_sink(LogSink s) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  LogSink previous = std::move(sink());
  sink() = s ? std::move(s) : LogSink(default_sink);
  return previous;
}

void set_verbose(bool verbose) { g_verbose.store(verbose); }

void log_info(const std::string& message) { emit(LogLevel::kInfo, message); }
void log_warning(const std::string& message) { emit(LogLevel::kWarning, message); }

}  // namespace aslab
