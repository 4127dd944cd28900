#include "schemaref/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace schemaref::log {

namespace {
std::atomic<Level> g_level{Level::Warning};
std::mutex g_mutex;
constexpr const char* kNames[] = {"debug", "info", "warning", "error", "off"};
}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void write(Level lvl, std::string_view message) {
  if (lvl < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[" << kNames[static_cast<int>(lvl)] << "] " << message << '\n';
}

}  // namespace schemaref::log
