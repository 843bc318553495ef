#include "consensus_rhc/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string>

namespace crhc::log {

namespace {

Level from_env() {
  const char* env = std::getenv("CONSENSUS_RHC_LOG");
  if (!env) return Level::Warn;
  const std::string v(env);
  if (v == "quiet" || v == "0") return Level::Quiet;
  if (v == "info" || v == "2") return Level::Info;
  if (v == "debug" || v == "3") return Level::Debug;
  return Level::Warn;
}

std::atomic<Level>& current() {
  static std::atomic<Level> l{from_env()};
  return l;
}

void emit(Level at, std::string_view tag, std::string_view msg) {
  if (static_cast<int>(current().load()) < static_cast<int>(at)) return;
  std::cerr << "[" << tag << "] " << msg << "\n";
}

}  // namespace

Level level() { return current().load(); }
void set_level(Level l) { current().store(l); }
void warn(std::string_view msg) { emit(Level::Warn, "warn", msg); }
void info(std::string_view msg) { emit(Level::Info, "info", msg); }
void debug(std::string_view msg) { emit(Level::Debug, "debug", msg); }

}  // namespace crhc::log
