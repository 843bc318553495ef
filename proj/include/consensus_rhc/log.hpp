#pragma once

#include <string_view>

// Minimal stderr logger. Level comes from CONSENSUS_RHC_LOG
// (quiet | warn | info | debug), default warn.
namespace crhc::log {

enum class Level { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

Level level();
void set_level(Level l);
void warn(std::string_view msg);
void info(std::string_view msg);
void debug(std::string_view msg);

}  // namespace crhc::log
