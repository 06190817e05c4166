#pragma once

#include <string>

namespace spdlog {
class logger;
}

namespace lpvslc {

// Library-wide stderr logger. The level is read once from LPVSLC_LOG
// (trace, debug, info, warn, error, off); default is warn.
spdlog::logger& log();

void set_log_level(const std::string& level);

}  // namespace lpvslc
