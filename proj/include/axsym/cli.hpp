#pragma once

#include <string>
#include <utility>
#include <vector>

namespace axsym {

/// Runs the axsym command line. Returns the process exit code:
/// 0 success, 1 usage error, 2 data error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

/// One key=value line on standard error, e.g. "level=info event=fit-bands band=3".
void log_event(const std::string& level, const std::string& event,
               const std::vector<std::pair<std::string, std::string>>& fields = {});

} // namespace axsym
