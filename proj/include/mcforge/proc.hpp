#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mcforge {

struct CommandResult {
	int exit_code = -1;
	std::string out;
	std::string err;
};

/// Run argv with stdin_data piped in and both output streams captured.
/// A negative exit_code means death by signal (-signo).
CommandResult run_command(const std::vector<std::string>& argv, std::string_view stdin_data,
                          const std::filesystem::path& cwd = {});

/// Run "/bin/sh script" with stdout/stderr redirected to log files.
int run_script(const std::filesystem::path& script, const std::filesystem::path& stdout_log,
               const std::filesystem::path& stderr_log, const std::filesystem::path& cwd = {});

/// Shell-style split honoring double quotes; used for configured command
/// strings like `mcmock decrypt --expect USRBDX`.
std::vector<std::string> split_command(std::string_view command);

/// True when the command's argv[0] resolves to an executable file, searching
/// PATH for bare names.
bool executable_exists(const std::string& argv0);

} // namespace mcforge
