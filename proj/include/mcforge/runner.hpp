#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace mcforge {

struct RunConfig {
	std::string executable; // command line; "{input}" substituted, else input appended
	std::filesystem::path execution_dir;
	std::string job_script_prefix = "AutoFLUKA_job";
	int max_parallel = 0; // 0 -> one worker per job
};

struct RunRecord {
	std::filesystem::path input_file;
	std::filesystem::path job_script;
	std::chrono::system_clock::time_point start;
	std::chrono::system_clock::time_point end;
	bool succeeded = false;
	int exit_code = -1;
	std::filesystem::path stdout_log;
	std::filesystem::path stderr_log;
};

struct ExecutionReport {
	std::vector<RunRecord> records;
	std::chrono::microseconds wall{0};
	std::string total_wall_time; // HH:MM:SS.ffffff
	int failures = 0;
};

/// One wrapper script per input, named <prefix>1.sh, <prefix>2.sh, ...
/// Each script cds into execution_dir and invokes the configured engine on
/// its input file.
std::vector<std::filesystem::path> emit_job_scripts(
    const std::vector<std::filesystem::path>& inputs, const RunConfig& cfg);

/// Run every script under a bounded worker pool, capturing per-job logs and
/// wall-clock span.  Throws spawn_error when the configured engine is not
/// executable at all; per-job failures are recorded, not thrown.
ExecutionReport execute_all(const std::vector<std::filesystem::path>& scripts,
                            const RunConfig& cfg);

std::string format_duration(std::chrono::microseconds us);

} // namespace mcforge
