#include "mcforge/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "mcforge/errors.hpp"
#include "mcforge/proc.hpp"
#include "mcforge/util.hpp"

namespace mcforge {

namespace {

std::string engine_invocation(const RunConfig& cfg, const std::filesystem::path& input) {
	std::string cmd = cfg.executable;
	std::string quoted = "\"" + input.string() + "\"";
	auto pos = cmd.find("{input}");
	if (pos != std::string::npos)
		cmd.replace(pos, 7, quoted);
	else
		cmd += " " + quoted;
	return cmd;
}

} // namespace

std::vector<std::filesystem::path> emit_job_scripts(
    const std::vector<std::filesystem::path>& inputs, const RunConfig& cfg) {
	std::error_code ec;
	std::filesystem::create_directories(cfg.execution_dir, ec);
	std::vector<std::filesystem::path> scripts;
	int i = 0;
	for (const auto& input : inputs) {
		++i;
		std::filesystem::path script =
		    cfg.execution_dir / (cfg.job_script_prefix + std::to_string(i) + ".sh");
		std::string body;
		body += "#!/bin/sh\n";
		body += "# input: " + input.string() + "\n";
		body += "cd \"" + cfg.execution_dir.string() + "\" || exit 1\n";
		body += engine_invocation(cfg, input) + "\n";
		write_file(script, body);
		scripts.push_back(script);
	}
	return scripts;
}

namespace {

std::filesystem::path input_of_script(const std::filesystem::path& script) {
	std::ifstream in(script);
	std::string line;
	while (std::getline(in, line)) {
		std::string_view sv = line;
		if (sv.starts_with("# input: ")) return std::filesystem::path(sv.substr(9));
	}
	return {};
}

} // namespace

ExecutionReport execute_all(const std::vector<std::filesystem::path>& scripts,
                            const RunConfig& cfg) {
	auto argv = split_command(cfg.executable);
	if (argv.empty() || !executable_exists(argv[0]))
		raise(Errc::spawn_error,
		      "engine executable not found: " + (argv.empty() ? cfg.executable : argv[0]));

	ExecutionReport report;
	report.records.resize(scripts.size());
	std::atomic<std::size_t> next{0};

	auto worker = [&]() {
		while (true) {
			std::size_t idx = next.fetch_add(1);
			if (idx >= scripts.size()) return;
			RunRecord& rec = report.records[idx];
			rec.job_script = scripts[idx];
			rec.input_file = input_of_script(scripts[idx]);
			rec.stdout_log = scripts[idx];
			rec.stdout_log += ".out";
			rec.stderr_log = scripts[idx];
			rec.stderr_log += ".err";
			rec.start = std::chrono::system_clock::now();
			rec.exit_code = run_script(scripts[idx], rec.stdout_log, rec.stderr_log,
			                           cfg.execution_dir);
			rec.end = std::chrono::system_clock::now();
			rec.succeeded = rec.exit_code == 0;
			if (!rec.succeeded) {
				std::error_code ec;
				auto size = std::filesystem::file_size(rec.stderr_log, ec);
				if (ec || size == 0) {
					std::ofstream err(rec.stderr_log, std::ios::app);
					err << "job exited with status " << rec.exit_code << "\n";
				}
			}
		}
	};

	std::size_t workers = cfg.max_parallel > 0
	                          ? std::min<std::size_t>(static_cast<std::size_t>(cfg.max_parallel),
	                                                  scripts.size())
	                          : scripts.size();
	workers = std::max<std::size_t>(workers, 1);
	std::vector<std::thread> pool;
	pool.reserve(workers);
	for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
	for (auto& t : pool) t.join();

	if (!report.records.empty()) {
		auto first = report.records.front().start;
		auto last = report.records.front().end;
		for (const RunRecord& rec : report.records) {
			first = std::min(first, rec.start);
			last = std::max(last, rec.end);
			if (!rec.succeeded) ++report.failures;
		}
		report.wall = std::chrono::duration_cast<std::chrono::microseconds>(last - first);
	}
	report.total_wall_time = format_duration(report.wall);
	return report;
}

std::string format_duration(std::chrono::microseconds us) {
	long long total = us.count();
	if (total < 0) total = 0;
	long long micros = total % 1000000;
	long long seconds = total / 1000000;
	long long minutes = seconds / 60;
	long long hours = minutes / 60;
	char buf[64];
	std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%06lld", hours, minutes % 60,
	              seconds % 60, micros);
	return buf;
}

} // namespace mcforge
