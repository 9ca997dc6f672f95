#include "mcforge/proc.hpp"

#include <cerrno>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include "mcforge/errors.hpp"
#include "mcforge/util.hpp"

extern char** environ;

namespace mcforge {

namespace {

struct Pipe {
	int fds[2] = {-1, -1};
	Pipe() {
		if (pipe(fds) != 0) raise(Errc::io_error, "pipe failed");
	}
	~Pipe() {
		close_read();
		close_write();
	}
	void close_read() {
		if (fds[0] >= 0) ::close(fds[0]);
		fds[0] = -1;
	}
	void close_write() {
		if (fds[1] >= 0) ::close(fds[1]);
		fds[1] = -1;
	}
};

int wait_exit(pid_t pid) {
	int status = 0;
	while (waitpid(pid, &status, 0) < 0) {
		if (errno != EINTR) raise(Errc::spawn_error, "waitpid failed");
	}
	if (WIFEXITED(status)) return WEXITSTATUS(status);
	if (WIFSIGNALED(status)) return -WTERMSIG(status);
	return -1;
}

class SpawnAttrs {
public:
	SpawnAttrs() { posix_spawn_file_actions_init(&actions_); }
	~SpawnAttrs() { posix_spawn_file_actions_destroy(&actions_); }
	posix_spawn_file_actions_t* get() { return &actions_; }

private:
	posix_spawn_file_actions_t actions_;
};

} // namespace

CommandResult run_command(const std::vector<std::string>& argv, std::string_view stdin_data,
                          const std::filesystem::path& cwd) {
	if (argv.empty()) raise(Errc::spawn_error, "empty command");
	Pipe in, out, err;
	SpawnAttrs attrs;
	posix_spawn_file_actions_adddup2(attrs.get(), in.fds[0], 0);
	posix_spawn_file_actions_adddup2(attrs.get(), out.fds[1], 1);
	posix_spawn_file_actions_adddup2(attrs.get(), err.fds[1], 2);
	for (Pipe* p : {&in, &out, &err}) {
		posix_spawn_file_actions_addclose(attrs.get(), p->fds[0]);
		posix_spawn_file_actions_addclose(attrs.get(), p->fds[1]);
	}
	if (!cwd.empty()) posix_spawn_file_actions_addchdir_np(attrs.get(), cwd.c_str());

	std::vector<char*> cargv;
	cargv.reserve(argv.size() + 1);
	for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
	cargv.push_back(nullptr);

	pid_t pid = 0;
	int rc = posix_spawnp(&pid, cargv[0], attrs.get(), nullptr, cargv.data(), environ);
	if (rc != 0)
		raise(Errc::spawn_error,
		      std::string("cannot spawn ") + argv[0] + ": " + std::strerror(rc));

	in.close_read();
	out.close_write();
	err.close_write();

	CommandResult result;
	std::size_t written = 0;
	bool stdin_open = true;
	if (stdin_data.empty()) {
		in.close_write();
		stdin_open = false;
	}
	bool out_open = true, err_open = true;
	char buf[4096];
	while (stdin_open || out_open || err_open) {
		pollfd fds[3];
		nfds_t n = 0;
		int idx_in = -1, idx_out = -1, idx_err = -1;
		if (stdin_open) {
			idx_in = static_cast<int>(n);
			fds[n++] = {in.fds[1], POLLOUT, 0};
		}
		if (out_open) {
			idx_out = static_cast<int>(n);
			fds[n++] = {out.fds[0], POLLIN, 0};
		}
		if (err_open) {
			idx_err = static_cast<int>(n);
			fds[n++] = {err.fds[0], POLLIN, 0};
		}
		if (poll(fds, n, -1) < 0) {
			if (errno == EINTR) continue;
			break;
		}
		if (idx_in >= 0 && (fds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
			ssize_t w = write(in.fds[1], stdin_data.data() + written,
			                  std::min<std::size_t>(stdin_data.size() - written, 4096));
			if (w <= 0) {
				in.close_write();
				stdin_open = false;
			} else {
				written += static_cast<std::size_t>(w);
				if (written == stdin_data.size()) {
					in.close_write();
					stdin_open = false;
				}
			}
		}
		if (idx_out >= 0 && (fds[idx_out].revents & (POLLIN | POLLHUP))) {
			ssize_t r = read(out.fds[0], buf, sizeof buf);
			if (r <= 0) {
				out.close_read();
				out_open = false;
			} else {
				result.out.append(buf, static_cast<std::size_t>(r));
			}
		}
		if (idx_err >= 0 && (fds[idx_err].revents & (POLLIN | POLLHUP))) {
			ssize_t r = read(err.fds[0], buf, sizeof buf);
			if (r <= 0) {
				err.close_read();
				err_open = false;
			} else {
				result.err.append(buf, static_cast<std::size_t>(r));
			}
		}
	}
	result.exit_code = wait_exit(pid);
	return result;
}

int run_script(const std::filesystem::path& script, const std::filesystem::path& stdout_log,
               const std::filesystem::path& stderr_log, const std::filesystem::path& cwd) {
	SpawnAttrs attrs;
	posix_spawn_file_actions_addopen(attrs.get(), 0, "/dev/null", O_RDONLY, 0);
	posix_spawn_file_actions_addopen(attrs.get(), 1, stdout_log.c_str(),
	                                 O_WRONLY | O_CREAT | O_TRUNC, 0644);
	posix_spawn_file_actions_addopen(attrs.get(), 2, stderr_log.c_str(),
	                                 O_WRONLY | O_CREAT | O_TRUNC, 0644);
	if (!cwd.empty()) posix_spawn_file_actions_addchdir_np(attrs.get(), cwd.c_str());

	std::string script_str = script.string();
	char sh[] = "/bin/sh";
	char* cargv[] = {sh, script_str.data(), nullptr};
	pid_t pid = 0;
	int rc = posix_spawn(&pid, "/bin/sh", attrs.get(), nullptr, cargv, environ);
	if (rc != 0)
		raise(Errc::spawn_error,
		      "cannot spawn shell for " + script_str + ": " + std::strerror(rc));
	return wait_exit(pid);
}

std::vector<std::string> split_command(std::string_view command) {
	std::vector<std::string> out;
	std::string current;
	bool quoted = false, any = false;
	for (char c : command) {
		if (c == '"') {
			quoted = !quoted;
			any = true;
			continue;
		}
		if (!quoted && (c == ' ' || c == '\t')) {
			if (any || !current.empty()) {
				out.push_back(current);
				current.clear();
				any = false;
			}
			continue;
		}
		current += c;
	}
	if (any || !current.empty()) out.push_back(current);
	return out;
}

bool executable_exists(const std::string& argv0) {
	auto runnable = [](const std::filesystem::path& p) {
		std::error_code ec;
		return std::filesystem::exists(p, ec) && !std::filesystem::is_directory(p, ec) &&
		       access(p.c_str(), X_OK) == 0;
	};
	if (argv0.find('/') != std::string::npos) return runnable(argv0);
	const char* path = std::getenv("PATH");
	if (!path) return false;
	for (const std::string& dir : split(path, ':')) {
		if (dir.empty()) continue;
		if (runnable(std::filesystem::path(dir) / argv0)) return true;
	}
	return false;
}

} // namespace mcforge
