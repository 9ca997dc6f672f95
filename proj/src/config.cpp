#include "mcforge/config.hpp"

#include <functional>
#include <map>

#include "mcforge/errors.hpp"
#include "mcforge/util.hpp"

namespace mcforge {

namespace {

std::string unquote(std::string_view raw, const std::string& key) {
	std::string_view v = trim(raw);
	if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
		return std::string(v.substr(1, v.size() - 2));
	if (!v.empty() && v.front() == '"')
		raise(Errc::bad_config, key + ": unterminated string");
	return std::string(v);
}

double number(std::string_view raw, const std::string& key) {
	auto v = parse_number(trim(raw));
	if (!v) raise(Errc::bad_config, key + ": expected a number, got '" + std::string(trim(raw)) + "'");
	return *v;
}

int integer(std::string_view raw, const std::string& key) {
	double v = number(raw, key);
	if (v != static_cast<long long>(v))
		raise(Errc::bad_config, key + ": expected an integer");
	return static_cast<int>(v);
}

bool boolean(std::string_view raw, const std::string& key) {
	std::string_view v = trim(raw);
	if (v == "true") return true;
	if (v == "false") return false;
	raise(Errc::bad_config, key + ": expected true or false");
}

} // namespace

Config load_config(const std::filesystem::path& path) {
	Config cfg;
	std::filesystem::path base = path.parent_path();
	auto resolve = [&](std::string_view raw, const std::string& key) {
		std::filesystem::path p = unquote(raw, key);
		if (p.empty()) return p;
		return p.is_absolute() ? p : base / p;
	};

	using Setter = std::function<void(std::string_view, const std::string&)>;
	std::map<std::string, Setter> keys = {
	    {"paths.template", [&](auto v, auto& k) { cfg.template_path = resolve(v, k); }},
	    {"paths.params", [&](auto v, auto& k) { cfg.params_path = resolve(v, k); }},
	    {"paths.output_dir", [&](auto v, auto& k) { cfg.output_dir = resolve(v, k); }},
	    {"paths.store_dir", [&](auto v, auto& k) { cfg.store_dir = resolve(v, k); }},
	    {"run.prefix", [&](auto v, auto& k) { cfg.prefix = unquote(v, k); }},
	    {"run.cycles", [&](auto v, auto& k) { cfg.cycles = integer(v, k); }},
	    {"run.executable", [&](auto v, auto& k) { cfg.executable = unquote(v, k); }},
	    {"run.max_parallel", [&](auto v, auto& k) { cfg.max_parallel = integer(v, k); }},
	    {"workflow.uncertainty_target",
	     [&](auto v, auto& k) { cfg.uncertainty_target = number(v, k); }},
	    {"workflow.monitor_unit", [&](auto v, auto& k) { cfg.monitor_unit = integer(v, k); }},
	    {"workflow.mode", [&](auto v, auto& k) { cfg.mode = unquote(v, k); }},
	    {"workflow.max_refinements",
	     [&](auto v, auto& k) { cfg.max_refinements = integer(v, k); }},
	    {"workflow.granularity", [&](auto v, auto& k) { cfg.granularity = number(v, k); }},
	    {"workflow.nps_parameter", [&](auto v, auto& k) { cfg.nps_parameter = unquote(v, k); }},
	    {"micro.dt_nm", [&](auto v, auto& k) { cfg.dt_nm = number(v, k); }},
	    {"micro.clf", [&](auto v, auto& k) { cfg.clf = number(v, k); }},
	    {"micro.flag", [&](auto v, auto& k) { cfg.flag = integer(v, k); }},
	    {"micro.kernel", [&](auto v, auto& k) { cfg.kernel = unquote(v, k); }},
	    {"micro.appendix_literal_sums",
	     [&](auto v, auto& k) { cfg.appendix_literal_sums = boolean(v, k); }},
	    {"micro.bins_per_decade",
	     [&](auto v, auto& k) { cfg.bins_per_decade = integer(v, k); }},
	    {"micro.gains", [&](auto v, auto& k) { cfg.gains_path = resolve(v, k); }},
	    {"plot.error_bars", [&](auto v, auto& k) { cfg.plot_error_bars = boolean(v, k); }},
	    {"plot.blocks", [&](auto v, auto& k) { cfg.plot_blocks = boolean(v, k); }},
	    {"plot.log_scale", [&](auto v, auto& k) { cfg.plot_log_scale = boolean(v, k); }},
	    {"plot.semilogx", [&](auto v, auto& k) { cfg.plot_semilogx = boolean(v, k); }},
	    {"plot.semilogy", [&](auto v, auto& k) { cfg.plot_semilogy = boolean(v, k); }},
	    {"llm.endpoint", [&](auto v, auto& k) { cfg.llm_endpoint = unquote(v, k); }},
	    {"llm.model", [&](auto v, auto& k) { cfg.llm_model = unquote(v, k); }},
	    {"assistant.embed_endpoint",
	     [&](auto v, auto& k) { cfg.embed_endpoint = unquote(v, k); }},
	    {"assistant.chat_endpoint",
	     [&](auto v, auto& k) { cfg.chat_endpoint = unquote(v, k); }},
	    {"assistant.embedder", [&](auto v, auto& k) { cfg.embedder = unquote(v, k); }},
	    {"assistant.chunk_size", [&](auto v, auto& k) { cfg.chunk_size = integer(v, k); }},
	    {"assistant.overlap", [&](auto v, auto& k) { cfg.overlap = integer(v, k); }},
	    {"assistant.top_k", [&](auto v, auto& k) { cfg.top_k = integer(v, k); }},
	    {"assistant.extract_command",
	     [&](auto v, auto& k) { cfg.extract_command = unquote(v, k); }},
	};

	std::string text = read_file(path);
	std::string section;
	int line_no = 0;
	for (const std::string& raw_line : split_lines(text)) {
		++line_no;
		std::string_view line = trim(raw_line);
		if (line.empty() || line.front() == '#') continue;
		if (line.front() == '[') {
			if (line.back() != ']')
				raise(Errc::bad_config, "line " + std::to_string(line_no) + ": malformed section");
			section = std::string(trim(line.substr(1, line.size() - 2)));
			continue;
		}
		auto eq = line.find('=');
		if (eq == std::string_view::npos)
			raise(Errc::bad_config, "line " + std::to_string(line_no) + ": expected key = value");
		std::string key = std::string(trim(line.substr(0, eq)));
		std::string full = section.empty() ? key : section + "." + key;
		auto it = keys.find(full);
		if (it == keys.end())
			raise(Errc::bad_config, "unknown key '" + full + "' (line " +
			                            std::to_string(line_no) + ")");
		it->second(line.substr(eq + 1), full);
	}

	if (cfg.mode != "general" && cfg.mode != "microdosimetry")
		raise(Errc::bad_config, "workflow.mode must be general or microdosimetry");
	if (cfg.cycles < 1) raise(Errc::bad_config, "run.cycles must be at least 1");
	if (cfg.uncertainty_target <= 0)
		raise(Errc::bad_config, "workflow.uncertainty_target must be positive");
	return cfg;
}

} // namespace mcforge
