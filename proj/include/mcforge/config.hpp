#pragma once

#include <filesystem>
#include <string>

namespace mcforge {

/// Everything the CLI can read from a config file.  Flags override these;
/// secrets never appear here (API keys come from the environment only).
struct Config {
	// [paths]
	std::filesystem::path template_path;
	std::filesystem::path params_path;
	std::filesystem::path output_dir;
	std::filesystem::path store_dir; // assistant vector store

	// [run]
	std::string prefix = "example";
	int cycles = 5;
	std::string executable; // engine command; empty selects the bundled mock
	int max_parallel = 0;

	// [workflow]
	double uncertainty_target = 10.0;
	int monitor_unit = 46;
	std::string mode = "general"; // general | microdosimetry
	int max_refinements = 1;
	double granularity = 100000;
	std::string nps_parameter = "nps";

	// [micro]
	double dt_nm = 50;
	double clf = 2.0 / 3.0;
	int flag = 0;
	std::string kernel = "icru40";
	bool appendix_literal_sums = false;
	int bins_per_decade = 60;
	std::filesystem::path gains_path;

	// [plot]
	bool plot_error_bars = false;
	bool plot_blocks = false;
	bool plot_log_scale = false;
	bool plot_semilogx = true;
	bool plot_semilogy = false;

	// [llm]
	std::string llm_endpoint;
	std::string llm_model = "default";

	// [assistant]
	std::string embed_endpoint;
	std::string chat_endpoint;
	std::string embedder = "hash"; // hash | http
	int chunk_size = 1000;
	int overlap = 200;
	int top_k = 4;
	std::string extract_command; // external text extraction for PDFs
};

/// Minimal TOML subset: [section] headers, key = value with quoted strings,
/// numbers and booleans, # comments.  Unknown keys are rejected; relative
/// paths resolve against the config file's directory.
Config load_config(const std::filesystem::path& path);

} // namespace mcforge
