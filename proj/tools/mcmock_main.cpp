#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcforge/errors.hpp"
#include "mcforge/mock_engine.hpp"
#include "mcforge/postproc.hpp"
#include "mcforge/util.hpp"

using namespace mcforge;

namespace {

int run_engine(const std::string& input) {
	auto written = mock_run_input_file(input);
	for (const auto& path : written) std::cout << path.string() << "\n";
	return 0;
}

// stdin protocol shared with the real post-processing utilities: one cycle
// file per line, a blank line, then the merged output base name.
int run_decrypt(const std::string& expect) {
	std::vector<std::string> files;
	std::string line;
	while (std::getline(std::cin, line)) {
		if (trim(line).empty()) break;
		files.emplace_back(trim(line));
	}
	std::string out_base;
	while (std::getline(std::cin, line)) {
		if (!trim(line).empty()) {
			out_base = trim(line);
			break;
		}
	}
	if (files.empty() || out_base.empty()) {
		std::cerr << "usage: feed cycle file names, a blank line, then the output name\n";
		return 2;
	}

	std::vector<MockContainer> cycles;
	for (const std::string& f : files) {
		MockContainer c = read_container(f);
		if (!expect.empty() && c.card != expect) {
			std::cerr << f << ": unit " << c.unit << " holds " << c.card << " data, not "
			          << expect << "\n";
			return 3;
		}
		cycles.push_back(std::move(c));
	}
	MockContainer merged = merge_containers(cycles);
	int n = static_cast<int>(cycles.size());
	write_file(out_base + "_sum.lis", render_sum_lis(merged, n));
	write_file(out_base + "_tab.lis", render_tab_lis(merged, n));
	std::cout << "merged " << n << " cycles of unit " << merged.unit << " (" << merged.card
	          << ", detector " << merged.detector << ")\n";
	return 0;
}

} // namespace

int main(int argc, char** argv) {
	CLI::App app{"Mock transport engine and post-processing utility"};
	app.require_subcommand(1);

	std::string input;
	auto* run = app.add_subcommand("run", "Simulate one input deck");
	run->add_option("input", input, "Input deck (.inp)")->required();

	std::string expect;
	auto* decrypt = app.add_subcommand("decrypt", "Merge cycle outputs fed on stdin");
	decrypt->add_option("--expect", expect, "Refuse data from any other scoring card");

	CLI11_PARSE(app, argc, argv);

	try {
		if (run->parsed()) return run_engine(input);
		return run_decrypt(expect);
	} catch (const McError& e) {
		std::cerr << e.formatted() << "\n";
		return 1;
	} catch (const std::exception& e) {
		std::cerr << "error: " << e.what() << "\n";
		return 1;
	}
}
