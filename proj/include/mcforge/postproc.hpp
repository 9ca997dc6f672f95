#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcforge/mock_engine.hpp"
#include "mcforge/stats.hpp"

namespace mcforge {

struct UtilityEntry {
	std::string name;    // usxsuw, ustsuw, ...
	std::string command; // spawned via the shell, fed the stdin protocol
	std::string card;    // scoring card this utility understands
};

struct UtilityTable {
	std::vector<UtilityEntry> entries;

	/// Post-processing utilities in trial order, commands equal to their
	/// conventional names (resolved through PATH).
	static UtilityTable defaults();
	/// Same table pointing every entry at the bundled mock utility.
	static UtilityTable mock(const std::string& mcmock_command);
};

struct DecryptResult {
	std::vector<std::filesystem::path> lis_paths;
	std::filesystem::path log_path;
	std::vector<std::string> warnings;
};

/// Find binary outputs (*_fort.NN, 17 <= NN <= 99) under dir, group them by
/// unit, and feed each group to the utilities in trial order until one
/// produces the merged <out_base>_fort_NN_{sum,tab}.lis pair.  Everything the
/// utilities print is appended to dir/decryption_logs.
DecryptResult decrypt_all(const std::filesystem::path& dir, const UtilityTable& table,
                          int cycles, const std::string& out_base = "output");

struct SumSection {
	std::string detector_name;
	long long total_primaries = 0;
	std::map<std::string, std::pair<double, double>> totals; // name -> (value, err%)
	std::vector<TabRow> rows; // embedded spectrum, when present

	bool operator==(const SumSection&) const = default;
};

struct TabSection {
	std::string detector_name;
	std::vector<TabRow> rows;

	bool operator==(const TabSection&) const = default;
};

/// Tolerant readers: header prose is skipped until the numeric table starts.
SumSection parse_sum(std::string_view text);
TabSection parse_tab(std::string_view text);

struct FileEntry {
	enum class Type { sum, tab };
	Type type = Type::tab;
	std::string detector;
	std::optional<long long> total_primaries;
	std::vector<TabRow> rows;
	std::map<std::string, std::pair<double, double>> totals;
	std::optional<double> average_uncertainty;

	bool operator==(const FileEntry&) const = default;
};

struct FlukaData {
	std::map<std::string, FileEntry> files; // keyed by .lis file name

	bool operator==(const FlukaData&) const = default;
};

/// Parse every .lis file into the store and write it as JSON (stable key
/// order).  Tab entries gain an average_uncertainty field.
FlukaData build_store(const std::vector<std::filesystem::path>& lis_paths,
                      const std::filesystem::path& json_out);
FlukaData load_store(const std::filesystem::path& json_path);

/// Rendered layouts for the merged outputs; the parse_* functions above read
/// these back.
std::string render_sum_lis(const MockContainer& merged, int cycles);
std::string render_tab_lis(const MockContainer& merged, int cycles);

/// Path of the bundled mock engine/utility binary: $MCFORGE_MOCK_BIN if set,
/// else a sibling of the current executable, else "mcmock" from PATH.
std::string default_mock_command();

} // namespace mcforge
