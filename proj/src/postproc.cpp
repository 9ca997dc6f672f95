#include "mcforge/postproc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <unistd.h>

#include "json.hpp"
#include "mcforge/errors.hpp"
#include "mcforge/proc.hpp"
#include "mcforge/util.hpp"

namespace mcforge {

UtilityTable UtilityTable::defaults() {
	UtilityTable table;
	table.entries = {
	    {"usxsuw", "usxsuw", "USRBDX"},   {"ustsuw", "ustsuw", "USRTRACK"},
	    {"usbsuw", "usbsuw", "USRBIN"},   {"detsuw", "detsuw", "DETECT"},
	    {"usrsuw", "usrsuw", "RESNUCLE"}, {"usysuw", "usysuw", "USRYIELD"},
	};
	return table;
}

UtilityTable UtilityTable::mock(const std::string& mcmock_command) {
	UtilityTable table = defaults();
	for (UtilityEntry& entry : table.entries)
		entry.command = mcmock_command + " decrypt --expect " + entry.card;
	return table;
}

std::string default_mock_command() {
	if (const char* env = std::getenv("MCFORGE_MOCK_BIN")) return env;
	char buf[4096];
	ssize_t n = readlink("/proc/self/exe", buf, sizeof buf - 1);
	if (n > 0) {
		buf[n] = '\0';
		std::filesystem::path sibling = std::filesystem::path(buf).parent_path() / "mcmock";
		std::error_code ec;
		if (std::filesystem::exists(sibling, ec)) return sibling.string();
	}
	return "mcmock";
}

namespace {

std::optional<int> unit_of_binary(const std::filesystem::path& path) {
	std::string name = path.filename().string();
	auto pos = name.rfind("_fort.");
	if (pos == std::string::npos) return std::nullopt;
	std::string_view digits = std::string_view(name).substr(pos + 6);
	if (digits.empty() || digits.size() > 2) return std::nullopt;
	int unit = 0;
	for (char c : digits) {
		if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
		unit = unit * 10 + (c - '0');
	}
	if (unit < 17 || unit > 99) return std::nullopt;
	return unit;
}

bool nonempty_file(const std::filesystem::path& p) {
	std::error_code ec;
	return std::filesystem::exists(p, ec) && std::filesystem::file_size(p, ec) > 0;
}

} // namespace

DecryptResult decrypt_all(const std::filesystem::path& dir, const UtilityTable& table,
                          int cycles, const std::string& out_base) {
	std::map<int, std::vector<std::string>> groups;
	for (const auto& entry : std::filesystem::directory_iterator(dir)) {
		if (!entry.is_regular_file()) continue;
		if (auto unit = unit_of_binary(entry.path()))
			groups[*unit].push_back(entry.path().filename().string());
	}
	if (groups.empty())
		raise(Errc::no_binary_files, "no *_fort.NN outputs under " + dir.string());

	DecryptResult result;
	result.log_path = dir / "decryption_logs";
	std::ofstream log(result.log_path, std::ios::app);

	for (auto& [unit, files] : groups) {
		std::sort(files.begin(), files.end());
		if (cycles > 0 && static_cast<int>(files.size()) != cycles)
			result.warnings.push_back("unit " + std::to_string(unit) + ": found " +
			                          std::to_string(files.size()) + " cycle files, expected " +
			                          std::to_string(cycles));

		std::vector<UtilityEntry> order = table.entries;
		if (unit == 17)
			std::stable_partition(order.begin(), order.end(),
			                      [](const UtilityEntry& e) { return e.card == "DETECT"; });

		std::string out_name = out_base + "_fort_" + std::to_string(unit);
		std::string stdin_data;
		for (const std::string& f : files) stdin_data += f + "\n";
		stdin_data += "\n";
		stdin_data += out_name + "\n";

		bool done = false;
		std::string failures;
		for (const UtilityEntry& utility : order) {
			log << "### unit " << unit << " via " << utility.name << " (" << utility.command
			    << ")\n";
			CommandResult res;
			try {
				res = run_command({"/bin/sh", "-c", utility.command}, stdin_data, dir);
			} catch (const McError& e) {
				res.exit_code = -1;
				res.err = e.what();
			}
			log << res.out;
			if (!res.out.empty() && res.out.back() != '\n') log << "\n";
			log << res.err;
			if (!res.err.empty() && res.err.back() != '\n') log << "\n";
			log << "exit code " << res.exit_code << "\n";

			std::filesystem::path sum = dir / (out_name + "_sum.lis");
			std::filesystem::path tab = dir / (out_name + "_tab.lis");
			if (res.exit_code == 0 && nonempty_file(sum) && nonempty_file(tab)) {
				result.lis_paths.push_back(sum);
				result.lis_paths.push_back(tab);
				done = true;
				break;
			}
			failures += "  " + utility.name + ": exit " + std::to_string(res.exit_code);
			if (!res.err.empty()) failures += ", stderr: " + std::string(trim(res.err));
			failures += "\n";
		}
		if (!done)
			raise(Errc::all_utilities_failed,
			      "every utility failed for unit " + std::to_string(unit) + "\n" + failures);
	}
	std::sort(result.lis_paths.begin(), result.lis_paths.end());
	return result;
}

namespace {

// A table row is a line whose first four whitespace-separated tokens are
// numeric.  Returns the number of leading numeric tokens.
std::size_t numeric_prefix(const std::vector<std::string>& tokens) {
	std::size_t n = 0;
	for (const std::string& t : tokens) {
		if (!parse_number(t)) break;
		++n;
	}
	return n;
}

std::vector<TabRow> scan_table(const std::vector<std::string>& lines, std::size_t start_line,
                               bool* found) {
	std::vector<TabRow> rows;
	bool in_table = false;
	for (std::size_t i = start_line; i < lines.size(); ++i) {
		std::string_view line = trim(lines[i]);
		if (line.empty() || line.front() == '#') continue;
		auto tokens = split_ws(line);
		std::size_t numeric = numeric_prefix(tokens);
		if (numeric >= 4) {
			TabRow row;
			row.elow = *parse_number(tokens[0]);
			row.ehigh = *parse_number(tokens[1]);
			row.value = *parse_number(tokens[2]);
			row.err_pct = *parse_number(tokens[3]);
			rows.push_back(row);
			in_table = true;
		} else if (in_table && numeric > 0 && numeric == tokens.size()) {
			raise(Errc::ragged_row, "line " + std::to_string(i + 1) + ": expected 4 columns, got " +
			                            std::to_string(numeric));
		} else if (in_table) {
			break; // prose after the table ends it
		}
	}
	if (found) *found = in_table;
	return rows;
}

std::string detector_of(const std::vector<std::string>& lines) {
	for (const std::string& line : lines) {
		std::string_view sv = trim(line);
		if (sv.starts_with("# Detector:")) return std::string(trim(sv.substr(11)));
	}
	for (const std::string& line : lines) {
		std::string_view sv = trim(line);
		if (!sv.empty() && sv.front() != '#') return std::string(sv);
	}
	return "";
}

} // namespace

TabSection parse_tab(std::string_view text) {
	auto lines = split_lines(text);
	TabSection section;
	section.detector_name = detector_of(lines);
	bool found = false;
	section.rows = scan_table(lines, 0, &found);
	if (!found)
		raise(Errc::no_numeric_table, "no numeric table found");
	std::stable_sort(section.rows.begin(), section.rows.end(),
	                 [](const TabRow& a, const TabRow& b) { return a.elow < b.elow; });
	return section;
}

SumSection parse_sum(std::string_view text) {
	auto lines = split_lines(text);
	SumSection section;
	section.detector_name = detector_of(lines);

	bool have_primaries = false;
	for (const std::string& line : lines) {
		std::string lower = to_lower(line);
		auto pos = lower.find("total primaries run");
		if (pos == std::string::npos) continue;
		auto colon = line.find(':', pos);
		std::string_view rest =
		    trim(std::string_view(line).substr(colon == std::string::npos ? pos + 19 : colon + 1));
		std::string digits;
		for (char c : rest) {
			if (std::isdigit(static_cast<unsigned char>(c)))
				digits += c;
			else if (c != ',')
				break;
		}
		if (!digits.empty()) {
			section.total_primaries = std::stoll(digits);
			have_primaries = true;
			break;
		}
	}
	if (!have_primaries)
		raise(Errc::missing_primaries, "no 'Total primaries run' line found");

	// totals: "<name>  <value>  +/-  <err> %"
	for (const std::string& line : lines) {
		auto tokens = split_ws(line);
		if (tokens.size() >= 5 && tokens[2] == "+/-" && tokens.back() == "%" &&
		    !parse_number(tokens[0]) && parse_number(tokens[1]) && parse_number(tokens[3])) {
			section.totals[tokens[0]] = {*parse_number(tokens[1]), *parse_number(tokens[3])};
		}
	}

	section.rows = scan_table(lines, 0, nullptr);
	return section;
}

std::string render_tab_lis(const MockContainer& merged, int cycles) {
	std::string out;
	out += "# Detector: " + merged.detector + "\n";
	out += "# Card: " + merged.card + "   Unit: " + std::to_string(merged.unit) + "\n";
	out += "# Cycles merged: " + std::to_string(cycles) + "\n";
	out += "# Columns: Elow Ehigh Value Err%\n";
	char buf[160];
	for (const MockBin& bin : merged.bins) {
		std::snprintf(buf, sizeof buf, "  %.10e  %.10e  %.10e  %10.4f\n", bin.elow, bin.ehigh,
		              bin.value, bin.err_pct);
		out += buf;
	}
	return out;
}

std::string render_sum_lis(const MockContainer& merged, int cycles) {
	std::string out;
	out += "# Detector: " + merged.detector + "\n";
	out += "# Card: " + merged.card + "   Unit: " + std::to_string(merged.unit) + "\n";
	out += "# Cycles merged: " + std::to_string(cycles) + "\n";
	out += "Total primaries run: " + std::to_string(merged.nps) + "\n";
	out += "\n";

	double integral = 0, sigma2 = 0, maximum = 0, max_err = 0;
	for (const MockBin& bin : merged.bins) {
		integral += bin.value;
		double sigma = bin.value * bin.err_pct / 100.0;
		sigma2 += sigma * sigma;
		if (bin.value > maximum) {
			maximum = bin.value;
			max_err = bin.err_pct;
		}
	}
	double integral_err = integral > 0 ? 100.0 * std::sqrt(sigma2) / integral : 0.0;
	char buf[160];
	out += "Totals:\n";
	std::snprintf(buf, sizeof buf, "  integral  %.10e  +/-  %10.4f %%\n", integral, integral_err);
	out += buf;
	std::snprintf(buf, sizeof buf, "  maximum   %.10e  +/-  %10.4f %%\n", maximum, max_err);
	out += buf;
	out += "\n";
	out += "# Columns: Elow Ehigh Value Err%\n";
	for (const MockBin& bin : merged.bins) {
		std::snprintf(buf, sizeof buf, "  %.10e  %.10e  %.10e  %10.4f\n", bin.elow, bin.ehigh,
		              bin.value, bin.err_pct);
		out += buf;
	}
	return out;
}

namespace {

nlohmann::json entry_to_json(const FileEntry& entry) {
	nlohmann::json j;
	j["type"] = entry.type == FileEntry::Type::sum ? "sum" : "tab";
	j["detector"] = entry.detector;
	if (entry.total_primaries) j["total_primaries"] = *entry.total_primaries;
	if (!entry.rows.empty()) {
		nlohmann::json rows = nlohmann::json::array();
		for (const TabRow& row : entry.rows)
			rows.push_back({row.elow, row.ehigh, row.value, row.err_pct});
		j["rows"] = std::move(rows);
	}
	if (!entry.totals.empty()) {
		nlohmann::json totals;
		for (const auto& [name, ve] : entry.totals)
			totals[name] = {{"value", ve.first}, {"err_pct", ve.second}};
		j["totals"] = std::move(totals);
	}
	if (entry.average_uncertainty) j["average_uncertainty"] = *entry.average_uncertainty;
	return j;
}

FileEntry entry_from_json(const nlohmann::json& j) {
	FileEntry entry;
	entry.type = j.at("type") == "sum" ? FileEntry::Type::sum : FileEntry::Type::tab;
	entry.detector = j.value("detector", "");
	if (j.contains("total_primaries"))
		entry.total_primaries = j["total_primaries"].get<long long>();
	if (j.contains("rows")) {
		for (const auto& row : j["rows"]) {
			TabRow r;
			r.elow = row.at(0).get<double>();
			r.ehigh = row.at(1).get<double>();
			r.value = row.at(2).get<double>();
			r.err_pct = row.at(3).get<double>();
			entry.rows.push_back(r);
		}
	}
	if (j.contains("totals")) {
		for (const auto& [name, ve] : j["totals"].items())
			entry.totals[name] = {ve.at("value").get<double>(), ve.at("err_pct").get<double>()};
	}
	if (j.contains("average_uncertainty"))
		entry.average_uncertainty = j["average_uncertainty"].get<double>();
	return entry;
}

} // namespace

FlukaData build_store(const std::vector<std::filesystem::path>& lis_paths,
                      const std::filesystem::path& json_out) {
	FlukaData data;
	for (const auto& path : lis_paths) {
		std::string name = path.filename().string();
		std::string text = read_file(path);
		FileEntry entry;
		if (name.ends_with("_sum.lis")) {
			SumSection sum = parse_sum(text);
			entry.type = FileEntry::Type::sum;
			entry.detector = sum.detector_name;
			entry.total_primaries = sum.total_primaries;
			entry.totals = sum.totals;
			entry.rows = sum.rows;
		} else {
			TabSection tab = parse_tab(text);
			entry.type = FileEntry::Type::tab;
			entry.detector = tab.detector_name;
			entry.rows = tab.rows;
			try {
				entry.average_uncertainty = average_uncertainty(tab.rows).average_uncertainty;
			} catch (const McError&) {
				// all-zero spectra stay without the field
			}
		}
		data.files[name] = std::move(entry);
	}

	nlohmann::json j;
	for (const auto& [name, entry] : data.files) j[name] = entry_to_json(entry);
	write_file_atomic(json_out, j.dump(2) + "\n");
	return data;
}

FlukaData load_store(const std::filesystem::path& json_path) {
	nlohmann::json j = nlohmann::json::parse(read_file(json_path));
	FlukaData data;
	for (const auto& [name, entry] : j.items()) data.files[name] = entry_from_json(entry);
	return data;
}

} // namespace mcforge
