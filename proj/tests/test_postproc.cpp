#include "mcforge/postproc.hpp"

#include <cmath>
#include <string>

#include "doctest.h"
#include "mcforge/errors.hpp"
#include "mcforge/mock_engine.hpp"
#include "mcforge/util.hpp"
#include "scoped_dir.hpp"

using namespace mcforge;

namespace {

std::string cycle_deck(int seed) {
	return "TITLE\n"
	       "@mock_bins=60\n"
	       "USRBDX 99.0 PIONS+- 46.0 regA regB 400.0 piFluenU\n"
	       "DETECT 1.0 0.0 0.0 0.0 0.0 0.0 tepcDet\n"
	       "RANDOMIZ 1.0 " +
	       std::to_string(seed) +
	       ".0\n"
	       "START 200000.0\n"
	       "STOP\n";
}

// Three finished cycles inside dir, as the runner would leave them.
void run_cycles(ScopedDir& dir, int n = 3) {
	for (int i = 1; i <= n; ++i) {
		auto input = dir.file("cycle_0" + std::to_string(i) + ".inp", cycle_deck(i));
		mock_run_input_file(input);
	}
}

MockContainer sample_container() {
	MockContainer c;
	c.unit = 46;
	c.card = "USRBDX";
	c.detector = "piFluenU";
	c.nps = 600000;
	c.bins = {{1e-9, 2e-9, 40.0, 2.5}, {2e-9, 3e-9, 60.0, 1.25}, {3e-9, 4e-9, 0.0, 100.0}};
	return c;
}

} // namespace

TEST_CASE("tab rendering round-trips through the parser") {
	MockContainer c = sample_container();
	TabSection tab = parse_tab(render_tab_lis(c, 3));
	CHECK(tab.detector_name == "piFluenU");
	REQUIRE(tab.rows.size() == 3);
	CHECK(tab.rows[0].elow == doctest::Approx(1e-9));
	CHECK(tab.rows[1].value == doctest::Approx(60.0));
	CHECK(tab.rows[2].err_pct == doctest::Approx(100.0));
}

TEST_CASE("sum rendering round-trips through the parser") {
	MockContainer c = sample_container();
	SumSection sum = parse_sum(render_sum_lis(c, 3));
	CHECK(sum.detector_name == "piFluenU");
	CHECK(sum.total_primaries == 600000);
	REQUIRE(sum.totals.count("integral") == 1);
	REQUIRE(sum.totals.count("maximum") == 1);
	CHECK(sum.totals["integral"].first == doctest::Approx(100.0));
	// independent quadrature: sqrt((40*0.025)^2 + (60*0.0125)^2) / 100 * 100%
	double expected = 100.0 * std::sqrt(1.0 + 0.5625) / 100.0;
	CHECK(sum.totals["integral"].second == doctest::Approx(expected).epsilon(1e-4));
	CHECK(sum.totals["maximum"].first == doctest::Approx(60.0));
	CHECK(sum.totals["maximum"].second == doctest::Approx(1.25));
	REQUIRE(sum.rows.size() == 3);
}

TEST_CASE("parsers tolerate prose-style layouts") {
	std::string text =
	    "myDetector\n"
	    "\n"
	    "some descriptive text, 1 range from 2 to 3\n"
	    "    TOTAL PRIMARIES RUN:      5000\n"
	    "\n"
	    " 1.0e-03 2.0e-03 7.5 12.0 extra trailing words\n"
	    " 2.0e-03 3.0e-03 2.5 30.0\n"
	    "end of detector output\n";
	SumSection sum = parse_sum(text);
	CHECK(sum.detector_name == "myDetector");
	CHECK(sum.total_primaries == 5000);
	REQUIRE(sum.rows.size() == 2);
	CHECK(sum.rows[0].value == doctest::Approx(7.5));

	TabSection tab = parse_tab(text);
	CHECK(tab.rows.size() == 2);
}

TEST_CASE("prose after the table ends it without error") {
	TabSection tab = parse_tab("det\n 1.0 2.0 3.0 4.0\nDone.\n 9 9 9 9\n");
	CHECK(tab.rows.size() == 1);
}

TEST_CASE("a short numeric row is ragged") {
	try {
		parse_tab("det\n 1.0 2.0 3.0 4.0\n 1.0 2.0 3.0\n");
		FAIL("expected ragged_row");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::ragged_row);
		CHECK(std::string(e.what()).find("line 3") != std::string::npos);
	}
}

TEST_CASE("text without a numeric table is rejected") {
	try {
		parse_tab("only prose here\nand here\n");
		FAIL("expected no_numeric_table");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::no_numeric_table);
	}
}

TEST_CASE("a sum file without the primaries line is rejected") {
	try {
		parse_sum("det\n 1.0 2.0 3.0 4.0\n");
		FAIL("expected missing_primaries");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::missing_primaries);
	}
}

TEST_CASE("decrypt_all merges every unit and keeps a log") {
	ScopedDir dir("decrypt");
	run_cycles(dir);
	UtilityTable table = UtilityTable::mock(default_mock_command());

	DecryptResult result = decrypt_all(dir.path(), table, 3);
	REQUIRE(result.lis_paths.size() == 4);
	CHECK(result.lis_paths[0].filename() == "output_fort_17_sum.lis");
	CHECK(result.lis_paths[1].filename() == "output_fort_17_tab.lis");
	CHECK(result.lis_paths[2].filename() == "output_fort_46_sum.lis");
	CHECK(result.lis_paths[3].filename() == "output_fort_46_tab.lis");
	CHECK(result.warnings.empty());

	std::string log = read_file(result.log_path);
	// unit 17 carries detector data, so its dedicated utility is tried first
	CHECK(log.find("### unit 17 via detsuw") != std::string::npos);
	CHECK(log.find("### unit 17 via usxsuw") == std::string::npos);
	CHECK(log.find("### unit 46 via usxsuw") != std::string::npos);

	TabSection tab = parse_tab(read_file(result.lis_paths[3]));
	CHECK(tab.detector_name == "piFluenU");
	CHECK(tab.rows.size() == 60);
	SumSection sum = parse_sum(read_file(result.lis_paths[2]));
	CHECK(sum.total_primaries == 600000);
}

TEST_CASE("utilities are tried in order until one accepts the data") {
	ScopedDir dir("decrypt");
	run_cycles(dir);
	std::string cmd = default_mock_command();
	UtilityTable table;
	table.entries = {
	    {"detsuw", cmd + " decrypt --expect DETECT", "DETECT"},
	    {"usxsuw", cmd + " decrypt --expect USRBDX", "USRBDX"},
	};

	DecryptResult result = decrypt_all(dir.path(), table, 3);
	REQUIRE(result.lis_paths.size() == 4);
	std::string log = read_file(result.log_path);
	CHECK(log.find("### unit 46 via detsuw") != std::string::npos);
	CHECK(log.find("not DETECT") != std::string::npos);
	CHECK(log.find("exit code 3") != std::string::npos);
	CHECK(log.find("### unit 46 via usxsuw") != std::string::npos);
}

TEST_CASE("a directory without binary outputs is rejected") {
	ScopedDir dir("decrypt");
	dir.file("readme.txt", "nothing to see\n");
	try {
		decrypt_all(dir.path(), UtilityTable::mock(default_mock_command()), 1);
		FAIL("expected no_binary_files");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::no_binary_files);
	}
}

TEST_CASE("exhausting the utility table is an error naming the failures") {
	ScopedDir dir("decrypt");
	run_cycles(dir, 1);
	std::string cmd = default_mock_command();
	UtilityTable table;
	table.entries = {{"detsuw", cmd + " decrypt --expect DETECT", "DETECT"}};
	try {
		decrypt_all(dir.path(), table, 1);
		FAIL("expected all_utilities_failed");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::all_utilities_failed);
		std::string what = e.what();
		CHECK(what.find("unit 46") != std::string::npos);
		CHECK(what.find("detsuw") != std::string::npos);
		CHECK(what.find("not DETECT") != std::string::npos);
	}
}

TEST_CASE("a cycle-count mismatch is reported as a warning") {
	ScopedDir dir("decrypt");
	run_cycles(dir, 3);
	DecryptResult result = decrypt_all(dir.path(), UtilityTable::mock(default_mock_command()), 5);
	REQUIRE(result.warnings.size() == 2); // one per unit
	CHECK(result.warnings[0].find("expected 5") != std::string::npos);
}

TEST_CASE("the store is written with stable keys and reloads identically") {
	ScopedDir dir("decrypt");
	run_cycles(dir);
	DecryptResult result = decrypt_all(dir.path(), UtilityTable::mock(default_mock_command()), 3);
	auto json_path = dir.path() / "fluka_data.json";
	FlukaData built = build_store(result.lis_paths, json_path);
	REQUIRE(built.files.size() == 4);

	const FileEntry& sum17 = built.files.at("output_fort_17_sum.lis");
	CHECK(sum17.type == FileEntry::Type::sum);
	CHECK(sum17.detector == "tepcDet");
	REQUIRE(sum17.total_primaries.has_value());
	CHECK(*sum17.total_primaries == 600000);
	CHECK(sum17.totals.count("integral") == 1);

	const FileEntry& tab46 = built.files.at("output_fort_46_tab.lis");
	CHECK(tab46.type == FileEntry::Type::tab);
	CHECK(tab46.rows.size() == 60);
	REQUIRE(tab46.average_uncertainty.has_value());
	CHECK(*tab46.average_uncertainty > 0.0);

	std::string text = read_file(json_path);
	auto p17s = text.find("output_fort_17_sum.lis");
	auto p17t = text.find("output_fort_17_tab.lis");
	auto p46s = text.find("output_fort_46_sum.lis");
	auto p46t = text.find("output_fort_46_tab.lis");
	CHECK(p17s < p17t);
	CHECK(p17t < p46s);
	CHECK(p46s < p46t);

	FlukaData loaded = load_store(json_path);
	CHECK(loaded == built);
}
