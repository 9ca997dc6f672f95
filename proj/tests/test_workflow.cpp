#include "mcforge/workflow.hpp"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mcforge/deck.hpp"
#include "mcforge/errors.hpp"
#include "mcforge/postproc.hpp"
#include "mcforge/util.hpp"
#include "scoped_dir.hpp"

using namespace mcforge;

namespace {

// Calibrated so five 200k cycles merge to exactly 12.5% everywhere: each
// cycle carries 12.5 * sqrt(1e6 / nps) and merging divides by sqrt(cycles).
std::string general_template() {
	return "TITLE\n"
	       "@mock_bins=40\n"
	       "@mock_err_ref=12.5\n"
	       "@mock_err_ref_nps=1000000\n"
	       "USRBDX 99.0 PIONS+- 46.0 regA regB 400.0 piFluenU\n"
	       "RANDOMIZ 1.0 {seed}\n"
	       "START {nps}\n"
	       "STOP\n";
}

std::string micro_template() {
	return "TITLE\n"
	       "@mock_bins=50\n"
	       "DETECT 1.0 0.0 0.0 0.0 0.0 0.0 tepcDet\n"
	       "RANDOMIZ 1.0 {seed}\n"
	       "START {nps}\n"
	       "STOP\n";
}

WorkflowConfig base_config(const ScopedDir& dir, const std::string& tmpl) {
	WorkflowConfig cfg;
	cfg.template_path = dir.file("template.inp", tmpl);
	cfg.params_path = dir.file("params.csv", "nps,200000\n");
	cfg.output_dir = dir.path() / "run";
	cfg.cycles = 5;
	return cfg;
}

std::vector<std::string> steps_of(const WorkflowResult& res) {
	std::vector<std::string> steps;
	for (const TraceEvent& e : res.trace) steps.push_back(e.step);
	return steps;
}

} // namespace

TEST_CASE("run_workflow refines once when the first pass misses the target") {
	ScopedDir dir("wf_refine");
	WorkflowConfig cfg = base_config(dir, general_template());
	cfg.uncertainty_target = 10.0;
	cfg.max_refinements = 1;

	WorkflowResult res = run_workflow(cfg);

	CHECK(res.refinements == 1);
	CHECK(res.checked);
	CHECK(res.last_report.average_uncertainty == doctest::Approx(12.5).epsilon(1e-9));
	CHECK(res.total_primaries == 1000000); // five cycles at the original 200k

	// (12.5 / 10)^2 * 1e6, rounded up to the next 100k
	CHECK(*load_parameters(cfg.params_path).find("nps") == "1600000");

	std::vector<std::string> expect = {
	    "Generate", "Execute", "Decrypt", "Store", "CheckUncertainty", "EstimateNps",
	    "UpdateParams", "Generate", "Execute", "Decrypt", "Store", "Plot", "Finish"};
	CHECK(steps_of(res) == expect);

	for (int i = 1; i <= 5; ++i) {
		auto deck = cfg.output_dir / ("example_0" + std::to_string(i) + ".inp");
		CHECK(std::filesystem::exists(deck));
	}
	CHECK(std::filesystem::exists(cfg.output_dir / "AutoFLUKA_job1.sh"));
	CHECK(std::filesystem::exists(cfg.output_dir / "decryption_logs"));

	CHECK(res.store_path == cfg.output_dir / "fluka_data.json");
	FlukaData data = load_store(res.store_path);
	REQUIRE(data.files.count("output_fort_46_sum.lis") == 1);
	REQUIRE(data.files.count("output_fort_46_tab.lis") == 1);
	// refined pass ran five cycles of the new 1.6M primaries each
	CHECK(*data.files.at("output_fort_46_sum.lis").total_primaries == 8000000);
	CHECK(data.files.at("output_fort_46_tab.lis").rows.size() == 40);

	REQUIRE(res.artifacts.size() == 2);
	CHECK(res.artifacts[0].filename() == std::filesystem::path("output_fort_46_sum.svg"));
	CHECK(res.artifacts[1].filename() == std::filesystem::path("output_fort_46_tab.svg"));
	for (const auto& p : res.artifacts) CHECK(std::filesystem::exists(p));

	auto trace = nlohmann::json::parse(read_file(res.trace_path));
	REQUIRE(trace.is_array());
	REQUIRE(trace.size() == res.trace.size());
	std::string ts = trace[0]["timestamp"];
	CHECK(ts.size() == 20);
	CHECK(ts[10] == 'T');
	CHECK(ts.back() == 'Z');
	CHECK(trace[0]["detail"].get<std::string>().find("template.inp") != std::string::npos);
	CHECK(trace[4]["detail"] == "output_fort_46_tab.lis");
	CHECK(trace[6]["detail"] == "nps = 1600000");
}

TEST_CASE("a first pass under target skips refinement") {
	ScopedDir dir("wf_pass");
	WorkflowConfig cfg = base_config(dir, general_template());
	cfg.uncertainty_target = 20.0;

	WorkflowResult res = run_workflow(cfg);

	CHECK(res.refinements == 0);
	CHECK(res.checked);
	CHECK(res.last_report.average_uncertainty == doctest::Approx(12.5).epsilon(1e-9));
	std::vector<std::string> expect = {"Generate", "Execute", "Decrypt",
	                                   "Store",    "CheckUncertainty", "Plot", "Finish"};
	CHECK(steps_of(res) == expect);
	CHECK(read_file(cfg.params_path) == "nps,200000\n"); // untouched, byte for byte
}

TEST_CASE("max_refinements zero records the miss and carries on") {
	ScopedDir dir("wf_capped");
	WorkflowConfig cfg = base_config(dir, general_template());
	cfg.uncertainty_target = 10.0;
	cfg.max_refinements = 0;

	WorkflowResult res = run_workflow(cfg);

	CHECK(res.refinements == 0);
	CHECK(res.checked);
	CHECK(res.last_report.average_uncertainty == doctest::Approx(12.5).epsilon(1e-9));
	std::vector<std::string> expect = {"Generate", "Execute", "Decrypt",
	                                   "Store",    "CheckUncertainty", "Plot", "Finish"};
	CHECK(steps_of(res) == expect);
	CHECK(read_file(cfg.params_path) == "nps,200000\n");
}

TEST_CASE("the check reruns while refinements remain") {
	ScopedDir dir("wf_budget");
	WorkflowConfig cfg = base_config(dir, general_template());
	cfg.uncertainty_target = 10.0;
	cfg.max_refinements = 2;

	WorkflowResult res = run_workflow(cfg);

	// 8M total primaries push the flat error to 12.5 / sqrt(8) percent
	CHECK(res.refinements == 1);
	CHECK(res.last_report.average_uncertainty ==
	      doctest::Approx(12.5 / std::sqrt(8.0)).epsilon(1e-4));
	CHECK(res.total_primaries == 8000000);
	std::vector<std::string> expect = {
	    "Generate", "Execute", "Decrypt", "Store", "CheckUncertainty", "EstimateNps",
	    "UpdateParams", "Generate", "Execute", "Decrypt", "Store", "CheckUncertainty",
	    "Plot", "Finish"};
	CHECK(steps_of(res) == expect);
}

TEST_CASE("microdosimetry mode emits the analysis chain") {
	ScopedDir dir("wf_micro");
	WorkflowConfig cfg;
	cfg.template_path = dir.file("template.inp", micro_template());
	cfg.params_path = dir.file("params.csv", "nps,200000\n");
	cfg.output_dir = dir.path() / "run";
	cfg.cycles = 3;
	cfg.mode = WorkflowMode::microdosimetry;
	cfg.monitor_unit = 17;
	cfg.uncertainty_target = 50.0;

	WorkflowResult res = run_workflow(cfg);

	std::vector<std::string> expect = {"Generate", "Execute", "Decrypt",
	                                   "Store",    "CheckUncertainty", "Rebin",
	                                   "Analyze",  "Finish"};
	CHECK(steps_of(res) == expect);

	REQUIRE(res.artifacts.size() == 4);
	CHECK(res.artifacts[0].filename() == std::filesystem::path("tepc_log_data.json"));
	CHECK(res.artifacts[1].filename() == std::filesystem::path("ydy_spectrum.svg"));
	CHECK(res.artifacts[2].filename() == std::filesystem::path("lineal_distributions.csv"));
	CHECK(res.artifacts[3].filename() == std::filesystem::path("micro_summary.json"));
	for (const auto& p : res.artifacts) CHECK(std::filesystem::exists(p));

	// rebinning conserves the decrypted totals
	FlukaData data = load_store(res.store_path);
	double tab_total = 0;
	for (const TabRow& row : data.files.at("output_fort_17_tab.lis").rows)
		tab_total += row.value;
	auto log_data = nlohmann::json::parse(read_file(cfg.output_dir / "tepc_log_data.json"));
	CHECK(log_data["bins_per_decade"] == 60);
	double log_total = 0;
	for (const auto& bin : log_data["bins"]) {
		CHECK(bin[0].get<double>() > 0);
		CHECK(bin[1].get<double>() > bin[0].get<double>());
		log_total += bin[2].get<double>();
	}
	CHECK(log_total == doctest::Approx(tab_total).epsilon(1e-9));

	auto summary = nlohmann::json::parse(read_file(cfg.output_dir / "micro_summary.json"));
	CHECK(summary["kernel"] == "icru40");
	CHECK(summary["yF"].get<double>() > 0);
	CHECK(summary["yD"].get<double>() >= summary["yF"].get<double>());
	CHECK(summary["q_avg"].get<double>() > 0);
	CHECK(summary["sigma_q"].get<double>() >= 0);
	CHECK(summary["e_mean"].get<double>() > 0);
}

TEST_CASE("a declined deck review aborts before execution") {
	ScopedDir dir("wf_decline");
	WorkflowConfig cfg = base_config(dir, general_template());
	cfg.uncertainty_target = 20.0;

	std::vector<std::string> stages;
	try {
		run_workflow(cfg, [&](std::string_view stage, const std::filesystem::path& review) {
			stages.push_back(std::string(stage));
			CHECK(std::filesystem::exists(review));
			return false;
		});
		FAIL("expected approval_declined");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::approval_declined);
		CHECK(std::string(e.what()).find("decks") != std::string::npos);
	}
	CHECK(stages == std::vector<std::string>{"decks"});

	auto listing = read_file(cfg.output_dir / "review_decks.txt");
	CHECK(listing.find("example_01.inp") != std::string::npos);
	CHECK(listing.find("example_05.inp") != std::string::npos);
	CHECK_FALSE(std::filesystem::exists(cfg.output_dir / "fluka_data.json"));

	auto trace = nlohmann::json::parse(read_file(cfg.output_dir / "workflow_trace.json"));
	REQUIRE(trace.size() == 1);
	CHECK(trace[0]["step"] == "Generate");
}

TEST_CASE("a declined plot review aborts before finish") {
	ScopedDir dir("wf_decline2");
	WorkflowConfig cfg = base_config(dir, general_template());
	cfg.uncertainty_target = 20.0;

	std::vector<std::string> stages;
	try {
		run_workflow(cfg, [&](std::string_view stage, const std::filesystem::path&) {
			stages.push_back(std::string(stage));
			return stage != "plots";
		});
		FAIL("expected approval_declined");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::approval_declined);
		CHECK(std::string(e.what()).find("plots") != std::string::npos);
	}
	CHECK(stages == std::vector<std::string>{"decks", "plots"});

	auto listing = read_file(cfg.output_dir / "review_plots.txt");
	CHECK(listing.find("output_fort_46_tab.svg") != std::string::npos);

	auto trace = nlohmann::json::parse(read_file(cfg.output_dir / "workflow_trace.json"));
	CHECK(trace.back()["step"] == "Plot");
}

TEST_CASE("job failures surface as a workflow step error") {
	ScopedDir dir("wf_fail");
	WorkflowConfig cfg = base_config(dir, general_template());
	cfg.executable = "/bin/false";

	try {
		run_workflow(cfg);
		FAIL("expected workflow_step_failed");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::workflow_step_failed);
		std::string what = e.what();
		CHECK(what.rfind("Execute: ", 0) == 0);
		CHECK(what.find("5 of 5 jobs failed") != std::string::npos);
	}
	auto trace = nlohmann::json::parse(read_file(cfg.output_dir / "workflow_trace.json"));
	CHECK(trace.back()["step"] == "Execute");
}

TEST_CASE("a missing template is reported as a Generate failure") {
	ScopedDir dir("wf_missing");
	WorkflowConfig cfg;
	cfg.template_path = dir.path() / "nope.inp";
	cfg.params_path = dir.file("params.csv", "nps,1000\n");
	cfg.output_dir = dir.path() / "run";

	try {
		run_workflow(cfg);
		FAIL("expected workflow_step_failed");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::workflow_step_failed);
		CHECK(std::string(e.what()).rfind("Generate: ", 0) == 0);
	}
}

TEST_CASE("workflow_config_from maps the config and loads gains") {
	ScopedDir dir("wf_cfg");
	dir.file("gains.csv", "energy,gain\n1e-2,3\n1e-3,2\n");
	Config cfg;
	cfg.mode = "microdosimetry";
	cfg.appendix_literal_sums = true;
	cfg.gains_path = dir.path() / "gains.csv";
	cfg.dt_nm = 100;
	cfg.flag = 1;
	cfg.plot_semilogy = true;

	WorkflowConfig wf = workflow_config_from(cfg);
	CHECK(wf.mode == WorkflowMode::microdosimetry);
	CHECK(wf.convention == SumConvention::plain);
	CHECK(wf.geometry.dt_nm == doctest::Approx(100));
	CHECK(wf.geometry.flag == 1);
	REQUIRE(wf.gains.points.size() == 2);
	CHECK(wf.gains.points[0].energy == doctest::Approx(1e-3)); // sorted by energy
	CHECK(wf.gains.points[1].gain == doctest::Approx(3));
	CHECK(wf.plot_flags.semilogy);

	// headerless tables work too
	dir.file("bare.csv", "1e-3,2\n1e-2,3\n");
	Config bare = cfg;
	bare.gains_path = dir.path() / "bare.csv";
	CHECK(workflow_config_from(bare).gains.points.size() == 2);

	dir.file("bad.csv", "energy,gain\n1e-3,2\nten,4\n");
	Config bad = cfg;
	bad.gains_path = dir.path() / "bad.csv";
	try {
		workflow_config_from(bad);
		FAIL("expected bad_config");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::bad_config);
	}
}

TEST_CASE("update_params rewrites exactly one cell in pairs layout") {
	ScopedDir dir("params");
	auto path = dir.file("p.csv", "alpha,1\nnps, 200000\nbeta,3\n");
	update_params(path, "nps", "1600000");
	CHECK(read_file(path) == "alpha,1\nnps,1600000\nbeta,3\n");
	update_params(path, "nps", "1600000");
	CHECK(read_file(path) == "alpha,1\nnps,1600000\nbeta,3\n");
}

TEST_CASE("update_params rewrites the matching column in header layout") {
	ScopedDir dir("params");
	auto path = dir.file("p.csv", "nps,seed,beam_pos_z,density\n600000,10,-50,3.84615e-06\n");
	update_params(path, "seed", "42");
	CHECK(read_file(path) == "nps,seed,beam_pos_z,density\n600000,42,-50,3.84615e-06\n");
}

TEST_CASE("update_params preserves CRLF line endings") {
	ScopedDir dir("params");
	auto path = dir.file("p.csv", "nps,200000\r\nseed,7\r\n");
	update_params(path, "seed", "9");
	CHECK(read_file(path) == "nps,200000\r\nseed,9\r\n");
}

TEST_CASE("update_params rejects unknown names") {
	ScopedDir dir("params");
	auto path = dir.file("p.csv", "nps,200000\n");
	try {
		update_params(path, "seed", "1");
		FAIL("expected unknown_parameter");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::unknown_parameter);
		CHECK(std::string(e.what()).find("seed") != std::string::npos);
	}
}
