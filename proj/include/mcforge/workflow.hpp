#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mcforge/config.hpp"
#include "mcforge/microdose.hpp"
#include "mcforge/plotsvg.hpp"
#include "mcforge/postproc.hpp"
#include "mcforge/stats.hpp"

namespace mcforge {

enum class WorkflowStep {
	Generate,
	Execute,
	Decrypt,
	Store,
	CheckUncertainty,
	EstimateNps,
	UpdateParams,
	Rebin,
	Analyze,
	Plot,
	Finish,
};

std::string_view step_name(WorkflowStep step);

enum class WorkflowMode { general, microdosimetry };

struct WorkflowConfig {
	std::filesystem::path template_path;
	std::filesystem::path params_path;
	std::filesystem::path output_dir;
	std::string prefix = "example";
	int cycles = 5;
	long long base_seed = 1;
	double uncertainty_target = 10.0;
	int monitor_unit = 46;
	WorkflowMode mode = WorkflowMode::general;
	SiteGeometry geometry;
	GainTable gains; // applied in micro mode when geometry.flag == 1
	int max_refinements = 1;
	double granularity = 100000;
	std::string nps_parameter = "nps";
	std::string executable; // engine command; empty selects the bundled mock
	int max_parallel = 0;
	UtilityTable utilities; // empty selects the mock utility table
	std::string kernel = "icru40";
	SumConvention convention = SumConvention::dy_weighted;
	int bins_per_decade = 60;
	PlotFlags plot_flags = {false, false, false, true, false};
};

/// Assemble the workflow-relevant part of a loaded Config.
WorkflowConfig workflow_config_from(const Config& cfg);

struct TraceEvent {
	std::string step;
	std::string detail;
	std::string timestamp;
};

struct WorkflowResult {
	int refinements = 0;
	bool checked = false;           // CheckUncertainty ran at least once
	UncertaintyReport last_report{};
	long long total_primaries = 0;
	std::filesystem::path store_path;
	std::filesystem::path trace_path;
	std::vector<std::filesystem::path> artifacts;
	std::vector<TraceEvent> trace;
};

/// Review callback for the two human-in-the-loop pause points ("decks",
/// "plots").  Returning false aborts with ApprovalDeclined; no callback
/// means auto-approval.
using Approver = std::function<bool(std::string_view stage, const std::filesystem::path& review)>;

/// The individual pipeline operations, shared by every driver (the
/// deterministic loop, the tool-calling orchestrator, the CLI).  Each method
/// appends its trace event, flushes the trace on failure and wraps errors as
/// workflow_step_failed naming the step; both human review pause points live
/// inside generate() and finish() so all drivers pause identically.
class Pipeline {
public:
	explicit Pipeline(const WorkflowConfig& cfg, Approver approver = {});

	const std::vector<std::filesystem::path>& generate();
	std::string execute(); // total wall time
	const DecryptResult& decrypt();
	const std::filesystem::path& store();
	UncertaintyReport check_uncertainty();
	NpsEstimate estimate_nps(std::optional<double> current_u = {},
	                         std::optional<double> target_u = {},
	                         std::optional<std::uint64_t> current_nps = {});
	void update_param(std::string_view name, std::string_view value);
	LinearSpectrum weight_gains(); // explicit gain weighting ahead of rebin()
	LogSpectrum rebin(std::optional<int> bins_per_decade = {});
	double analyze(std::optional<std::string> kernel = {}); // mean quality factor
	std::vector<std::filesystem::path> plot();
	void finish();

	const WorkflowConfig& config() const { return cfg_; }
	WorkflowResult& result() { return result_; }
	const FlukaData& store_data() const { return store_data_; }

private:
	template <typename Fn>
	auto guarded(WorkflowStep step, const std::string& detail, Fn&& fn);
	void enter(WorkflowStep step, const std::string& detail);
	void flush_trace();
	void review(std::string_view stage, const std::string& filename,
	            const std::vector<std::filesystem::path>& items);
	std::vector<TabRow> monitored_rows() const;

	WorkflowConfig cfg_;
	Approver approver_;
	std::string engine_;
	UtilityTable utilities_;
	std::string tab_key_;
	std::string sum_key_;
	std::vector<std::filesystem::path> decks_;
	DecryptResult dec_;
	FlukaData store_data_;
	std::optional<LinearSpectrum> weighted_;
	std::optional<LogSpectrum> rebinned_;
	WorkflowResult result_;
};

/// Deterministic pipeline: Generate -> Execute -> Decrypt -> Store ->
/// CheckUncertainty, refining via EstimateNps/UpdateParams up to
/// max_refinements (the check is skipped after the last allowed refinement),
/// then Plot (general) or Rebin -> Analyze (microdosimetry) and Finish.
/// The trace is written to <output_dir>/workflow_trace.json.
WorkflowResult run_workflow(const WorkflowConfig& cfg, const Approver& approver = {});

/// Rewrite exactly one CSV cell, byte-preserving everything else.
void update_params(const std::filesystem::path& params_path, std::string_view name,
                   std::string_view value);

} // namespace mcforge
