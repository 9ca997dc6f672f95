#include "mcforge/workflow.hpp"

#include <chrono>
#include <ctime>

#include "json.hpp"
#include "mcforge/deck.hpp"
#include "mcforge/errors.hpp"
#include "mcforge/runner.hpp"
#include "mcforge/util.hpp"

namespace mcforge {

std::string_view step_name(WorkflowStep step) {
	switch (step) {
	case WorkflowStep::Generate: return "Generate";
	case WorkflowStep::Execute: return "Execute";
	case WorkflowStep::Decrypt: return "Decrypt";
	case WorkflowStep::Store: return "Store";
	case WorkflowStep::CheckUncertainty: return "CheckUncertainty";
	case WorkflowStep::EstimateNps: return "EstimateNps";
	case WorkflowStep::UpdateParams: return "UpdateParams";
	case WorkflowStep::Rebin: return "Rebin";
	case WorkflowStep::Analyze: return "Analyze";
	case WorkflowStep::Plot: return "Plot";
	case WorkflowStep::Finish: return "Finish";
	}
	return "?";
}

WorkflowConfig workflow_config_from(const Config& cfg) {
	WorkflowConfig wf;
	wf.template_path = cfg.template_path;
	wf.params_path = cfg.params_path;
	wf.output_dir = cfg.output_dir;
	wf.prefix = cfg.prefix;
	wf.cycles = cfg.cycles;
	wf.uncertainty_target = cfg.uncertainty_target;
	wf.monitor_unit = cfg.monitor_unit;
	wf.mode = cfg.mode == "microdosimetry" ? WorkflowMode::microdosimetry
	                                       : WorkflowMode::general;
	wf.geometry.dt_nm = cfg.dt_nm;
	wf.geometry.clf = cfg.clf;
	wf.geometry.flag = cfg.flag;
	wf.max_refinements = cfg.max_refinements;
	wf.granularity = cfg.granularity;
	wf.nps_parameter = cfg.nps_parameter;
	wf.executable = cfg.executable;
	wf.max_parallel = cfg.max_parallel;
	wf.kernel = cfg.kernel;
	wf.convention =
	    cfg.appendix_literal_sums ? SumConvention::plain : SumConvention::dy_weighted;
	wf.bins_per_decade = cfg.bins_per_decade;
	wf.plot_flags = {cfg.plot_error_bars, cfg.plot_blocks, cfg.plot_log_scale,
	                 cfg.plot_semilogx, cfg.plot_semilogy};
	if (!cfg.gains_path.empty()) {
		bool first_row = true;
		for (const std::string& raw_line : split_lines(read_file(cfg.gains_path))) {
			std::string_view line = trim(raw_line);
			if (line.empty() || line.front() == '#') continue;
			auto cells = split(line, ',');
			auto e = cells.size() >= 2 ? parse_number(trim(cells[0])) : std::nullopt;
			auto g = cells.size() >= 2 ? parse_number(trim(cells[1])) : std::nullopt;
			if (!e || !g) {
				if (first_row) { // header row
					first_row = false;
					continue;
				}
				raise(Errc::bad_config, "gain table rows must be numeric energy,gain pairs");
			}
			first_row = false;
			wf.gains.points.push_back({*e, *g});
		}
		std::sort(wf.gains.points.begin(), wf.gains.points.end(),
		          [](const GainPoint& a, const GainPoint& b) { return a.energy < b.energy; });
	}
	return wf;
}

namespace {

std::string iso_now() {
	auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
	std::tm tm{};
	gmtime_r(&t, &tm);
	char buf[32];
	std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
	return buf;
}

struct CellRef {
	std::size_t begin = 0;
	std::size_t end = 0; // [begin, end) within the file text
};

std::string clean_cell_text(std::string_view raw) {
	std::string_view v = trim(raw);
	if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
	                      (v.front() == '\'' && v.back() == '\'')))
		v = v.substr(1, v.size() - 2);
	return std::string(trim(v));
}

// cell spans per line, commas excluded; blank lines yield no entry
std::vector<std::vector<CellRef>> scan_cells(const std::string& text) {
	std::vector<std::vector<CellRef>> lines;
	std::size_t pos = 0;
	while (pos <= text.size()) {
		std::size_t eol = text.find('\n', pos);
		std::size_t end = eol == std::string::npos ? text.size() : eol;
		std::size_t content_end = end;
		if (content_end > pos && text[content_end - 1] == '\r') --content_end;
		if (content_end > pos) {
			std::vector<CellRef> cells;
			std::size_t cell_start = pos;
			for (std::size_t i = pos; i <= content_end; ++i) {
				if (i == content_end || text[i] == ',') {
					cells.push_back({cell_start, i});
					cell_start = i + 1;
				}
			}
			lines.push_back(std::move(cells));
		}
		if (eol == std::string::npos) break;
		pos = eol + 1;
	}
	return lines;
}

} // namespace

void update_params(const std::filesystem::path& params_path, std::string_view name,
                   std::string_view value) {
	ParameterSet params = load_parameters(params_path); // validates the layout
	if (!params.find(name))
		raise(Errc::unknown_parameter,
		      "no parameter named '" + std::string(name) + "' in " + params_path.string());

	std::string text = read_file(params_path);
	auto lines = scan_cells(text);

	CellRef target;
	bool header_layout = false;
	if (lines.size() >= 2 && lines[0].size() == params.entries.size()) {
		header_layout = true;
		for (std::size_t i = 0; i < lines[0].size(); ++i) {
			auto cell = lines[0][i];
			if (clean_cell_text({text.data() + cell.begin, cell.end - cell.begin}) !=
			    params.entries[i].first) {
				header_layout = false;
				break;
			}
		}
	}
	if (header_layout) {
		for (std::size_t i = 0; i < lines[0].size(); ++i) {
			auto cell = lines[0][i];
			if (clean_cell_text({text.data() + cell.begin, cell.end - cell.begin}) == name) {
				target = lines[1][i];
				break;
			}
		}
	} else {
		for (const auto& cells : lines) {
			if (cells.size() < 2) continue;
			auto cell = cells[0];
			if (clean_cell_text({text.data() + cell.begin, cell.end - cell.begin}) == name) {
				target = cells[1];
				break;
			}
		}
	}
	if (target.end == 0)
		raise(Errc::unknown_parameter,
		      "no parameter named '" + std::string(name) + "' in " + params_path.string());

	std::string updated =
	    text.substr(0, target.begin) + std::string(value) + text.substr(target.end);
	write_file_atomic(params_path, updated);
}

Pipeline::Pipeline(const WorkflowConfig& cfg, Approver approver)
    : cfg_(cfg), approver_(std::move(approver)) {
	engine_ = cfg_.executable.empty() ? default_mock_command() + " run {input}"
	                                  : cfg_.executable;
	utilities_ = cfg_.utilities.entries.empty() ? UtilityTable::mock(default_mock_command())
	                                            : cfg_.utilities;
	tab_key_ = "output_fort_" + std::to_string(cfg_.monitor_unit) + "_tab.lis";
	sum_key_ = "output_fort_" + std::to_string(cfg_.monitor_unit) + "_sum.lis";
	std::filesystem::create_directories(cfg_.output_dir);
	result_.trace_path = cfg_.output_dir / "workflow_trace.json";
}

void Pipeline::enter(WorkflowStep step, const std::string& detail) {
	result_.trace.push_back({std::string(step_name(step)), detail, iso_now()});
}

void Pipeline::flush_trace() {
	nlohmann::json j = nlohmann::json::array();
	for (const TraceEvent& e : result_.trace)
		j.push_back({{"step", e.step}, {"detail", e.detail}, {"timestamp", e.timestamp}});
	write_file_atomic(result_.trace_path, j.dump(2) + "\n");
}

template <typename Fn>
auto Pipeline::guarded(WorkflowStep step, const std::string& detail, Fn&& fn) {
	enter(step, detail);
	try {
		return fn();
	} catch (const McError& e) {
		flush_trace();
		if (e.code() == Errc::approval_declined) throw;
		raise(Errc::workflow_step_failed, std::string(step_name(step)) + ": " + e.what());
	}
}

void Pipeline::review(std::string_view stage, const std::string& filename,
                      const std::vector<std::filesystem::path>& items) {
	auto path = cfg_.output_dir / filename;
	std::string body;
	for (const auto& p : items) body += p.string() + "\n";
	write_file(path, body);
	if (approver_ && !approver_(stage, path)) {
		flush_trace();
		raise(Errc::approval_declined, std::string(stage) + " review declined");
	}
}

std::vector<TabRow> Pipeline::monitored_rows() const {
	auto tab = store_data_.files.find(tab_key_);
	if (tab == store_data_.files.end())
		raise(Errc::workflow_step_failed, "store has no entry " + tab_key_);
	return tab->second.rows;
}

const std::vector<std::filesystem::path>& Pipeline::generate() {
	decks_ = guarded(WorkflowStep::Generate,
	                 std::to_string(cfg_.cycles) + " cycles from " +
	                     cfg_.template_path.filename().string(),
	                 [&] {
		                 ParameterSet params = load_parameters(cfg_.params_path);
		                 ParsedDeck tmpl = parse_deck(read_file(cfg_.template_path));
		                 CyclePlan plan{cfg_.prefix, cfg_.cycles, cfg_.base_seed,
		                                cfg_.output_dir};
		                 return generate_cycles(tmpl.deck, params, plan);
	                 });
	review("decks", "review_decks.txt", decks_);
	return decks_;
}

std::string Pipeline::execute() {
	return guarded(WorkflowStep::Execute, engine_, [&] {
		RunConfig rc;
		rc.executable = engine_;
		rc.execution_dir = cfg_.output_dir;
		rc.max_parallel = cfg_.max_parallel;
		auto scripts = emit_job_scripts(decks_, rc);
		ExecutionReport report = execute_all(scripts, rc);
		if (report.failures > 0)
			raise(Errc::workflow_step_failed,
			      std::to_string(report.failures) + " of " +
			          std::to_string(report.records.size()) +
			          " jobs failed; see the .err logs under " + cfg_.output_dir.string());
		return report.total_wall_time;
	});
}

const DecryptResult& Pipeline::decrypt() {
	dec_ = guarded(WorkflowStep::Decrypt, "",
	               [&] { return decrypt_all(cfg_.output_dir, utilities_, cfg_.cycles); });
	return dec_;
}

const std::filesystem::path& Pipeline::store() {
	result_.store_path = guarded(WorkflowStep::Store, "fluka_data.json", [&] {
		auto path = cfg_.output_dir / "fluka_data.json";
		store_data_ = build_store(dec_.lis_paths, path);
		return path;
	});
	weighted_.reset(); // fresh data supersedes any earlier weighting
	return result_.store_path;
}

UncertaintyReport Pipeline::check_uncertainty() {
	auto report = guarded(WorkflowStep::CheckUncertainty, tab_key_, [&] {
		auto rows = monitored_rows();
		auto sum = store_data_.files.find(sum_key_);
		if (sum == store_data_.files.end() || !sum->second.total_primaries)
			raise(Errc::workflow_step_failed, "store has no primaries count under " + sum_key_);
		result_.total_primaries = *sum->second.total_primaries;
		return average_uncertainty(rows);
	});
	result_.last_report = report;
	result_.checked = true;
	return report;
}

NpsEstimate Pipeline::estimate_nps(std::optional<double> current_u,
                                   std::optional<double> target_u,
                                   std::optional<std::uint64_t> current_nps) {
	double u = current_u.value_or(result_.last_report.average_uncertainty);
	double t = target_u.value_or(cfg_.uncertainty_target);
	std::uint64_t n = current_nps.value_or(static_cast<std::uint64_t>(result_.total_primaries));
	return guarded(WorkflowStep::EstimateNps,
	               "u " + std::to_string(u) + "% vs target " + std::to_string(t) + "%", [&] {
		               return required_nps(u, t, n,
		                                   static_cast<std::uint64_t>(cfg_.granularity));
	               });
}

void Pipeline::update_param(std::string_view name, std::string_view value) {
	guarded(WorkflowStep::UpdateParams, std::string(name) + " = " + std::string(value), [&] {
		update_params(cfg_.params_path, name, value);
		++result_.refinements;
		return 0;
	});
}

LinearSpectrum Pipeline::weight_gains() {
	LinearSpectrum lin;
	for (const TabRow& row : monitored_rows())
		lin.bins.push_back({row.elow, row.ehigh, row.value, row.value * row.err_pct / 100.0});
	weighted_ = weight_with_gains(lin, cfg_.gains);
	return *weighted_;
}

LogSpectrum Pipeline::rebin(std::optional<int> bins_per_decade) {
	int bins = bins_per_decade.value_or(cfg_.bins_per_decade);
	rebinned_ = guarded(WorkflowStep::Rebin, tab_key_, [&] {
		LinearSpectrum lin;
		if (weighted_) {
			lin = *weighted_;
		} else {
			for (const TabRow& row : monitored_rows())
				lin.bins.push_back(
				    {row.elow, row.ehigh, row.value, row.value * row.err_pct / 100.0});
			if (cfg_.geometry.flag == 1 && !cfg_.gains.points.empty())
				lin = weight_with_gains(lin, cfg_.gains);
		}
		LogSpectrum rebinned = log_rebin(to_lineal(lin, cfg_.geometry), bins);

		nlohmann::json j;
		j["bins_per_decade"] = rebinned.bins_per_decade;
		nlohmann::json out_bins = nlohmann::json::array();
		for (const SpectrumBin& bin : rebinned.bins)
			out_bins.push_back({bin.elow, bin.ehigh, bin.counts, bin.sigma});
		j["bins"] = std::move(out_bins);
		auto path = cfg_.output_dir / "tepc_log_data.json";
		write_file_atomic(path, j.dump(2) + "\n");
		result_.artifacts.push_back(path);
		return rebinned;
	});
	return *rebinned_;
}

double Pipeline::analyze(std::optional<std::string> kernel) {
	std::string k = kernel.value_or(cfg_.kernel);
	return guarded(WorkflowStep::Analyze, k, [&] {
		if (!rebinned_)
			raise(Errc::workflow_step_failed, "no rebinned spectrum; run the rebin step first");
		MicroSpectra ms = compute_spectra(*rebinned_, cfg_.geometry, k, cfg_.convention);
		propagate_uncertainty(*rebinned_, ms);
		auto files = emit_results(ms, cfg_.output_dir);
		result_.artifacts.insert(result_.artifacts.end(), files.begin(), files.end());
		return ms.q_avg;
	});
}

std::vector<std::filesystem::path> Pipeline::plot() {
	return guarded(WorkflowStep::Plot, "", [&] {
		auto svgs = plot_store(store_data_, cfg_.plot_flags, cfg_.output_dir);
		result_.artifacts.insert(result_.artifacts.end(), svgs.begin(), svgs.end());
		return svgs;
	});
}

void Pipeline::finish() {
	review("plots", "review_plots.txt", result_.artifacts);
	enter(WorkflowStep::Finish, "");
	flush_trace();
}

WorkflowResult run_workflow(const WorkflowConfig& cfg, const Approver& approver) {
	Pipeline pipeline(cfg, approver);

	int pass = 0;
	while (true) {
		pipeline.generate();
		pipeline.execute();
		pipeline.decrypt();
		pipeline.store();

		if (pass == cfg.max_refinements && pass > 0) break; // refined pass: skip the check

		UncertaintyReport report = pipeline.check_uncertainty();
		if (report.average_uncertainty < cfg.uncertainty_target) break;
		if (pass == cfg.max_refinements) break; // out of refinements; carry on regardless

		NpsEstimate estimate = pipeline.estimate_nps();
		pipeline.update_param(cfg.nps_parameter, std::to_string(estimate.required_nps));
		++pass;
	}

	if (cfg.mode == WorkflowMode::microdosimetry) {
		pipeline.rebin();
		pipeline.analyze();
	} else {
		pipeline.plot();
	}

	pipeline.finish();
	return pipeline.result();
}

} // namespace mcforge
