#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcforge/assistant.hpp"
#include "mcforge/config.hpp"
#include "mcforge/deck.hpp"
#include "mcforge/errors.hpp"
#include "mcforge/microdose.hpp"
#include "mcforge/orchestrator.hpp"
#include "mcforge/plotsvg.hpp"
#include "mcforge/postproc.hpp"
#include "mcforge/runner.hpp"
#include "mcforge/stats.hpp"
#include "mcforge/util.hpp"
#include "mcforge/workflow.hpp"

using namespace mcforge;
using nlohmann::json;

namespace {

void emit(bool as_json, const json& record, const std::string& plain) {
	if (as_json)
		std::cout << record.dump(2) << "\n";
	else
		std::cout << plain;
}

/// Library paths must survive the job scripts' cd into the execution
/// directory, so everything user-supplied turns absolute here.
std::filesystem::path abs_path(const std::string& p) {
	if (p.empty()) return {};
	return std::filesystem::absolute(p);
}

std::filesystem::path scan_config(int argc, char** argv) {
	for (int i = 1; i < argc; ++i) {
		std::string arg = argv[i];
		if (arg == "--config" && i + 1 < argc) return argv[i + 1];
		if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
	}
	return {};
}

std::vector<std::filesystem::path> files_with_extension(const std::filesystem::path& dir,
                                                        std::string_view ext) {
	std::vector<std::filesystem::path> out;
	if (std::filesystem::is_directory(dir))
		for (const auto& entry : std::filesystem::directory_iterator(dir))
			if (entry.is_regular_file() && entry.path().extension() == ext)
				out.push_back(entry.path());
	std::sort(out.begin(), out.end());
	return out;
}

std::string engine_command(const std::string& engine) {
	if (engine.empty() || engine == "mock") return default_mock_command() + " run {input}";
	return engine;
}

/// Interactive review prompt; auto-approves when asked to or when stdin is
/// not a terminal (nobody is there to answer).
Approver make_approver(bool auto_approve) {
	if (auto_approve || !::isatty(0)) return {};
	return [](std::string_view stage, const std::filesystem::path& review) {
		std::cerr << "review the " << stage << " listing at " << review.string()
		          << "\nproceed? [y/N] " << std::flush;
		std::string line;
		if (!std::getline(std::cin, line)) return false;
		std::string reply = to_lower(trim(line));
		return reply == "y" || reply == "yes";
	};
}

std::string store_keys(const FlukaData& data) {
	std::string keys;
	for (const auto& [key, entry] : data.files) {
		if (!keys.empty()) keys += ", ";
		keys += key;
	}
	return keys;
}

/// Resolve which store entry a spectrum command works on: an explicit key,
/// a unit number, or the only binwise tab entry present.
std::string pick_entry(const FlukaData& data, const std::string& entry, int unit) {
	if (!entry.empty()) {
		if (!data.files.count(entry))
			raise(Errc::usage_error,
			      "store has no entry " + entry + " (it holds: " + store_keys(data) + ")");
		return entry;
	}
	if (unit > 0) {
		std::string key = "output_fort_" + std::to_string(unit) + "_tab.lis";
		if (!data.files.count(key))
			raise(Errc::usage_error,
			      "store has no entry " + key + " (it holds: " + store_keys(data) + ")");
		return key;
	}
	std::vector<std::string> tabs;
	for (const auto& [key, fe] : data.files)
		if (fe.type == FileEntry::Type::tab && !fe.rows.empty()) tabs.push_back(key);
	if (tabs.size() == 1) return tabs.front();
	raise(Errc::usage_error,
	      "pick an entry with --entry or --unit (the store holds: " + store_keys(data) + ")");
}

const FileEntry& table_entry(const FlukaData& data, const std::string& key) {
	const FileEntry& fe = data.files.at(key);
	if (fe.rows.empty())
		raise(Errc::no_numeric_table, "entry " + key + " carries no binwise table");
	return fe;
}

int run_cli(int argc, char** argv) {
	Config cfg;
	auto config_path = scan_config(argc, argv);
	if (!config_path.empty()) cfg = load_config(config_path);

	// String mirrors of the path-typed config fields, for option binding.
	std::string template_arg = cfg.template_path.string();
	std::string params_arg = cfg.params_path.string();
	std::string out_arg = cfg.output_dir.string();
	std::string gains_arg = cfg.gains_path.string();
	std::string store_dir_arg = cfg.store_dir.string();

	bool as_json = false;
	std::string config_arg;
	long long seed = 1;

	CLI::App app{"Monte Carlo workflow automation for fixed-column input decks"};
	app.require_subcommand(1);
	app.fallthrough();
	app.add_option("--config", config_arg, "TOML config file; flags override its values");
	app.add_flag("--json", as_json, "emit the result record as JSON on stdout");

	auto sync_paths = [&] {
		cfg.template_path = abs_path(template_arg);
		cfg.params_path = abs_path(params_arg);
		cfg.output_dir = abs_path(out_arg);
		cfg.gains_path = abs_path(gains_arg);
		cfg.store_dir = abs_path(store_dir_arg);
	};

	// gen --------------------------------------------------------------
	auto* gen = app.add_subcommand("gen", "generate per-cycle input decks from a template");
	gen->add_option("--template", template_arg, "deck template with {seed}");
	gen->add_option("--params", params_arg, "parameter CSV substituted into the template");
	gen->add_option("--out", out_arg, "output directory");
	gen->add_option("--prefix", cfg.prefix, "input file name prefix");
	gen->add_option("--cycles", cfg.cycles, "number of independent cycles");
	gen->add_option("--seed", seed, "base random seed");
	gen->callback([&] {
		sync_paths();
		if (cfg.template_path.empty())
			raise(Errc::usage_error,
			      "a deck template is required (--template or [paths] template)");
		if (cfg.output_dir.empty()) cfg.output_dir = ".";
		ParameterSet params;
		if (!cfg.params_path.empty()) params = load_parameters(cfg.params_path);
		ParsedDeck parsed = parse_deck(read_file(cfg.template_path));
		CyclePlan plan{cfg.prefix, cfg.cycles, seed, cfg.output_dir};
		auto paths = generate_cycles(parsed.deck, params, plan);

		json inputs = json::array();
		std::string plain;
		for (const auto& p : paths) {
			inputs.push_back(p.string());
			plain += p.string() + "\n";
		}
		emit(as_json, json{{"inputs", inputs}, {"warnings", parsed.warnings}}, plain);
	});

	// run --------------------------------------------------------------
	auto* run = app.add_subcommand("run", "execute generated decks through the engine");
	std::string engine = cfg.executable;
	run->add_option("--dir", out_arg, "directory holding the .inp inputs");
	run->add_option("--engine", engine, "engine command; \"mock\" selects the bundled engine");
	run->add_option("--max-parallel", cfg.max_parallel, "worker bound; 0 runs all at once");
	run->callback([&] {
		sync_paths();
		auto dir = cfg.output_dir.empty() ? std::filesystem::path(".") : cfg.output_dir;
		auto inputs = files_with_extension(dir, ".inp");
		if (inputs.empty())
			raise(Errc::missing_file, "no .inp inputs under " + dir.string());
		RunConfig rc{engine_command(engine), dir, "AutoFLUKA_job", cfg.max_parallel};
		auto scripts = emit_job_scripts(inputs, rc);
		ExecutionReport report = execute_all(scripts, rc);
		if (report.failures > 0)
			raise(Errc::workflow_step_failed,
			      std::to_string(report.failures) + " of " +
			          std::to_string(report.records.size()) +
			          " jobs failed; see the .err logs under " + dir.string());
		emit(as_json,
		     json{{"jobs", report.records.size()},
		          {"failures", report.failures},
		          {"total_wall_time", report.total_wall_time}},
		     std::to_string(report.records.size()) + " jobs in " + report.total_wall_time +
		         "\n");
	});

	// decrypt ----------------------------------------------------------
	auto* decrypt = app.add_subcommand("decrypt", "merge binary unit outputs into .lis files");
	std::string utilities = "mock";
	std::string out_base = "output";
	decrypt->add_option("--dir", out_arg, "directory holding the *_fort.NN outputs");
	decrypt->add_option("--cycles", cfg.cycles, "cycle count the outputs came from");
	decrypt->add_option("--utilities", utilities,
	                    "post-processing utility set: mock or fluka");
	decrypt->add_option("--out-base", out_base, "base name for the merged .lis files");
	decrypt->callback([&] {
		sync_paths();
		auto dir = cfg.output_dir.empty() ? std::filesystem::path(".") : cfg.output_dir;
		UtilityTable table = utilities == "fluka" ? UtilityTable::defaults()
		                                          : UtilityTable::mock(default_mock_command());
		DecryptResult dec = decrypt_all(dir, table, cfg.cycles, out_base);

		json lis = json::array();
		std::string plain;
		for (const auto& p : dec.lis_paths) {
			lis.push_back(p.string());
			plain += p.string() + "\n";
		}
		emit(as_json,
		     json{{"lis_files", lis},
		          {"log", dec.log_path.string()},
		          {"warnings", dec.warnings}},
		     plain);
	});

	// store ------------------------------------------------------------
	auto* store_cmd = app.add_subcommand("store", "parse .lis files into fluka_data.json");
	std::string store_out;
	store_cmd->add_option("--dir", out_arg, "directory holding the .lis files");
	store_cmd->add_option("--out", store_out, "store path (default <dir>/fluka_data.json)");
	store_cmd->callback([&] {
		sync_paths();
		auto dir = cfg.output_dir.empty() ? std::filesystem::path(".") : cfg.output_dir;
		auto lis = files_with_extension(dir, ".lis");
		if (lis.empty()) raise(Errc::missing_file, "no .lis files under " + dir.string());
		std::filesystem::path out =
		    store_out.empty() ? dir / "fluka_data.json" : abs_path(store_out);
		FlukaData data = build_store(lis, out);

		json entries = json::object();
		for (const auto& [key, fe] : data.files) {
			json e{{"type", fe.type == FileEntry::Type::tab ? "tab" : "sum"},
			       {"detector", fe.detector}};
			if (fe.average_uncertainty) e["average_uncertainty"] = *fe.average_uncertainty;
			entries[key] = e;
		}
		emit(as_json, json{{"store_path", out.string()}, {"entries", entries}},
		     "wrote " + out.string() + " (" + std::to_string(data.files.size()) +
		         " entries)\n");
	});

	// stats ------------------------------------------------------------
	auto* stats = app.add_subcommand("stats", "convergence arithmetic");
	stats->require_subcommand(1);

	auto* nps = stats->add_subcommand("nps", "primaries needed to reach a target uncertainty");
	double current_u = 0, target_u = 0;
	std::uint64_t current_nps = 0, granularity = 100000;
	nps->add_option("--current-u", current_u, "current average uncertainty, percent")
	    ->required();
	nps->add_option("--target-u", target_u, "target average uncertainty, percent")->required();
	nps->add_option("--nps", current_nps, "primaries already run")->required();
	nps->add_option("--granularity", granularity, "round the estimate up to a multiple");
	nps->callback([&] {
		NpsEstimate est = required_nps(current_u, target_u, current_nps, granularity);
		emit(as_json,
		     json{{"required_nps", est.required_nps},
		          {"current_nps", est.current_nps},
		          {"current_uncertainty", est.current_u},
		          {"target_uncertainty", est.target_u},
		          {"granularity", est.granularity},
		          {"raw", est.raw}},
		     std::to_string(est.required_nps) + "\n");
	});

	auto* avg_e = stats->add_subcommand("avg-e", "count-weighted mean energy of a spectrum");
	std::string stats_store, stats_entry;
	int stats_unit = 0;
	avg_e->add_option("--store", stats_store, "fluka_data.json path");
	avg_e->add_option("--entry", stats_entry, "store entry to average");
	avg_e->add_option("--unit", stats_unit, "shorthand for output_fort_<unit>_tab.lis");
	avg_e->callback([&] {
		sync_paths();
		std::filesystem::path path = stats_store.empty()
		                                 ? cfg.output_dir / "fluka_data.json"
		                                 : abs_path(stats_store);
		FlukaData data = load_store(path);
		std::string key = pick_entry(data, stats_entry, stats_unit);
		const FileEntry& fe = table_entry(data, key);
		std::vector<EnergyBin> bins;
		bins.reserve(fe.rows.size());
		for (const TabRow& row : fe.rows) bins.push_back({row.elow, row.ehigh, row.value});
		double e = average_energy(bins);

		char buf[64];
		std::snprintf(buf, sizeof buf, "%.10g\n", e);
		emit(as_json,
		     json{{"average_energy", e}, {"entry", key}, {"n_bins", bins.size()}}, buf);
	});

	// micro ------------------------------------------------------------
	auto* micro = app.add_subcommand("micro", "microdosimetric spectra from a store entry");
	std::string micro_store, micro_entry, micro_out;
	int micro_unit = 0;
	micro->add_option("--store", micro_store, "fluka_data.json path");
	micro->add_option("--entry", micro_entry, "store entry holding the energy spectrum");
	micro->add_option("--unit", micro_unit, "shorthand for output_fort_<unit>_tab.lis");
	micro->add_option("--out", micro_out, "artifact directory (default: beside the store)");
	micro->add_option("--dt-nm", cfg.dt_nm, "simulated site diameter, nm");
	micro->add_option("--clf", cfg.clf, "chord length factor");
	micro->add_option("--flag", cfg.flag, "gas-gain weighting off (0) / on (1)");
	micro->add_option("--gains", gains_arg, "gas-gain CSV (energy,gain rows)");
	micro->add_option("--kernel", cfg.kernel, "quality kernel id");
	micro->add_flag("--plain-sums", cfg.appendix_literal_sums,
	                "literal unweighted sums instead of dy-weighted ones");
	micro->add_option("--bins-per-decade", cfg.bins_per_decade, "log rebinning density");
	micro->callback([&] {
		sync_paths();
		WorkflowConfig wcfg = workflow_config_from(cfg);
		std::filesystem::path path = micro_store.empty()
		                                 ? cfg.output_dir / "fluka_data.json"
		                                 : abs_path(micro_store);
		FlukaData data = load_store(path);
		std::string key = pick_entry(data, micro_entry, micro_unit);
		const FileEntry& fe = table_entry(data, key);

		LinearSpectrum lin;
		for (const TabRow& row : fe.rows)
			lin.bins.push_back(
			    {row.elow, row.ehigh, row.value, row.value * row.err_pct / 100.0});
		if (wcfg.geometry.flag == 1 && !wcfg.gains.points.empty())
			lin = weight_with_gains(lin, wcfg.gains);
		LogSpectrum logspec = log_rebin(to_lineal(lin, wcfg.geometry), wcfg.bins_per_decade);

		std::filesystem::path out_dir =
		    micro_out.empty() ? path.parent_path() : abs_path(micro_out);
		std::filesystem::create_directories(out_dir);
		json tepc;
		tepc["bins_per_decade"] = logspec.bins_per_decade;
		json tepc_bins = json::array();
		for (const SpectrumBin& bin : logspec.bins)
			tepc_bins.push_back({bin.elow, bin.ehigh, bin.counts, bin.sigma});
		tepc["bins"] = std::move(tepc_bins);
		auto tepc_path = out_dir / "tepc_log_data.json";
		write_file_atomic(tepc_path, tepc.dump(2) + "\n");

		MicroSpectra ms = compute_spectra(logspec, wcfg.geometry, wcfg.kernel,
		                                  wcfg.convention);
		propagate_uncertainty(logspec, ms);
		auto files = emit_results(ms, out_dir);

		json artifacts = json::array();
		artifacts.push_back(tepc_path.string());
		std::string plain;
		char buf[256];
		std::snprintf(buf, sizeof buf,
		              "yF = %.6g keV/um\nyD = %.6g keV/um\nq_avg = %.6g +- %.6g\n"
		              "e_mean = %.6g GeV\n",
		              ms.yF, ms.yD, ms.q_avg, ms.sigma_q, ms.e_mean);
		plain += buf;
		plain += tepc_path.string() + "\n";
		for (const auto& p : files) {
			artifacts.push_back(p.string());
			plain += p.string() + "\n";
		}
		emit(as_json,
		     json{{"yF", ms.yF},
		          {"sigma_yF", ms.sigma_yF},
		          {"yD", ms.yD},
		          {"q_avg", ms.q_avg},
		          {"sigma_q", ms.sigma_q},
		          {"e_mean", ms.e_mean},
		          {"kernel", ms.kernel},
		          {"entry", key},
		          {"artifacts", artifacts}},
		     plain);
	});

	// plot -------------------------------------------------------------
	auto* plot = app.add_subcommand("plot", "render SVG charts from a store");
	std::string plot_store_arg, plot_out;
	plot->add_option("--store", plot_store_arg, "fluka_data.json path");
	plot->add_option("--out", plot_out, "output directory (default: beside the store)");
	plot->add_flag("--error-bars", cfg.plot_error_bars, "draw error bars");
	plot->add_flag("--blocks", cfg.plot_blocks, "histogram-style steps");
	plot->add_flag("--log", cfg.plot_log_scale, "log-log axes");
	plot->add_flag("--semilogx", cfg.plot_semilogx, "logarithmic x axis");
	plot->add_flag("--semilogy", cfg.plot_semilogy, "logarithmic y axis");
	plot->callback([&] {
		sync_paths();
		std::filesystem::path path = plot_store_arg.empty()
		                                 ? cfg.output_dir / "fluka_data.json"
		                                 : abs_path(plot_store_arg);
		FlukaData data = load_store(path);
		PlotFlags flags{cfg.plot_error_bars, cfg.plot_blocks, cfg.plot_log_scale,
		                cfg.plot_semilogx, cfg.plot_semilogy};
		std::filesystem::path out_dir =
		    plot_out.empty() ? path.parent_path() : abs_path(plot_out);
		auto svgs = plot_store(data, flags, out_dir);

		json paths = json::array();
		std::string plain;
		for (const auto& p : svgs) {
			paths.push_back(p.string());
			plain += p.string() + "\n";
		}
		emit(as_json, json{{"plots", paths}}, plain);
	});

	// workflow ----------------------------------------------------------
	auto* wf = app.add_subcommand("workflow", "full generate-run-analyze pipeline");
	bool orchestrate = false, auto_approve = false;
	std::string llm_url = cfg.llm_endpoint;
	int budget = 50;
	wf->add_option("--template", template_arg, "deck template with {seed}");
	wf->add_option("--params", params_arg, "parameter CSV");
	wf->add_option("--out", out_arg, "working directory for the run");
	wf->add_option("--prefix", cfg.prefix, "input file name prefix");
	wf->add_option("--cycles", cfg.cycles, "number of independent cycles");
	wf->add_option("--seed", seed, "base random seed");
	wf->add_option("--engine", engine, "engine command; \"mock\" selects the bundled engine");
	wf->add_option("--max-parallel", cfg.max_parallel, "worker bound; 0 runs all at once");
	wf->add_option("--target", cfg.uncertainty_target, "average uncertainty target, percent");
	wf->add_option("--unit", cfg.monitor_unit, "scoring unit watched for convergence");
	wf->add_option("--mode", cfg.mode, "general or microdosimetry");
	wf->add_option("--max-refinements", cfg.max_refinements, "statistics refinement rounds");
	wf->add_option("--granularity", cfg.granularity, "nps rounding granularity");
	wf->add_option("--nps-param", cfg.nps_parameter, "parameter the refinement rewrites");
	wf->add_option("--kernel", cfg.kernel, "quality kernel id (microdosimetry mode)");
	wf->add_option("--bins-per-decade", cfg.bins_per_decade, "log rebinning density");
	wf->add_option("--gains", gains_arg, "gas-gain CSV (energy,gain rows)");
	wf->add_option("--dt-nm", cfg.dt_nm, "simulated site diameter, nm");
	wf->add_option("--clf", cfg.clf, "chord length factor");
	wf->add_option("--flag", cfg.flag, "gas-gain weighting off (0) / on (1)");
	wf->add_flag("--orchestrate", orchestrate, "drive the steps through an LLM endpoint");
	auto* llm_opt =
	    wf->add_option("--llm", llm_url, "chat-completions endpoint (implies --orchestrate)");
	wf->add_option("--model", cfg.llm_model, "model name sent to the endpoint");
	wf->add_option("--budget", budget, "maximum endpoint round-trips");
	wf->add_flag("--auto-approve", auto_approve, "skip the review pauses");
	wf->callback([&] {
		sync_paths();
		cfg.executable = engine == "mock" ? "" : engine;
		WorkflowConfig wcfg = workflow_config_from(cfg);
		wcfg.base_seed = seed;

		bool use_llm = orchestrate || llm_opt->count() > 0;
		WorkflowResult result;
		if (use_llm) {
			if (llm_url.empty())
				raise(Errc::bad_config,
				      "no LLM endpoint; pass --llm or set [llm] endpoint");
			OrchestratorConfig llm{llm_url, cfg.llm_model, budget};
			result = orchestrate_llm(wcfg, llm, make_approver(auto_approve));
		} else {
			result = run_workflow(wcfg, make_approver(auto_approve));
		}

		json artifacts = json::array();
		std::string plain = "store: " + result.store_path.string() + "\n";
		plain += "refinements: " + std::to_string(result.refinements) + "\n";
		json rec{{"refinements", result.refinements},
		         {"checked", result.checked},
		         {"total_primaries", result.total_primaries},
		         {"store_path", result.store_path.string()},
		         {"trace_path", result.trace_path.string()},
		         {"orchestrated", use_llm}};
		if (result.checked) {
			rec["average_uncertainty"] = result.last_report.average_uncertainty;
			char buf[64];
			std::snprintf(buf, sizeof buf, "average uncertainty: %.4f%%\n",
			              result.last_report.average_uncertainty);
			plain += buf;
		}
		for (const auto& p : result.artifacts) {
			artifacts.push_back(p.string());
			plain += p.string() + "\n";
		}
		rec["artifacts"] = artifacts;
		plain += "trace: " + result.trace_path.string() + "\n";
		emit(as_json, rec, plain);
	});

	// assist -------------------------------------------------------------
	auto* assist = app.add_subcommand("assist", "retrieval-grounded Q&A over documents");
	assist->require_subcommand(1);

	auto* ing = assist->add_subcommand("ingest", "chunk and embed new documents");
	std::string docs_dir;
	ing->add_option("--docs", docs_dir, "directory of text/markdown/PDF documents")
	    ->required();
	ing->add_option("--store", store_dir_arg, "vector store directory");
	ing->add_option("--embedder", cfg.embedder, "embedding provider: hash or http");
	ing->add_option("--embed-endpoint", cfg.embed_endpoint, "embeddings endpoint URL");
	ing->add_option("--chunk-size", cfg.chunk_size, "chunk size in characters");
	ing->add_option("--overlap", cfg.overlap, "overlap between consecutive chunks");
	ing->add_option("--extract", cfg.extract_command,
	                "PDF text extraction command with {input}/{output}");
	ing->callback([&] {
		sync_paths();
		if (cfg.store_dir.empty())
			raise(Errc::usage_error,
			      "a store directory is required (--store or [paths] store_dir)");
		if (cfg.chunk_size <= 0 || cfg.overlap < 0)
			raise(Errc::bad_config, "chunk_size must be positive and overlap non-negative");
		auto embedder = make_embedder(cfg.embedder, cfg.embed_endpoint);
		VectorStore store(cfg.store_dir);
		IngestOptions options{{static_cast<std::size_t>(cfg.chunk_size),
		                       static_cast<std::size_t>(cfg.overlap)},
		                      cfg.extract_command};
		IngestReport report = ingest(abs_path(docs_dir), store, *embedder, options);
		emit(as_json,
		     json{{"new_documents", report.new_documents},
		          {"new_chunks", report.new_chunks},
		          {"store", cfg.store_dir.string()}},
		     "ingested " + std::to_string(report.new_documents) + " documents (" +
		         std::to_string(report.new_chunks) + " chunks) into " +
		         cfg.store_dir.string() + "\n");
	});

	auto* ask = assist->add_subcommand("ask", "answer questions from the ingested documents");
	std::string question;
	ask->add_option("--store", store_dir_arg, "vector store directory");
	ask->add_option("--question", question, "one-shot question (otherwise read stdin)");
	ask->add_option("-k,--top-k", cfg.top_k, "retrieved chunks per question");
	ask->add_option("--embedder", cfg.embedder, "embedding provider: hash or http");
	ask->add_option("--embed-endpoint", cfg.embed_endpoint, "embeddings endpoint URL");
	ask->add_option("--chat-endpoint", cfg.chat_endpoint,
	                "chat endpoint URL; \"echo\" plays the prompt back");
	ask->callback([&] {
		sync_paths();
		if (cfg.store_dir.empty())
			raise(Errc::usage_error,
			      "a store directory is required (--store or [paths] store_dir)");
		if (cfg.chat_endpoint.empty())
			raise(Errc::bad_config,
			      "no chat endpoint configured; set [assistant] chat_endpoint or pass "
			      "--chat-endpoint (\"echo\" answers with the retrieved context)");
		auto embedder = make_embedder(cfg.embedder, cfg.embed_endpoint);
		VectorStore store(cfg.store_dir);
		std::unique_ptr<ChatProvider> chat;
		if (cfg.chat_endpoint == "echo")
			chat = std::make_unique<EchoChatProvider>();
		else
			chat = std::make_unique<HttpChatProvider>(cfg.chat_endpoint, cfg.llm_model);

		Conversation memory;
		auto one = [&](const std::string& q) {
			Answer ans = answer(q, store, *embedder, *chat, memory,
			                    static_cast<std::size_t>(std::max(cfg.top_k, 0)));
			if (as_json) {
				std::cout << json{{"answer", ans.text}, {"cited", ans.cited}}.dump()
				          << "\n";
				return;
			}
			std::cout << ans.text << "\n";
			if (!ans.cited.empty()) {
				std::cout << "cited:";
				for (const auto& id : ans.cited) std::cout << " " << id;
				std::cout << "\n";
			}
		};

		if (!question.empty()) {
			one(question);
			return;
		}
		std::string line;
		while (true) {
			if (::isatty(0)) std::cerr << "? " << std::flush;
			if (!std::getline(std::cin, line)) break;
			std::string q(trim(line));
			if (q.empty()) continue;
			one(q);
		}
	});

	try {
		app.parse(argc, argv);
	} catch (const CLI::Success& e) {
		return app.exit(e);
	} catch (const CLI::ParseError& e) {
		if (app.get_subcommands().empty()) std::cerr << app.help();
		std::cerr << "error: usage_error: " << e.what() << "\n";
		return 2;
	}
	return 0;
}

} // namespace

int main(int argc, char** argv) {
	try {
		return run_cli(argc, argv);
	} catch (const McError& e) {
		std::cerr << e.formatted() << "\n";
		return e.code() == Errc::usage_error ? 2 : 1;
	} catch (const std::exception& e) {
		std::cerr << "error: internal: " << e.what() << "\n";
		return 1;
	}
}
