#include "mcforge/orchestrator.hpp"

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>

#include "httplib.h"
#include "json.hpp"
#include "mcforge/deck.hpp"
#include "mcforge/errors.hpp"

namespace mcforge {

namespace {

using ToolFn = std::function<nlohmann::json(Pipeline&, const nlohmann::json&)>;

struct ToolEntry {
	ToolSpec spec;
	ToolFn fn;
};

nlohmann::json name_list(const std::vector<std::filesystem::path>& paths) {
	nlohmann::json out = nlohmann::json::array();
	for (const auto& p : paths) out.push_back(p.filename().string());
	return out;
}

std::string scalar_text(const nlohmann::json& value) {
	if (value.is_string()) return value.get<std::string>();
	if (value.is_number_integer()) return std::to_string(value.get<long long>());
	if (value.is_number_unsigned()) return std::to_string(value.get<unsigned long long>());
	return value.dump();
}

const std::vector<ToolEntry>& tool_table() {
	static const std::vector<ToolEntry> table = {
	    {{"csv_file_reader_tool",
	      "Reads a parameter CSV file and returns its content as a dictionary.",
	      {{"file_path", "string", "CSV to read; defaults to the configured parameter file",
	        false}}},
	     [](Pipeline& p, const nlohmann::json& args) {
		     std::filesystem::path path =
		         args.contains("file_path")
		             ? std::filesystem::path(args["file_path"].get<std::string>())
		             : p.config().params_path;
		     ParameterSet params = load_parameters(path);
		     nlohmann::json dict = nlohmann::json::object();
		     for (const auto& [name, value] : params.entries) dict[name] = value;
		     return nlohmann::json{{"parameters", dict}};
	     }},
	    {{"fluka_input_file_creator_tool",
	      "Creates one input file per cycle from the template, substituting parameters and "
	      "per-cycle seeds.",
	      {}},
	     [](Pipeline& p, const nlohmann::json&) {
		     return nlohmann::json{{"inputs", name_list(p.generate())}};
	     }},
	    {{"fluka_executer_tool",
	      "Executes every generated cycle through the engine, capturing logs and wall time.",
	      {}},
	     [](Pipeline& p, const nlohmann::json&) {
		     return nlohmann::json{{"total_wall_time", p.execute()}};
	     }},
	    {{"fluka_data_decrypter_tool",
	      "Decrypts the binary unit outputs into merged and tabulated .lis files.",
	      {}},
	     [](Pipeline& p, const nlohmann::json&) {
		     const DecryptResult& dec = p.decrypt();
		     return nlohmann::json{{"lis_files", name_list(dec.lis_paths)},
		                           {"warnings", dec.warnings}};
	     }},
	    {{"fluka_data_to_json_tool",
	      "Parses the decrypted .lis files into fluka_data.json.",
	      {}},
	     [](Pipeline& p, const nlohmann::json&) {
		     std::filesystem::path path = p.store();
		     nlohmann::json entries = nlohmann::json::array();
		     for (const auto& [key, entry] : p.store_data().files) entries.push_back(key);
		     return nlohmann::json{{"store_path", path.string()}, {"entries", entries}};
	     }},
	    {{"nps_and_uncertainty_tool",
	      "Extracts the average uncertainty of the monitored unit and the total primaries "
	      "run.",
	      {}},
	     [](Pipeline& p, const nlohmann::json&) {
		     UncertaintyReport report = p.check_uncertainty();
		     return nlohmann::json{{"average_uncertainty", report.average_uncertainty},
		                           {"total_primaries", p.result().total_primaries},
		                           {"unit", p.config().monitor_unit}};
	     }},
	    {{"nps_estimator_tool",
	      "Estimates the primaries needed to reach the target uncertainty.",
	      {{"current_uncertainty", "number", "percent; defaults to the last check", false},
	       {"target_uncertainty", "number", "percent; defaults to the configured target",
	        false},
	       {"current_nps", "integer", "defaults to the total primaries last reported",
	        false}}},
	     [](Pipeline& p, const nlohmann::json& args) {
		     std::optional<double> u, t;
		     std::optional<std::uint64_t> n;
		     if (args.contains("current_uncertainty"))
			     u = args["current_uncertainty"].get<double>();
		     if (args.contains("target_uncertainty"))
			     t = args["target_uncertainty"].get<double>();
		     if (args.contains("current_nps")) n = args["current_nps"].get<std::uint64_t>();
		     NpsEstimate est = p.estimate_nps(u, t, n);
		     return nlohmann::json{{"required_nps", est.required_nps},
		                           {"current_nps", est.current_nps},
		                           {"current_uncertainty", est.current_u},
		                           {"target_uncertainty", est.target_u}};
	     }},
	    {{"csv_updater_tool",
	      "Rewrites one named value in the parameter CSV file.",
	      {{"name", "string", "parameter to update", true},
	       {"value", "scalar", "new value", true}}},
	     [](Pipeline& p, const nlohmann::json& args) {
		     std::string name = args["name"].get<std::string>();
		     std::string value = scalar_text(args["value"]);
		     p.update_param(name, value);
		     return nlohmann::json{{"updated", name}, {"value", value}};
	     }},
	    {{"fluka_data_plotter_tool",
	      "Plots every stored distribution and saves the images.",
	      {}},
	     [](Pipeline& p, const nlohmann::json&) {
		     return nlohmann::json{{"plots", name_list(p.plot())}};
	     }},
	    {{"weight_data_with_gas_gains_tool",
	      "Weights the monitored spectral counts with the configured gas gain table.",
	      {}},
	     [](Pipeline& p, const nlohmann::json&) {
		     LinearSpectrum lin = p.weight_gains();
		     return nlohmann::json{{"weighted_bins", lin.bins.size()}};
	     }},
	    {{"lin_to_log_rebinning_tool",
	      "Converts the monitored spectrum to lineal energy on a logarithmic grid.",
	      {{"bins_per_decade", "integer", "defaults to the configured grid", false}}},
	     [](Pipeline& p, const nlohmann::json& args) {
		     std::optional<int> bins;
		     if (args.contains("bins_per_decade")) bins = args["bins_per_decade"].get<int>();
		     LogSpectrum log = p.rebin(bins);
		     return nlohmann::json{{"log_bins", log.bins.size()},
		                           {"path", "tepc_log_data.json"}};
	     }},
	    {{"microdosimetric_spectra_tool",
	      "Computes the microdosimetric spectra and quality factor, plots the results and "
	      "saves the lineal energy distributions as CSV.",
	      {{"kernel", "string", "quality kernel; defaults to the configured one", false}}},
	     [](Pipeline& p, const nlohmann::json& args) {
		     std::optional<std::string> kernel;
		     if (args.contains("kernel")) kernel = args["kernel"].get<std::string>();
		     double q = p.analyze(kernel);
		     return nlohmann::json{{"q_avg", q}};
	     }},
	    {{"FINISH", "Marks the workflow as completed.", {}},
	     [](Pipeline&, const nlohmann::json&) { return nlohmann::json::object(); }},
	};
	return table;
}

const ToolEntry* find_tool(const std::string& name) {
	for (const ToolEntry& entry : tool_table())
		if (entry.spec.name == name) return &entry;
	return nullptr;
}

std::optional<std::string> validate_args(const ToolSpec& spec, const nlohmann::json& args) {
	if (!args.is_object()) return std::string("arguments must be a JSON object");
	for (const ToolParam& param : spec.params) {
		if (!args.contains(param.name)) {
			if (param.required)
				return "missing required argument '" + param.name + "'";
			continue;
		}
		const nlohmann::json& v = args.at(param.name);
		bool ok = param.type == "string"    ? v.is_string()
		          : param.type == "number"  ? v.is_number()
		          : param.type == "integer" ? v.is_number_integer() || v.is_number_unsigned()
		          : param.type == "boolean" ? v.is_boolean()
		          : param.type == "scalar"  ? v.is_string() || v.is_number()
		                                    : false;
		if (!ok) return "argument '" + param.name + "' must have type " + param.type;
	}
	for (auto it = args.begin(); it != args.end(); ++it) {
		bool known = false;
		for (const ToolParam& param : spec.params)
			if (param.name == it.key()) known = true;
		if (!known) return "unexpected argument '" + it.key() + "'";
	}
	return std::nullopt;
}

nlohmann::json schema_of(const ToolSpec& spec) {
	nlohmann::json props = nlohmann::json::object();
	nlohmann::json required = nlohmann::json::array();
	for (const ToolParam& param : spec.params) {
		nlohmann::json type;
		if (param.type == "scalar")
			type = nlohmann::json::array({"string", "number"});
		else
			type = param.type;
		props[param.name] = {{"type", type}, {"description", param.description}};
		if (param.required) required.push_back(param.name);
	}
	return {{"type", "function"},
	        {"function",
	         {{"name", spec.name},
	          {"description", spec.description},
	          {"parameters",
	           {{"type", "object"}, {"properties", props}, {"required", required}}}}}};
}

std::string system_prompt(const WorkflowConfig& cfg) {
	std::string prompt =
	    "You are an automation agent driving a Monte Carlo workflow with the provided "
	    "tools.\n"
	    "1. Read the parameter file.\n"
	    "2. Create the cycle input files from the template.\n"
	    "3. Execute the simulations.\n"
	    "4. Decrypt the outputs and store them as JSON.\n"
	    "5. Report the average uncertainty and total primaries for unit " +
	    std::to_string(cfg.monitor_unit) + ".\n";
	char target[64];
	std::snprintf(target, sizeof target, "%g", cfg.uncertainty_target);
	prompt += "6. If the average uncertainty is not less than " + std::string(target) +
	          "%, estimate the primaries needed, update '" + cfg.nps_parameter +
	          "' in the parameter file, then repeat steps 2 to 4 and skip step 5.\n";
	if (cfg.mode == WorkflowMode::microdosimetry)
		prompt +=
		    "7. Rebin the monitored spectrum onto the logarithmic lineal energy grid.\n"
		    "8. Compute the microdosimetric spectra and quality factor.\n";
	else
		prompt += "7. Plot the stored data.\n";
	prompt += "When everything is done, call FINISH.";
	return prompt;
}

struct Endpoint {
	std::string base;
	std::string path;
};

Endpoint split_endpoint(const std::string& url) {
	auto scheme_end = url.find("://");
	if (scheme_end == std::string::npos)
		raise(Errc::provider_error, "endpoint must be an http(s) URL: " + url);
	auto path_start = url.find('/', scheme_end + 3);
	if (path_start == std::string::npos) return {url, "/"};
	return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json tool_message(const std::string& call_id, const nlohmann::json& content) {
	return {{"role", "tool"}, {"tool_call_id", call_id}, {"content", content.dump()}};
}

} // namespace

const std::vector<ToolSpec>& tool_registry() {
	static const std::vector<ToolSpec> specs = [] {
		std::vector<ToolSpec> out;
		for (const ToolEntry& entry : tool_table()) out.push_back(entry.spec);
		return out;
	}();
	return specs;
}

WorkflowResult orchestrate_llm(const WorkflowConfig& cfg, const OrchestratorConfig& llm,
                               const Approver& approver) {
	Pipeline pipeline(cfg, approver);
	Endpoint ep = split_endpoint(llm.endpoint);
	httplib::Client client(ep.base);
	client.set_connection_timeout(10, 0);
	client.set_read_timeout(120, 0);

	httplib::Headers headers;
	if (const char* key = std::getenv("MCFORGE_API_KEY"))
		headers.emplace("Authorization", std::string("Bearer ") + key);

	nlohmann::json tools = nlohmann::json::array();
	for (const ToolEntry& entry : tool_table()) tools.push_back(schema_of(entry.spec));

	nlohmann::json messages = nlohmann::json::array();
	messages.push_back({{"role", "system"}, {"content", system_prompt(cfg)}});

	int unknown_strikes = 0;
	int validation_strikes = 0;
	bool finished = false;

	for (int step = 0; step < llm.budget && !finished; ++step) {
		nlohmann::json request = {
		    {"model", llm.model}, {"messages", messages}, {"tools", tools}};
		auto res = client.Post(ep.path, headers, request.dump(), "application/json");
		if (!res) raise(Errc::provider_error, "no response from " + llm.endpoint);
		if (res->status != 200)
			raise(Errc::provider_error,
			      "endpoint returned " + std::to_string(res->status) + ": " + res->body);

		nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
		if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
		    reply["choices"].empty() || !reply["choices"][0].contains("message"))
			raise(Errc::provider_error, "malformed completion from " + llm.endpoint);
		nlohmann::json message = reply["choices"][0]["message"];
		messages.push_back(message);

		if (!message.contains("tool_calls") || !message["tool_calls"].is_array() ||
		    message["tool_calls"].empty())
			continue; // plain content; the model gets another turn within the budget

		for (const nlohmann::json& call : message["tool_calls"]) {
			std::string id = call.value("id", "");
			nlohmann::json fn =
			    call.contains("function") ? call["function"] : nlohmann::json::object();
			std::string name = fn.value("name", "");

			if (name == "FINISH") {
				pipeline.finish();
				finished = true;
				break;
			}

			const ToolEntry* entry = find_tool(name);
			if (!entry) {
				if (++unknown_strikes > 1)
					raise(Errc::unknown_tool, "unknown tool '" + name + "'");
				messages.push_back(
				    tool_message(id, {{"error", "unknown tool '" + name + "'"}}));
				continue;
			}

			nlohmann::json args = nlohmann::json::object();
			std::optional<std::string> problem;
			if (fn.contains("arguments")) {
				const nlohmann::json& raw = fn["arguments"];
				if (raw.is_string()) {
					args = nlohmann::json::parse(raw.get<std::string>(), nullptr, false);
					if (args.is_discarded())
						problem = std::string("arguments are not valid JSON");
				} else if (raw.is_object()) {
					args = raw;
				} else {
					problem = std::string("arguments must be a JSON object");
				}
			}
			if (!problem) problem = validate_args(entry->spec, args);
			if (problem) {
				if (++validation_strikes > 1)
					raise(Errc::argument_validation, name + ": " + *problem);
				messages.push_back(tool_message(id, {{"error", name + ": " + *problem}}));
				continue;
			}

			messages.push_back(tool_message(id, entry->fn(pipeline, args)));
		}
	}

	if (!finished)
		raise(Errc::budget_exceeded,
		      "no FINISH within " + std::to_string(llm.budget) + " endpoint steps");
	return pipeline.result();
}

} // namespace mcforge
