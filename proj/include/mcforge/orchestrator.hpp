#pragma once

#include <string>
#include <vector>

#include "mcforge/workflow.hpp"

namespace mcforge {

/// One argument in a tool schema.  type is "string", "number", "integer",
/// "boolean" or "scalar" (string or number).
struct ToolParam {
	std::string name;
	std::string type;
	std::string description;
	bool required = false;
};

struct ToolSpec {
	std::string name;
	std::string description;
	std::vector<ToolParam> params;
};

/// Every pipeline operation exposed to the model, with FINISH last.
const std::vector<ToolSpec>& tool_registry();

struct OrchestratorConfig {
	std::string endpoint; // chat-completions URL, e.g. http://host:1234/v1/chat/completions
	std::string model = "default";
	int budget = 50; // endpoint round-trips before budget_exceeded
};

/// Tool-calling loop against a chat-completions endpoint: send the message
/// history plus the tool schemas, run every returned call against the same
/// Pipeline that run_workflow uses, append each result as a tool message,
/// stop at FINISH.  An unknown tool or invalid arguments are reported back
/// to the model once, then raised.  The API key, when the endpoint needs
/// one, is read from MCFORGE_API_KEY.
WorkflowResult orchestrate_llm(const WorkflowConfig& cfg, const OrchestratorConfig& llm,
                               const Approver& approver = {});

} // namespace mcforge
