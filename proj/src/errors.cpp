#include "mcforge/errors.hpp"

namespace mcforge {

std::string_view errc_name(Errc code) {
	switch (code) {
	case Errc::field_overflow: return "FieldOverflow";
	case Errc::missing_file: return "MissingFile";
	case Errc::duplicate_name: return "DuplicateName";
	case Errc::empty_csv: return "EmptyCSV";
	case Errc::bad_parameter_name: return "BadParameterName";
	case Errc::unbound_placeholder: return "UnboundPlaceholder";
	case Errc::missing_seed_placeholder: return "MissingSeedPlaceholder";
	case Errc::io_error: return "IoError";
	case Errc::spawn_error: return "SpawnError";
	case Errc::missing_start_card: return "MissingStartCard";
	case Errc::all_utilities_failed: return "AllUtilitiesFailed";
	case Errc::no_binary_files: return "NoBinaryFiles";
	case Errc::missing_primaries: return "MissingPrimaries";
	case Errc::no_numeric_table: return "NoNumericTable";
	case Errc::ragged_row: return "RaggedRow";
	case Errc::zero_weight: return "ZeroWeight";
	case Errc::invalid_target: return "InvalidTarget";
	case Errc::zero_counts: return "ZeroCounts";
	case Errc::empty_gain_table: return "EmptyGainTable";
	case Errc::non_positive_edge: return "NonPositiveEdge";
	case Errc::unknown_kernel: return "UnknownKernel";
	case Errc::non_positive_log_data: return "NonPositiveLogData";
	case Errc::empty_series: return "EmptySeries";
	case Errc::empty_store: return "EmptyStore";
	case Errc::provider_error: return "ProviderError";
	case Errc::extraction_failed: return "ExtractionFailed";
	case Errc::unknown_parameter: return "UnknownParameter";
	case Errc::budget_exceeded: return "BudgetExceeded";
	case Errc::unknown_tool: return "UnknownTool";
	case Errc::argument_validation: return "ArgumentValidation";
	case Errc::bad_config: return "BadConfig";
	case Errc::workflow_step_failed: return "WorkflowStepFailed";
	case Errc::approval_declined: return "ApprovalDeclined";
	case Errc::usage_error: return "UsageError";
	}
	return "Unknown";
}

std::string McError::formatted() const {
	std::string out = "error: ";
	out += errc_name(code_);
	out += ": ";
	out += what();
	return out;
}

} // namespace mcforge
