#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcforge {

/// Machine-readable failure categories.  CLI output prints the enum name
/// verbatim, so renaming a value is a breaking change for scripted callers.
enum class Errc {
	field_overflow,
	missing_file,
	duplicate_name,
	empty_csv,
	bad_parameter_name,
	unbound_placeholder,
	missing_seed_placeholder,
	io_error,
	spawn_error,
	missing_start_card,
	all_utilities_failed,
	no_binary_files,
	missing_primaries,
	no_numeric_table,
	ragged_row,
	zero_weight,
	invalid_target,
	zero_counts,
	empty_gain_table,
	non_positive_edge,
	unknown_kernel,
	non_positive_log_data,
	empty_series,
	empty_store,
	provider_error,
	extraction_failed,
	unknown_parameter,
	budget_exceeded,
	unknown_tool,
	argument_validation,
	bad_config,
	workflow_step_failed,
	approval_declined,
	usage_error,
};

std::string_view errc_name(Errc code);

class McError : public std::runtime_error {
public:
	McError(Errc code, const std::string& message)
	    : std::runtime_error(message), code_(code) {}

	Errc code() const noexcept { return code_; }

	/// Single-line form used by the CLI: "error: <code>: <message>".
	std::string formatted() const;

private:
	Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
	throw McError(code, message);
}

} // namespace mcforge
