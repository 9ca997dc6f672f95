#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mcforge {

/// One WHAT field: numeric, or a short token (region name, particle name,
/// unsubstituted placeholder).
using WhatValue = std::variant<double, std::string>;

/// A fixed-column input card.  Keyword occupies columns 1-10, the six WHATs
/// ten columns each (WHAT(1) ends at column 20), SDUM columns 71-78.
struct Card {
	std::string keyword;
	std::array<std::optional<WhatValue>, 6> whats;
	std::optional<std::string> sdum;
	std::string raw; // source line as read; informational, not compared

	bool operator==(const Card& other) const {
		return keyword == other.keyword && whats == other.whats && sdum == other.sdum;
	}
};

enum class LineKind {
	card,
	comment,   // leading '*'
	free_text, // geometry body and anything preserved verbatim
	blank,
	directive, // leading '@', e.g. "@scale=2000"
};

struct DeckLine {
	LineKind kind = LineKind::blank;
	Card card;        // valid when kind == card
	std::string text; // verbatim content for the non-card kinds

	bool operator==(const DeckLine& other) const;
};

struct InputDeck {
	std::vector<DeckLine> lines;
	std::string source_path;

	bool operator==(const InputDeck& other) const { return lines == other.lines; }
	const Card* find_card(std::string_view keyword) const;
};

struct ParsedDeck {
	InputDeck deck;
	std::vector<std::string> warnings;
};

/// Ordered name -> value (both strings).  Names are unique and match
/// [A-Za-z_][A-Za-z0-9_]*.
struct ParameterSet {
	std::vector<std::pair<std::string, std::string>> entries;

	const std::string* find(std::string_view name) const;
	void set(std::string_view name, std::string_view value);
	bool operator==(const ParameterSet& other) const { return entries == other.entries; }
};

struct SubstitutionResult {
	InputDeck deck;
	std::vector<std::string> warnings; // unused parameters and the like
};

struct CyclePlan {
	std::string prefix;
	int count = 1;
	long long base_seed = 1;
	std::filesystem::path output_dir;
};

/// Tolerant line classifier and card splitter.  Never throws; suspicious
/// lines are kept verbatim and reported in warnings.
ParsedDeck parse_deck(std::string_view text);

/// Fixed-column rendering.  Throws field_overflow when a token cannot fit
/// its field (10 columns for keyword/WHATs, 8 for SDUM).
std::string render_deck(const InputDeck& deck);
std::string render_card(const Card& card);

/// Numeric WHAT formatting: plain decimal when it fits ten columns,
/// otherwise exponent notation at the highest precision that fits.
std::string format_field_value(double value);

/// Two CSV layouts: a header row of names over one row of values, or one
/// name,value pair per row.
ParameterSet load_parameters(const std::filesystem::path& path);

/// Replace {name} placeholders in card fields and directive lines.
/// Unknown placeholder -> unbound_placeholder; unused parameters -> warning.
SubstitutionResult substitute(const InputDeck& tmpl, const ParameterSet& params);

/// Render one deck per cycle with seed = base_seed + cycle_index, written as
/// <prefix>_NN.inp under plan.output_dir.  Returns the paths in cycle order.
std::vector<std::filesystem::path> generate_cycles(const InputDeck& tmpl,
                                                   const ParameterSet& params,
                                                   const CyclePlan& plan);

} // namespace mcforge
