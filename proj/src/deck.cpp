#include "mcforge/deck.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "mcforge/errors.hpp"
#include "mcforge/util.hpp"

namespace mcforge {

namespace {

constexpr std::size_t kFieldWidth = 10;
constexpr std::size_t kSdumWidth = 8;
constexpr std::size_t kSdumCol = 70; // 0-based start of columns 71-78

bool valid_keyword(std::string_view kw) {
	if (kw.empty() || kw.size() > kFieldWidth) return false;
	if (!std::isupper(static_cast<unsigned char>(kw.front()))) return false;
	for (char c : kw) {
		if (std::isupper(static_cast<unsigned char>(c)) ||
		    std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
		    c == '#' || c == '.' || c == '+')
			continue;
		return false;
	}
	return true;
}

bool has_inner_space(std::string_view token) {
	return token.find_first_of(" \t") != std::string_view::npos;
}

WhatValue classify_what(std::string_view token) {
	if (auto num = parse_number(token)) return *num;
	return std::string(token);
}

std::string_view slice(std::string_view line, std::size_t from, std::size_t width) {
	if (from >= line.size()) return {};
	return line.substr(from, std::min(width, line.size() - from));
}

// Column-aligned split.  Returns nothing when the slices do not look like
// cleanly aligned fields, in which case the caller retries on whitespace.
std::optional<Card> parse_card_columns(const std::string& line) {
	std::string_view kw = trim(slice(line, 0, kFieldWidth));
	if (!valid_keyword(kw)) return std::nullopt;
	Card card;
	card.keyword = std::string(kw);
	for (std::size_t i = 0; i < 6; ++i) {
		std::string_view field = trim(slice(line, kFieldWidth * (i + 1), kFieldWidth));
		if (field.empty()) continue;
		if (has_inner_space(field)) return std::nullopt;
		card.whats[i] = classify_what(field);
	}
	std::string_view sdum = trim(slice(line, kSdumCol, kSdumWidth));
	if (!sdum.empty()) {
		if (has_inner_space(sdum)) return std::nullopt;
		card.sdum = std::string(sdum);
	}
	if (trim(slice(line, kSdumCol + kSdumWidth, std::string_view::npos)).size() > 0)
		return std::nullopt;
	card.raw = line;
	return card;
}

std::optional<Card> parse_card_tokens(const std::string& line) {
	auto tokens = split_ws(line);
	if (tokens.empty() || tokens.size() > 8) return std::nullopt;
	if (!valid_keyword(tokens[0])) return std::nullopt;
	Card card;
	card.keyword = tokens[0];
	std::size_t nwhats = std::min<std::size_t>(tokens.size() - 1, 6);
	for (std::size_t i = 0; i < nwhats; ++i) card.whats[i] = classify_what(tokens[i + 1]);
	if (tokens.size() == 8) {
		if (tokens[7].size() > kSdumWidth) return std::nullopt;
		card.sdum = tokens[7];
	}
	card.raw = line;
	return card;
}

std::string what_to_string(const WhatValue& what) {
	if (const double* num = std::get_if<double>(&what)) return format_field_value(*num);
	return std::get<std::string>(what);
}

// Exponent cleanup: drop '+' and leading zeros so "3.84615e-06" becomes
// "3.84615e-6" and "1.6e+06" becomes "1.6e6".
std::string compress_exponent(std::string s) {
	auto epos = s.find_first_of("eE");
	if (epos == std::string::npos) return s;
	std::string mant = s.substr(0, epos);
	std::string exp = s.substr(epos + 1);
	std::string sign;
	if (!exp.empty() && (exp.front() == '+' || exp.front() == '-')) {
		if (exp.front() == '-') sign = "-";
		exp.erase(exp.begin());
	}
	std::size_t i = 0;
	while (i + 1 < exp.size() && exp[i] == '0') ++i;
	return mant + "e" + sign + exp.substr(i);
}

std::string shortest_repr(double value) {
	char buf[64];
	auto res = std::to_chars(buf, buf + sizeof buf, value);
	return compress_exponent(std::string(buf, res.ptr));
}

bool is_substitutable(const DeckLine& line) {
	return line.kind == LineKind::card || line.kind == LineKind::directive;
}

// Replace every {name} occurrence in text.  Throws on names missing from
// params; records found names in used.
std::string replace_placeholders(const std::string& text, const ParameterSet& params,
                                 std::set<std::string>& used) {
	std::string out;
	std::size_t pos = 0;
	while (pos < text.size()) {
		auto open = text.find('{', pos);
		if (open == std::string::npos) {
			out.append(text, pos, std::string::npos);
			break;
		}
		auto close = text.find('}', open + 1);
		if (close == std::string::npos) {
			out.append(text, pos, std::string::npos);
			break;
		}
		std::string name = text.substr(open + 1, close - open - 1);
		out.append(text, pos, open - pos);
		if (const std::string* value = params.find(name)) {
			out += *value;
			used.insert(name);
		} else {
			raise(Errc::unbound_placeholder, "no parameter bound for placeholder {" + name + "}");
		}
		pos = close + 1;
	}
	return out;
}

bool line_has_placeholder(const std::string& text) {
	auto open = text.find('{');
	return open != std::string::npos && text.find('}', open + 1) != std::string::npos;
}

} // namespace

bool DeckLine::operator==(const DeckLine& other) const {
	if (kind != other.kind) return false;
	if (kind == LineKind::card) return card == other.card;
	return rtrim(text) == rtrim(other.text);
}

const Card* InputDeck::find_card(std::string_view keyword) const {
	for (const DeckLine& line : lines)
		if (line.kind == LineKind::card && line.card.keyword == keyword) return &line.card;
	return nullptr;
}

const std::string* ParameterSet::find(std::string_view name) const {
	for (const auto& [k, v] : entries)
		if (k == name) return &v;
	return nullptr;
}

void ParameterSet::set(std::string_view name, std::string_view value) {
	for (auto& [k, v] : entries) {
		if (k == name) {
			v = std::string(value);
			return;
		}
	}
	entries.emplace_back(std::string(name), std::string(value));
}

ParsedDeck parse_deck(std::string_view text) {
	ParsedDeck result;
	bool in_geometry = false;
	auto lines = split_lines(text);
	for (std::size_t n = 0; n < lines.size(); ++n) {
		const std::string& line = lines[n];
		DeckLine out;
		std::string_view stripped = trim(line);
		if (stripped.empty()) {
			out.kind = LineKind::blank;
			out.text = line;
		} else if (line.front() == '*') {
			out.kind = LineKind::comment;
			out.text = line;
		} else if (line.front() == '@') {
			out.kind = LineKind::directive;
			out.text = line;
		} else if (in_geometry && !stripped.starts_with("GEOEND")) {
			out.kind = LineKind::free_text;
			out.text = line;
		} else if (line.front() == ' ' || line.front() == '\t') {
			out.kind = LineKind::free_text;
			out.text = line;
		} else {
			std::optional<Card> card;
			if (!line_has_placeholder(line)) card = parse_card_columns(line);
			if (!card) card = parse_card_tokens(line);
			if (card) {
				out.kind = LineKind::card;
				out.card = std::move(*card);
				if (out.card.keyword == "GEOBEGIN") in_geometry = true;
				if (out.card.keyword == "GEOEND") in_geometry = false;
			} else {
				out.kind = LineKind::free_text;
				out.text = line;
				result.warnings.push_back("line " + std::to_string(n + 1) +
				                          ": kept verbatim, not a parseable card");
			}
		}
		result.deck.lines.push_back(std::move(out));
	}
	return result;
}

std::string format_field_value(double value) {
	if (value == std::floor(value) && std::abs(value) < 1e10) {
		char buf[32];
		std::snprintf(buf, sizeof buf, "%.0f", value);
		if (std::string_view(buf).size() <= kFieldWidth) return buf;
	}
	std::string s = shortest_repr(value);
	if (s.size() <= kFieldWidth) return s;
	for (int prec = 9; prec >= 0; --prec) {
		char buf[64];
		auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific, prec);
		std::string candidate = compress_exponent(std::string(buf, res.ptr));
		if (candidate.size() <= kFieldWidth) return candidate;
	}
	return s.substr(0, kFieldWidth); // unreachable for finite doubles
}

std::string render_card(const Card& card) {
	if (card.keyword.size() > kFieldWidth)
		raise(Errc::field_overflow, "keyword exceeds 10 columns: " + card.keyword);
	std::string line = card.keyword;
	line.resize(kFieldWidth, ' ');
	int last_filled = -1;
	for (int i = 5; i >= 0; --i) {
		if (card.whats[static_cast<std::size_t>(i)]) {
			last_filled = i;
			break;
		}
	}
	for (int i = 0; i <= last_filled; ++i) {
		std::string field;
		if (const auto& what = card.whats[static_cast<std::size_t>(i)]) {
			field = what_to_string(*what);
			if (field.size() > kFieldWidth)
				raise(Errc::field_overflow,
				      "WHAT(" + std::to_string(i + 1) + ") of " + card.keyword +
				          " exceeds 10 columns: " + field);
		}
		line.append(kFieldWidth - field.size(), ' ');
		line += field;
	}
	if (card.sdum) {
		if (card.sdum->size() > kSdumWidth)
			raise(Errc::field_overflow,
			      "SDUM of " + card.keyword + " exceeds 8 columns: " + *card.sdum);
		line.resize(kSdumCol, ' ');
		line += *card.sdum;
	}
	while (!line.empty() && line.back() == ' ') line.pop_back();
	return line;
}

std::string render_deck(const InputDeck& deck) {
	std::string out;
	for (const DeckLine& line : deck.lines) {
		if (line.kind == LineKind::card)
			out += render_card(line.card);
		else
			out += line.text;
		out += '\n';
	}
	return out;
}

namespace {

bool valid_parameter_name(std::string_view name) {
	if (name.empty()) return false;
	if (!(std::isalpha(static_cast<unsigned char>(name.front())) || name.front() == '_'))
		return false;
	for (char c : name)
		if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
	return true;
}

std::string clean_cell(std::string_view cell) {
	std::string_view t = trim(cell);
	if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
	return std::string(t);
}

void check_unique(const ParameterSet& params, const std::string& name,
                  const std::filesystem::path& path) {
	if (params.find(name))
		raise(Errc::duplicate_name, "duplicate parameter '" + name + "' in " + path.string());
}

} // namespace

ParameterSet load_parameters(const std::filesystem::path& path) {
	std::string text = read_file(path);
	std::vector<std::vector<std::string>> rows;
	for (const std::string& line : split_lines(text)) {
		if (trim(line).empty()) continue;
		auto cells = split(line, ',');
		std::vector<std::string> cleaned;
		cleaned.reserve(cells.size());
		for (const auto& cell : cells) cleaned.push_back(clean_cell(cell));
		rows.push_back(std::move(cleaned));
	}
	if (rows.empty()) raise(Errc::empty_csv, "no data rows in " + path.string());

	ParameterSet params;
	bool header_layout = rows.size() == 2 && rows[0].size() == rows[1].size() &&
	                     rows[0].size() > 0 &&
	                     std::all_of(rows[0].begin(), rows[0].end(), valid_parameter_name) &&
	                     !std::all_of(rows[1].begin(), rows[1].end(), valid_parameter_name);
	if (rows.size() == 2 && rows[0].size() == rows[1].size() && rows[0].size() > 2 &&
	    std::all_of(rows[0].begin(), rows[0].end(), valid_parameter_name))
		header_layout = true; // wide tables are headers even if values look like names
	if (header_layout) {
		for (std::size_t i = 0; i < rows[0].size(); ++i) {
			check_unique(params, rows[0][i], path);
			params.entries.emplace_back(rows[0][i], rows[1][i]);
		}
	} else {
		for (const auto& row : rows) {
			if (row.size() < 2)
				raise(Errc::empty_csv, "row with fewer than two cells in " + path.string());
			if (!valid_parameter_name(row[0]))
				raise(Errc::bad_parameter_name, "invalid parameter name '" + row[0] + "' in " +
				                                    path.string());
			check_unique(params, row[0], path);
			params.entries.emplace_back(row[0], row[1]);
		}
	}
	return params;
}

SubstitutionResult substitute(const InputDeck& tmpl, const ParameterSet& params) {
	SubstitutionResult result;
	result.deck = tmpl;
	std::set<std::string> used;
	for (DeckLine& line : result.deck.lines) {
		if (!is_substitutable(line)) continue;
		if (line.kind == LineKind::directive) {
			line.text = replace_placeholders(line.text, params, used);
			continue;
		}
		Card& card = line.card;
		for (auto& what : card.whats) {
			if (!what) continue;
			if (const std::string* token = std::get_if<std::string>(&*what)) {
				if (token->find('{') == std::string::npos) continue;
				std::string replaced = replace_placeholders(*token, params, used);
				what = classify_what(replaced);
			}
		}
		if (card.sdum && card.sdum->find('{') != std::string::npos)
			card.sdum = replace_placeholders(*card.sdum, params, used);
	}
	for (const auto& [name, value] : params.entries)
		if (!used.count(name)) result.warnings.push_back("unused parameter: " + name);
	return result;
}

std::vector<std::filesystem::path> generate_cycles(const InputDeck& tmpl,
                                                   const ParameterSet& params,
                                                   const CyclePlan& plan) {
	bool has_seed_placeholder = false;
	for (const DeckLine& line : tmpl.lines) {
		if (line.kind == LineKind::card) {
			for (const auto& what : line.card.whats) {
				if (!what) continue;
				const std::string* token = std::get_if<std::string>(&*what);
				if (token && token->find("{seed}") != std::string::npos)
					has_seed_placeholder = true;
			}
		} else if (line.kind == LineKind::directive &&
		           line.text.find("{seed}") != std::string::npos) {
			has_seed_placeholder = true;
		}
	}
	if (!has_seed_placeholder)
		raise(Errc::missing_seed_placeholder,
		      "template has no {seed} placeholder; cycles would not be independent");

	std::error_code ec;
	std::filesystem::create_directories(plan.output_dir, ec);
	if (ec) raise(Errc::io_error, "cannot create " + plan.output_dir.string());

	std::vector<std::filesystem::path> outputs;
	for (int i = 0; i < plan.count; ++i) {
		ParameterSet cycle_params = params;
		cycle_params.set("seed", std::to_string(plan.base_seed + i));
		SubstitutionResult sub = substitute(tmpl, cycle_params);
		char name[64];
		std::snprintf(name, sizeof name, "%s_%02d.inp", plan.prefix.c_str(), i + 1);
		std::filesystem::path out = plan.output_dir / name;
		write_file(out, render_deck(sub.deck));
		outputs.push_back(out);
	}
	return outputs;
}

} // namespace mcforge
