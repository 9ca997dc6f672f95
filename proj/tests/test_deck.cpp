#include "mcforge/deck.hpp"

#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "mcforge/errors.hpp"
#include "mcforge/util.hpp"
#include "scoped_dir.hpp"

using namespace mcforge;

namespace {

Card make_card(std::string keyword, std::vector<std::optional<WhatValue>> whats,
               std::optional<std::string> sdum = std::nullopt) {
	Card card;
	card.keyword = std::move(keyword);
	for (std::size_t i = 0; i < whats.size() && i < 6; ++i) card.whats[i] = whats[i];
	card.sdum = std::move(sdum);
	return card;
}

std::string slice10(const std::string& line, std::size_t field) {
	// field 0 = keyword columns 1-10, field 1 = WHAT(1) columns 11-20, ...
	std::string padded = line;
	if (padded.size() < 80) padded.resize(80, ' ');
	return padded.substr(field * 10, 10);
}

} // namespace

TEST_CASE("WHAT fields land right-aligned in their ten columns") {
	Card card = make_card("BEAMPOS", {-110.0, 0.0, 0.93, 0.0});
	std::string line = render_card(card);
	CHECK(slice10(line, 1) == "      -110");
	CHECK(slice10(line, 2) == "         0");
	CHECK(slice10(line, 3) == "      0.93");
	CHECK(slice10(line, 4) == "         0");
	CHECK(slice10(line, 0) == "BEAMPOS   ");
}

TEST_CASE("SDUM occupies columns 71-78") {
	Card card = make_card("DEFAULTS", {}, "HADROTHE");
	std::string line = render_card(card);
	REQUIRE(line.size() == 78);
	CHECK(line.substr(70, 8) == "HADROTHE");
	CHECK(trim(line.substr(10, 60)).empty());
}

TEST_CASE("numeric WHATs compress to ten columns and reparse close") {
	// representable in ten columns: reparse is exact
	for (double v : {3.84615e-06, 600000.0, -110.0, 0.93, 1.6e6, 4.2848e-29, -4.284e-29}) {
		std::string field = format_field_value(v);
		CAPTURE(field);
		CHECK(field.size() <= 10);
		auto back = parse_number(field);
		REQUIRE(back.has_value());
		CHECK(std::abs(*back - v) <= 1e-12 * std::abs(v));
	}
	// too many significant digits: compressed at the best precision that fits
	for (double v : {0.000123456789, 1.23456789e+17, -9.87654321e-21, 6.02214076e23}) {
		std::string field = format_field_value(v);
		CAPTURE(field);
		CHECK(field.size() <= 10);
		auto back = parse_number(field);
		REQUIRE(back.has_value());
		CHECK(std::abs(*back - v) <= 1e-3 * std::abs(v));
	}
}

TEST_CASE("oversized tokens refuse to render") {
	CHECK_THROWS_AS(render_card(make_card("USRBDX", {std::string("averylongregion")})),
	                McError);
	CHECK_THROWS_AS(render_card(make_card("USRBDX", {1.0}, "NINECHARS")), McError);
	CHECK_THROWS_AS(render_card(make_card("AKEYWORDTOOBIG", {})), McError);
	try {
		render_card(make_card("USRBDX", {std::string("averylongregion")}));
	} catch (const McError& e) {
		CHECK(e.code() == Errc::field_overflow);
	}
}

TEST_CASE("line classification covers every kind") {
	std::string text =
	    "TITLE\n"
	    "* a remark\n"
	    "@scale=2000\n"
	    "\n"
	    "BEAMPOS         -110       0.0      0.93       0.0\n"
	    "GEOBEGIN                                                              COMBNAME\n"
	    "    0    0          TEPC chamber\n"
	    "SPH blkbody 0.0 0.0 0.0 10000.\n"
	    "GEOEND\n"
	    "STOP\n";
	ParsedDeck parsed = parse_deck(text);
	REQUIRE(parsed.deck.lines.size() == 10);
	CHECK(parsed.deck.lines[0].kind == LineKind::card);
	CHECK(parsed.deck.lines[1].kind == LineKind::comment);
	CHECK(parsed.deck.lines[2].kind == LineKind::directive);
	CHECK(parsed.deck.lines[3].kind == LineKind::blank);
	CHECK(parsed.deck.lines[4].kind == LineKind::card);
	CHECK(parsed.deck.lines[5].kind == LineKind::card);
	CHECK(parsed.deck.lines[6].kind == LineKind::free_text);
	CHECK(parsed.deck.lines[7].kind == LineKind::free_text);
	CHECK(parsed.deck.lines[8].kind == LineKind::card);
	CHECK(parsed.deck.lines[9].kind == LineKind::card);
	CHECK(parsed.warnings.empty());

	const Card& beampos = parsed.deck.lines[4].card;
	REQUIRE(beampos.whats[0].has_value());
	CHECK(std::get<double>(*beampos.whats[0]) == -110.0);
	CHECK(parsed.deck.lines[5].card.sdum == "COMBNAME");
}

TEST_CASE("unparseable card-like lines are preserved with a warning") {
	std::string text = "lowercase junk that fits nowhere ~~ ** // {\n";
	ParsedDeck parsed = parse_deck(text);
	REQUIRE(parsed.deck.lines.size() == 1);
	CHECK(parsed.deck.lines[0].kind == LineKind::free_text);
	CHECK(parsed.deck.lines[0].text == "lowercase junk that fits nowhere ~~ ** // {");
	CHECK(parsed.warnings.size() == 1);
}

TEST_CASE("comment-only deck renders byte-identical") {
	std::string text = "* one\n*  two with trailing spaces\n* three\n";
	ParsedDeck parsed = parse_deck(text);
	CHECK(render_deck(parsed.deck) == text);
}

TEST_CASE("whitespace-separated card lines fall back to token parsing") {
	ParsedDeck parsed = parse_deck("BEAM -0.062 12 -2.5 2.5 0.0 1.0 HEAVYION\n");
	REQUIRE(parsed.deck.lines.size() == 1);
	REQUIRE(parsed.deck.lines[0].kind == LineKind::card);
	const Card& card = parsed.deck.lines[0].card;
	CHECK(card.keyword == "BEAM");
	CHECK(std::get<double>(*card.whats[0]) == -0.062);
	CHECK(std::get<double>(*card.whats[5]) == 1.0);
	CHECK(card.sdum == "HEAVYION");
}

namespace {

// Values drawn from a grammar that keeps them exactly representable in ten
// columns, so semantic round-trips are exact.
double random_numeric(std::mt19937_64& rng) {
	std::uniform_int_distribution<int> pick(0, 2);
	std::uniform_int_distribution<int> sign(0, 1);
	std::string s = sign(rng) ? "-" : "";
	switch (pick(rng)) {
	case 0: { // integer, up to 9 digits
		std::uniform_int_distribution<long long> d(0, 999999999LL);
		s += std::to_string(d(rng));
		break;
	}
	case 1: { // fixed point, up to 6 significant digits
		std::uniform_int_distribution<int> d(0, 999999);
		std::uniform_int_distribution<int> shift(1, 5);
		std::string digits = std::to_string(d(rng));
		int point = shift(rng);
		if (point >= static_cast<int>(digits.size()))
			s += "0." + std::string(point - digits.size(), '0') + digits;
		else
			s += digits.substr(0, digits.size() - point) + "." + digits.substr(digits.size() - point);
		break;
	}
	default: { // scientific, sized so sign+mantissa+exponent fit ten columns
		std::uniform_int_distribution<int> e(-30, 30);
		int exp = e(rng);
		if (exp == 0) exp = 7;
		std::size_t exp_len = 1 + (exp < 0 ? 1 : 0) + (std::abs(exp) > 9 ? 2 : 1);
		std::size_t digits_allowed = 10 - 1 /*sign*/ - 1 /*dot*/ - exp_len;
		std::uniform_int_distribution<std::size_t> k(1, digits_allowed);
		std::size_t n = k(rng);
		std::string digits;
		digits += static_cast<char>('1' + rng() % 9);
		while (digits.size() < n) digits += static_cast<char>('0' + rng() % 10);
		s += digits.substr(0, 1);
		if (digits.size() > 1) s += "." + digits.substr(1);
		s += "e" + std::to_string(exp);
		break;
	}
	}
	return *parse_number(s);
}

std::string random_token(std::mt19937_64& rng, std::size_t max_len) {
	static const char* alpha = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
	static const char* rest = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-+_";
	std::uniform_int_distribution<std::size_t> len(1, max_len);
	std::uniform_int_distribution<std::size_t> a(0, 51), r(0, 64);
	std::size_t n = len(rng);
	std::string s(1, alpha[a(rng)]);
	while (s.size() < n) s += rest[r(rng)];
	return s;
}

Card random_card(std::mt19937_64& rng) {
	static const std::vector<std::string> keywords = {
	    "BEAM",     "BEAMPOS",  "MATERIAL", "COMPOUND", "ASSIGNMA", "USRBDX",
	    "USRTRACK", "DETECT",   "RANDOMIZ", "START",    "EMFCUT",   "PHYSICS",
	    "HI-PROPE", "PART-THR", "SCORE",    "AUXSCORE", "USRBIN",   "RESNUCLE"};
	std::uniform_int_distribution<std::size_t> kw(0, keywords.size() + 2);
	std::uniform_int_distribution<int> mode(0, 3);
	Card card;
	std::size_t pick = kw(rng);
	card.keyword = pick < keywords.size()
	                   ? keywords[pick]
	                   : std::string(1, 'A' + static_cast<char>(rng() % 26)) + random_token(rng, 6);
	for (char& c : card.keyword) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
	if (card.keyword == "GEOBEGIN" || card.keyword == "GEOEND") card.keyword = "SCORE";
	for (auto& what : card.whats) {
		switch (mode(rng)) {
		case 0: break; // empty
		case 1: what = random_numeric(rng); break;
		default: what = random_token(rng, 8); break;
		}
	}
	if (mode(rng) == 0) card.sdum = random_token(rng, 8);
	return card;
}

} // namespace

TEST_CASE("render/parse round-trip holds over 10000 random cards") {
	std::mt19937_64 rng(20260821);
	for (int trial = 0; trial < 10000; ++trial) {
		Card card = random_card(rng);
		std::string line = render_card(card);
		CAPTURE(line);
		ParsedDeck parsed = parse_deck(line + "\n");
		REQUIRE(parsed.deck.lines.size() == 1);
		REQUIRE(parsed.deck.lines[0].kind == LineKind::card);
		CHECK(parsed.deck.lines[0].card == card);
	}
}

TEST_CASE("deck-level round-trip preserves mixed content") {
	std::mt19937_64 rng(7);
	InputDeck deck;
	for (int i = 0; i < 200; ++i) {
		DeckLine line;
		switch (i % 4) {
		case 0:
			line.kind = LineKind::card;
			line.card = random_card(rng);
			break;
		case 1:
			line.kind = LineKind::comment;
			line.text = "* comment " + std::to_string(i);
			break;
		case 2:
			line.kind = LineKind::directive;
			line.text = "@scale=" + std::to_string(i);
			break;
		default:
			line.kind = LineKind::blank;
			line.text = "";
			break;
		}
		deck.lines.push_back(std::move(line));
	}
	ParsedDeck reparsed = parse_deck(render_deck(deck));
	CHECK(reparsed.deck == deck);
	// second render is stable
	CHECK(render_deck(reparsed.deck) == render_deck(deck));
}

TEST_CASE("load_parameters reads the header layout") {
	ScopedDir dir("params");
	auto path = dir.file("params.csv",
	                     "nps,seed,beam_pos_z,density\n600000,10,-50,3.84615e-06\n");
	ParameterSet params = load_parameters(path);
	REQUIRE(params.entries.size() == 4);
	CHECK(*params.find("nps") == "600000");
	CHECK(*params.find("seed") == "10");
	CHECK(*params.find("beam_pos_z") == "-50");
	CHECK(*params.find("density") == "3.84615e-06");
	CHECK(params.entries[0].first == "nps");
	CHECK(params.entries[3].first == "density");
}

TEST_CASE("load_parameters reads name,value rows") {
	ScopedDir dir("params");
	auto path = dir.file("pairs.csv", "nps,600000\nseed,10\n");
	ParameterSet params = load_parameters(path);
	REQUIRE(params.entries.size() == 2);
	CHECK(*params.find("nps") == "600000");
	CHECK(*params.find("seed") == "10");
}

TEST_CASE("load_parameters error paths") {
	ScopedDir dir("params");
	CHECK_THROWS_AS(load_parameters(dir.path() / "missing.csv"), McError);
	try {
		load_parameters(dir.path() / "missing.csv");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::missing_file);
	}

	auto dup = dir.file("dup.csv", "nps,1\nnps,2\n");
	try {
		load_parameters(dup);
		FAIL("expected duplicate_name");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::duplicate_name);
	}

	auto empty = dir.file("empty.csv", "\n\n");
	try {
		load_parameters(empty);
		FAIL("expected empty_csv");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::empty_csv);
	}
}

TEST_CASE("substitute binds placeholders in card fields and directives") {
	std::string text =
	    "@mock_emin={E_min}\n"
	    "* untouched {E_min} comment\n"
	    "BEAMPOS {beam_pos_z} 0.0 0.93 0.0\n"
	    "RANDOMIZ 1.0 {seed}\n"
	    "START {nps}\n";
	ParsedDeck tmpl = parse_deck(text);
	ParameterSet params;
	params.set("E_min", "1e-9");
	params.set("beam_pos_z", "-50");
	params.set("seed", "10");
	params.set("nps", "600000");
	params.set("spare", "unused");

	SubstitutionResult sub = substitute(tmpl.deck, params);
	CHECK(sub.deck.lines[0].text == "@mock_emin=1e-9");
	CHECK(sub.deck.lines[1].text == "* untouched {E_min} comment");
	CHECK(std::get<double>(*sub.deck.lines[2].card.whats[0]) == -50.0);
	CHECK(std::get<double>(*sub.deck.lines[3].card.whats[1]) == 10.0);
	CHECK(std::get<double>(*sub.deck.lines[4].card.whats[0]) == 600000.0);
	REQUIRE(sub.warnings.size() == 1);
	CHECK(sub.warnings[0] == "unused parameter: spare");

	// idempotence
	SubstitutionResult again = substitute(sub.deck, params);
	CHECK(again.deck == sub.deck);
}

TEST_CASE("substitute rejects unbound placeholders by name") {
	ParsedDeck tmpl = parse_deck("START {nps}\n");
	ParameterSet params;
	params.set("seed", "1");
	try {
		substitute(tmpl.deck, params);
		FAIL("expected unbound_placeholder");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::unbound_placeholder);
		CHECK(std::string(e.what()).find("{nps}") != std::string::npos);
	}
}

TEST_CASE("generate_cycles writes one deck per seed") {
	ScopedDir dir("cycles");
	std::string text =
	    "TITLE\n"
	    "BEAMPOS {beam_pos_z} 0.0 0.93 0.0\n"
	    "RANDOMIZ 1.0 {seed}\n"
	    "START {nps}\n"
	    "STOP\n";
	ParsedDeck tmpl = parse_deck(text);
	ParameterSet params;
	params.set("beam_pos_z", "-50");
	params.set("seed", "10");
	params.set("nps", "600000");

	CyclePlan plan;
	plan.prefix = "example";
	plan.count = 5;
	plan.base_seed = 10;
	plan.output_dir = dir.path();

	auto files = generate_cycles(tmpl.deck, params, plan);
	REQUIRE(files.size() == 5);
	CHECK(files[0].filename() == "example_01.inp");
	CHECK(files[4].filename() == "example_05.inp");

	std::vector<std::string> contents;
	for (const auto& f : files) contents.push_back(read_file(f));

	for (int i = 0; i < 5; ++i) {
		ParsedDeck cycle = parse_deck(contents[static_cast<std::size_t>(i)]);
		const Card* rnd = cycle.deck.find_card("RANDOMIZ");
		REQUIRE(rnd != nullptr);
		CHECK(std::get<double>(*rnd->whats[1]) == 10.0 + i);
	}

	// cycles differ only in the seed field
	auto lines_a = split_lines(contents[0]);
	auto lines_b = split_lines(contents[4]);
	REQUIRE(lines_a.size() == lines_b.size());
	int differing = 0;
	for (std::size_t i = 0; i < lines_a.size(); ++i) {
		if (lines_a[i] != lines_b[i]) {
			++differing;
			CHECK(lines_a[i].find("RANDOMIZ") == 0);
		}
	}
	CHECK(differing == 1);
}

TEST_CASE("generate_cycles demands a seed placeholder") {
	ScopedDir dir("cycles");
	ParsedDeck tmpl = parse_deck("START {nps}\nSTOP\n");
	ParameterSet params;
	params.set("nps", "1000");
	CyclePlan plan;
	plan.prefix = "x";
	plan.count = 1;
	plan.output_dir = dir.path();
	try {
		generate_cycles(tmpl.deck, params, plan);
		FAIL("expected missing_seed_placeholder");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::missing_seed_placeholder);
	}
}
