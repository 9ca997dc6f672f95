#include "mcforge/mock_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mcforge/errors.hpp"
#include "mcforge/util.hpp"

namespace mcforge {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'F', 'K'};
constexpr std::uint8_t kVersion = 1;

const char* kScoringCards[] = {"USRBDX", "USRTRACK", "USRBIN", "RESNUCLE", "USRYIELD"};

std::optional<double> numeric_what(const Card& card, std::size_t index) {
	if (index >= card.whats.size() || !card.whats[index]) return std::nullopt;
	if (const double* v = std::get_if<double>(&*card.whats[index])) return *v;
	return std::nullopt;
}

std::optional<std::string> directive_value(const InputDeck& deck, std::string_view name) {
	std::string prefix = "@" + std::string(name) + "=";
	for (const DeckLine& line : deck.lines) {
		if (line.kind != LineKind::directive) continue;
		std::string_view text = trim(line.text);
		if (text.starts_with(prefix)) return std::string(text.substr(prefix.size()));
	}
	return std::nullopt;
}

std::optional<double> directive_number(const InputDeck& deck, std::string_view name) {
	if (auto text = directive_value(deck, name)) return parse_number(*text);
	return std::nullopt;
}

void append_u32(std::string& buf, std::uint32_t v) {
	for (int i = 0; i < 4; ++i) buf += static_cast<char>((v >> (8 * i)) & 0xff);
}

void append_u64(std::string& buf, std::uint64_t v) {
	for (int i = 0; i < 8; ++i) buf += static_cast<char>((v >> (8 * i)) & 0xff);
}

void append_f64(std::string& buf, double v) {
	std::uint64_t bits;
	std::memcpy(&bits, &v, 8);
	append_u64(buf, bits);
}

struct Reader {
	const std::string& data;
	std::size_t pos = 0;
	const std::string& path;

	void need(std::size_t n) {
		if (pos + n > data.size())
			raise(Errc::io_error, "truncated container: " + path);
	}
	std::uint32_t u32() {
		need(4);
		std::uint32_t v = 0;
		for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(data[pos + i])) << (8 * i);
		pos += 4;
		return v;
	}
	std::uint64_t u64() {
		need(8);
		std::uint64_t v = 0;
		for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(data[pos + i])) << (8 * i);
		pos += 8;
		return v;
	}
	double f64() {
		std::uint64_t bits = u64();
		double v;
		std::memcpy(&v, &bits, 8);
		return v;
	}
	std::string bytes(std::size_t n) {
		need(n);
		std::string s = data.substr(pos, n);
		pos += n;
		return s;
	}
};

} // namespace

std::vector<ScoringUnit> scoring_units(const InputDeck& deck) {
	std::vector<ScoringUnit> units;
	auto add = [&](std::uint32_t unit, const Card& card) {
		for (const ScoringUnit& u : units)
			if (u.unit == unit) return;
		ScoringUnit su;
		su.unit = unit;
		su.card = card.keyword;
		su.detector = card.sdum.value_or("det_u" + std::to_string(unit));
		units.push_back(std::move(su));
	};
	for (const DeckLine& line : deck.lines) {
		if (line.kind != LineKind::card) continue;
		const Card& card = line.card;
		if (card.keyword == "DETECT") {
			add(17, card);
			continue;
		}
		bool scoring = std::any_of(std::begin(kScoringCards), std::end(kScoringCards),
		                           [&](const char* kw) { return card.keyword == kw; });
		if (!scoring) continue;
		auto what3 = numeric_what(card, 2);
		if (!what3) continue;
		double unit = std::abs(*what3);
		if (unit != std::floor(unit) || unit < 17 || unit > 99) continue;
		add(static_cast<std::uint32_t>(unit), card);
	}
	return units;
}

MockEngineSpec mock_spec_from_deck(const InputDeck& deck) {
	MockEngineSpec spec;
	if (auto v = directive_number(deck, "mock_peak")) spec.peak_energy = *v;
	if (auto v = directive_number(deck, "mock_width")) spec.relative_width = *v;
	if (auto v = directive_number(deck, "mock_bins")) spec.bins = static_cast<int>(*v);
	if (auto v = directive_number(deck, "mock_emin")) spec.emin = *v;
	if (auto v = directive_number(deck, "mock_emax")) spec.emax = *v;
	if (auto v = directive_number(deck, "mock_err_ref")) spec.err_ref_pct = *v;
	if (auto v = directive_number(deck, "mock_err_ref_nps")) spec.err_ref_nps = *v;
	return spec;
}

std::uint64_t deck_nps(const InputDeck& deck) {
	const Card* start = deck.find_card("START");
	if (!start) raise(Errc::missing_start_card, "deck has no START card");
	auto nps = numeric_what(*start, 0);
	if (!nps || *nps <= 0)
		raise(Errc::missing_start_card, "START card carries no usable primary count");
	return static_cast<std::uint64_t>(*nps);
}

long long deck_seed(const InputDeck& deck) {
	const Card* rnd = deck.find_card("RANDOMIZ");
	if (!rnd) return 1;
	auto seed = numeric_what(*rnd, 1);
	return seed ? static_cast<long long>(*seed) : 1;
}

std::vector<std::filesystem::path> mock_simulate(const InputDeck& deck,
                                                 const MockEngineSpec& spec,
                                                 const std::filesystem::path& out_dir,
                                                 const std::string& out_base) {
	std::uint64_t nps = deck_nps(deck);
	long long seed = deck_seed(deck);
	std::vector<ScoringUnit> units = scoring_units(deck);

	double peak = spec.peak_energy;
	double sigma = spec.relative_width * peak;
	double emin = spec.emin > 0 ? spec.emin : std::max(peak * 1e-3, peak - 5 * sigma);
	double emax = spec.emax > emin ? spec.emax : peak + 5 * sigma;
	int nbins = std::max(spec.bins, 1);
	double step = (emax - emin) / nbins;

	std::vector<std::filesystem::path> outputs;
	for (const ScoringUnit& unit : units) {
		MockContainer container;
		container.unit = unit.unit;
		container.card = unit.card;
		container.detector = unit.detector;
		container.nps = nps;

		std::vector<double> weights(static_cast<std::size_t>(nbins));
		double total = 0;
		for (int i = 0; i < nbins; ++i) {
			double mid = emin + step * (i + 0.5);
			double z = (mid - peak) / sigma;
			weights[static_cast<std::size_t>(i)] = std::exp(-0.5 * z * z);
			total += weights[static_cast<std::size_t>(i)];
		}
		double flat_rel = 0;
		if (spec.err_ref_pct)
			flat_rel = (*spec.err_ref_pct / 100.0) *
			           std::sqrt(spec.err_ref_nps / static_cast<double>(nps));
		for (int i = 0; i < nbins; ++i) {
			double expected =
			    static_cast<double>(nps) * 0.2 * weights[static_cast<std::size_t>(i)] / total;
			double rel;
			if (spec.err_ref_pct)
				rel = flat_rel;
			else
				rel = expected > 1.0 ? 1.0 / std::sqrt(expected) : 1.0;
			std::uint64_t key = splitmix64(static_cast<std::uint64_t>(seed) ^
			                               (std::uint64_t(unit.unit) * 0x9e3779b97f4a7c15ull));
			key = splitmix64(key ^ (std::uint64_t(i) * 0xc2b2ae3d27d4eb4full));
			double noise = hash_gaussian(key);
			MockBin bin;
			bin.elow = emin + step * i;
			bin.ehigh = emin + step * (i + 1);
			bin.value = std::max(0.0, expected * (1.0 + rel * noise));
			bin.err_pct = std::min(100.0, rel * 100.0);
			container.bins.push_back(bin);
		}

		std::filesystem::path out =
		    out_dir / (out_base + "_fort." + std::to_string(unit.unit));
		write_container(out, container);
		outputs.push_back(out);
	}
	return outputs;
}

std::vector<std::filesystem::path> mock_run_input_file(const std::filesystem::path& input) {
	ParsedDeck parsed = parse_deck(read_file(input));
	MockEngineSpec spec = mock_spec_from_deck(parsed.deck);
	// transport codes append the run number to the input stem: <stem>001_fort.xx
	std::string base = input.stem().string() + "001";
	std::filesystem::path dir = input.parent_path();
	if (dir.empty()) dir = ".";
	return mock_simulate(parsed.deck, spec, dir, base);
}

void write_container(const std::filesystem::path& path, const MockContainer& container) {
	std::string buf;
	buf.append(kMagic, 4);
	buf += static_cast<char>(kVersion);

	std::string meta;
	meta += 'M';
	append_u32(meta, container.unit);
	append_u64(meta, container.nps);
	append_u32(meta, static_cast<std::uint32_t>(container.card.size()));
	meta += container.card;
	append_u32(meta, static_cast<std::uint32_t>(container.detector.size()));
	meta += container.detector;
	append_u32(buf, static_cast<std::uint32_t>(meta.size()));
	buf += meta;

	for (const MockBin& bin : container.bins) {
		std::string record;
		record += 'B';
		append_f64(record, bin.elow);
		append_f64(record, bin.ehigh);
		append_f64(record, bin.value);
		append_f64(record, bin.err_pct);
		append_u32(buf, static_cast<std::uint32_t>(record.size()));
		buf += record;
	}
	write_file(path, buf);
}

MockContainer read_container(const std::filesystem::path& path) {
	std::string data = read_file(path);
	std::string path_str = path.string();
	Reader r{data, 0, path_str};
	if (r.bytes(4) != std::string(kMagic, 4))
		raise(Errc::io_error, "not a mock container: " + path_str);
	if (r.bytes(1)[0] != static_cast<char>(kVersion))
		raise(Errc::io_error, "unsupported container version: " + path_str);

	MockContainer container;
	while (r.pos < data.size()) {
		std::uint32_t len = r.u32();
		std::size_t end = r.pos + len;
		std::string tag = r.bytes(1);
		if (tag[0] == 'M') {
			container.unit = r.u32();
			container.nps = r.u64();
			container.card = r.bytes(r.u32());
			container.detector = r.bytes(r.u32());
		} else if (tag[0] == 'B') {
			MockBin bin;
			bin.elow = r.f64();
			bin.ehigh = r.f64();
			bin.value = r.f64();
			bin.err_pct = r.f64();
			container.bins.push_back(bin);
		}
		r.pos = end; // unknown record types are skipped
	}
	return container;
}

MockContainer merge_containers(const std::vector<MockContainer>& cycles) {
	if (cycles.empty()) raise(Errc::io_error, "no cycles to merge");
	MockContainer merged = cycles.front();
	std::size_t n = cycles.size();
	for (std::size_t c = 1; c < n; ++c) {
		const MockContainer& cur = cycles[c];
		if (cur.unit != merged.unit || cur.card != merged.card ||
		    cur.bins.size() != merged.bins.size())
			raise(Errc::io_error, "cycle containers disagree on unit/card/binning");
		merged.nps += cur.nps;
	}
	for (std::size_t i = 0; i < merged.bins.size(); ++i) {
		double value = 0, err2 = 0;
		for (const MockContainer& cur : cycles) {
			value += cur.bins[i].value;
			err2 += cur.bins[i].err_pct * cur.bins[i].err_pct;
		}
		merged.bins[i].value = value / static_cast<double>(n);
		merged.bins[i].err_pct = std::sqrt(err2) / static_cast<double>(n);
	}
	return merged;
}

} // namespace mcforge
