#include "mcforge/util.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mcforge/errors.hpp"

namespace mcforge {

namespace {

constexpr std::string_view kWs = " \t\r\n\f\v";

} // namespace

std::string_view ltrim(std::string_view s) {
	auto pos = s.find_first_not_of(kWs);
	return pos == std::string_view::npos ? std::string_view{} : s.substr(pos);
}

std::string_view rtrim(std::string_view s) {
	auto pos = s.find_last_not_of(kWs);
	return pos == std::string_view::npos ? std::string_view{} : s.substr(0, pos + 1);
}

std::string_view trim(std::string_view s) { return rtrim(ltrim(s)); }

std::vector<std::string> split(std::string_view s, char sep) {
	std::vector<std::string> out;
	std::size_t start = 0;
	while (true) {
		auto pos = s.find(sep, start);
		if (pos == std::string_view::npos) {
			out.emplace_back(s.substr(start));
			break;
		}
		out.emplace_back(s.substr(start, pos - start));
		start = pos + 1;
	}
	return out;
}

std::vector<std::string> split_ws(std::string_view s) {
	std::vector<std::string> out;
	std::size_t i = 0;
	while (i < s.size()) {
		while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
		std::size_t j = i;
		while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
		if (j > i) out.emplace_back(s.substr(i, j - i));
		i = j;
	}
	return out;
}

std::vector<std::string> split_lines(std::string_view text) {
	std::vector<std::string> out;
	std::size_t start = 0;
	while (start <= text.size()) {
		auto pos = text.find('\n', start);
		if (pos == std::string_view::npos) {
			if (start < text.size()) out.emplace_back(text.substr(start));
			break;
		}
		std::string_view line = text.substr(start, pos - start);
		if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
		out.emplace_back(line);
		start = pos + 1;
	}
	return out;
}

std::string to_lower(std::string_view s) {
	std::string out(s);
	for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
	return out;
}

bool iequals(std::string_view a, std::string_view b) {
	if (a.size() != b.size()) return false;
	for (std::size_t i = 0; i < a.size(); ++i) {
		if (std::tolower(static_cast<unsigned char>(a[i])) !=
		    std::tolower(static_cast<unsigned char>(b[i])))
			return false;
	}
	return true;
}

std::optional<double> parse_number(std::string_view token) {
	if (token.empty()) return std::nullopt;
	if (token.front() == '+') token.remove_prefix(1);
	if (token.empty()) return std::nullopt;
	// from_chars would happily accept "inf"/"nan"; those are tokens here.
	char first = token.front() == '-' && token.size() > 1 ? token[1] : token.front();
	if (!(std::isdigit(static_cast<unsigned char>(first)) || first == '.')) return std::nullopt;
	double value = 0;
	auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
	if (ec != std::errc{}) return std::nullopt;
	std::string_view rest = token.substr(static_cast<std::size_t>(ptr - token.data()));
	// Fortran-style trailing dot ("46.") is already consumed by from_chars;
	// anything else left over means the token is not purely numeric.
	if (!rest.empty()) return std::nullopt;
	if (!std::isfinite(value)) return std::nullopt;
	return value;
}

std::string read_file(const std::filesystem::path& path) {
	std::error_code ec;
	if (!std::filesystem::exists(path, ec))
		raise(Errc::missing_file, "no such file: " + path.string());
	std::ifstream in(path, std::ios::binary);
	if (!in) raise(Errc::io_error, "cannot open " + path.string());
	std::ostringstream ss;
	ss << in.rdbuf();
	if (in.bad()) raise(Errc::io_error, "read failed: " + path.string());
	return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
	std::ofstream out(path, std::ios::binary | std::ios::trunc);
	if (!out) raise(Errc::io_error, "cannot open for write: " + path.string());
	out.write(content.data(), static_cast<std::streamsize>(content.size()));
	out.flush();
	if (!out) raise(Errc::io_error, "write failed: " + path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
	auto tmp = path;
	tmp += ".tmp";
	write_file(tmp, content);
	std::error_code ec;
	std::filesystem::rename(tmp, path, ec);
	if (ec) raise(Errc::io_error, "rename failed: " + path.string() + ": " + ec.message());
}

namespace {

// Compact SHA-256, FIPS 180-4.  Used for content-addressed document ids.
struct Sha256 {
	std::array<std::uint32_t, 8> h{0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
	                               0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
	std::array<std::uint8_t, 64> block{};
	std::size_t block_len = 0;
	std::uint64_t total = 0;

	static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

	void compress(const std::uint8_t* p) {
		static constexpr std::uint32_t k[64] = {
		    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
		    0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
		    0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
		    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
		    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
		    0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
		    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
		    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
		    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
		    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
		    0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
		std::uint32_t w[64];
		for (int i = 0; i < 16; ++i)
			w[i] = std::uint32_t(p[i * 4]) << 24 | std::uint32_t(p[i * 4 + 1]) << 16 |
			       std::uint32_t(p[i * 4 + 2]) << 8 | std::uint32_t(p[i * 4 + 3]);
		for (int i = 16; i < 64; ++i) {
			std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
			std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
			w[i] = w[i - 16] + s0 + w[i - 7] + s1;
		}
		auto a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], hh = h[7];
		for (int i = 0; i < 64; ++i) {
			std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
			std::uint32_t ch = (e & f) ^ (~e & g);
			std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
			std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
			std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
			std::uint32_t t2 = s0 + maj;
			hh = g; g = f; f = e; e = d + t1;
			d = c; c = b; b = a; a = t1 + t2;
		}
		h[0] += a; h[1] += b; h[2] += c; h[3] += d;
		h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
	}

	void update(const std::uint8_t* data, std::size_t len) {
		total += len;
		while (len > 0) {
			std::size_t take = std::min(len, block.size() - block_len);
			std::memcpy(block.data() + block_len, data, take);
			block_len += take;
			data += take;
			len -= take;
			if (block_len == block.size()) {
				compress(block.data());
				block_len = 0;
			}
		}
	}

	std::string hex() {
		std::uint64_t bits = total * 8;
		std::uint8_t pad = 0x80;
		update(&pad, 1);
		std::uint8_t zero = 0;
		while (block_len != 56) update(&zero, 1);
		std::uint8_t lenb[8];
		for (int i = 0; i < 8; ++i) lenb[i] = std::uint8_t(bits >> (56 - 8 * i));
		update(lenb, 8);
		char out[65];
		for (int i = 0; i < 8; ++i) std::snprintf(out + i * 8, 9, "%08x", h[i]);
		return std::string(out, 64);
	}
};

} // namespace

std::string sha256_hex(std::string_view data) {
	Sha256 s;
	s.update(reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
	return s.hex();
}

std::uint64_t splitmix64(std::uint64_t x) {
	x += 0x9e3779b97f4a7c15ull;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
	return x ^ (x >> 31);
}

double hash_uniform(std::uint64_t x) {
	std::uint64_t m = splitmix64(x);
	return (static_cast<double>(m >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double hash_gaussian(std::uint64_t x) {
	double u1 = hash_uniform(x);
	double u2 = hash_uniform(splitmix64(x ^ 0xda3e39cb94b95bdbull));
	return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

} // namespace mcforge
