#include "mcforge/assistant.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "httplib.h"
#include "json.hpp"
#include "mcforge/errors.hpp"
#include "mcforge/util.hpp"

namespace mcforge {

namespace {

constexpr std::string_view kManifestName = "manifest.json";
constexpr std::string_view kVectorsName = "vectors.jsonl";

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

httplib::Client make_client(const Endpoint& ep, const char* key_var) {
	httplib::Client client(ep.base);
	client.set_connection_timeout(10, 0);
	client.set_read_timeout(120, 0);
	if (const char* key = std::getenv(key_var))
		client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});
	return client;
}

nlohmann::json post_json(httplib::Client& client, const Endpoint& ep, const std::string& url,
                         const nlohmann::json& request) {
	auto res = client.Post(ep.path, request.dump(), "application/json");
	if (!res) raise(Errc::provider_error, "no response from " + url);
	if (res->status != 200)
		raise(Errc::provider_error,
		      "endpoint returned " + std::to_string(res->status) + ": " + res->body);
	nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
	if (reply.is_discarded())
		raise(Errc::provider_error, "malformed reply from " + url);
	return reply;
}

void check_policy(const ChunkPolicy& policy) {
	if (policy.chunk_size == 0)
		raise(Errc::bad_config, "chunk_size must be positive");
	if (policy.overlap >= policy.chunk_size)
		raise(Errc::bad_config, "chunk overlap must be smaller than the chunk size");
}

bool is_word_char(char c) {
	return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

/// Exclusive advisory lock on <store>/.lock for the duration of an ingest.
struct StoreLock {
	int fd = -1;

	explicit StoreLock(const std::filesystem::path& dir) {
		std::filesystem::create_directories(dir);
		fd = ::open((dir / ".lock").c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
		if (fd < 0) raise(Errc::io_error, "cannot open lock file under " + dir.string());
		if (::flock(fd, LOCK_EX) != 0) {
			::close(fd);
			fd = -1;
			raise(Errc::io_error, "cannot lock store directory " + dir.string());
		}
	}
	~StoreLock() {
		if (fd >= 0) {
			::flock(fd, LOCK_UN);
			::close(fd);
		}
	}
	StoreLock(const StoreLock&) = delete;
	StoreLock& operator=(const StoreLock&) = delete;
};

void replace_all(std::string& text, std::string_view what, const std::string& with) {
	std::size_t pos = 0;
	while ((pos = text.find(what, pos)) != std::string::npos) {
		text.replace(pos, what.size(), with);
		pos += with.size();
	}
}

std::string quoted_path(const std::filesystem::path& p) {
	return "\"" + p.string() + "\"";
}

std::string extract_text(const std::filesystem::path& file, const std::string& command) {
	if (command.empty())
		raise(Errc::extraction_failed,
		      "no text extraction command configured for " + file.filename().string());

	static std::atomic<unsigned> counter{0};
	auto scratch = std::filesystem::temp_directory_path() /
	               ("mcforge_extract_" + std::to_string(::getpid()) + "_" +
	                std::to_string(counter++) + ".txt");

	std::string cmd = command;
	bool explicit_output = cmd.find("{output}") != std::string::npos;
	replace_all(cmd, "{input}", quoted_path(file));
	replace_all(cmd, "{output}", quoted_path(scratch));
	if (!explicit_output) cmd += " > " + quoted_path(scratch);

	int rc = std::system(cmd.c_str());
	if (rc != 0 || !std::filesystem::exists(scratch)) {
		std::error_code ec;
		std::filesystem::remove(scratch, ec);
		raise(Errc::extraction_failed,
		      "extraction command failed for " + file.filename().string());
	}
	std::string text = read_file(scratch);
	std::error_code ec;
	std::filesystem::remove(scratch, ec);
	return text;
}

bool chunk_key_less(const EmbeddedChunk& a, const EmbeddedChunk& b) {
	if (a.chunk.doc_id != b.chunk.doc_id) return a.chunk.doc_id < b.chunk.doc_id;
	return a.chunk.chunk_index < b.chunk.chunk_index;
}

} // namespace

// ---------------------------------------------------------------- chunking

std::vector<MathSpan> find_math_spans(std::string_view text) {
	std::vector<MathSpan> spans;
	const std::size_t n = text.size();
	std::size_t i = 0;
	while (i < n) {
		char c = text[i];
		if (c == '\\') {
			std::string_view rest = text.substr(i);
			if (rest.starts_with("\\begin{equation}")) {
				auto end = text.find("\\end{equation}", i + 16);
				if (end != std::string_view::npos) {
					spans.push_back({i, end + 14});
					i = end + 14;
					continue;
				}
			} else if (rest.starts_with("\\[")) {
				auto end = text.find("\\]", i + 2);
				if (end != std::string_view::npos) {
					spans.push_back({i, end + 2});
					i = end + 2;
					continue;
				}
			} else if (rest.starts_with("\\(")) {
				auto end = text.find("\\)", i + 2);
				if (end != std::string_view::npos) {
					spans.push_back({i, end + 2});
					i = end + 2;
					continue;
				}
			}
			i += 2; // escaped character; \$ in particular stays literal
			continue;
		}
		if (c == '$') {
			if (i + 1 < n && text[i + 1] == '$') {
				auto end = text.find("$$", i + 2);
				if (end != std::string_view::npos) {
					spans.push_back({i, end + 2});
					i = end + 2;
					continue;
				}
				i += 2;
				continue;
			}
			std::size_t j = i + 1;
			while (j < n && !(text[j] == '$' && text[j - 1] != '\\')) ++j;
			if (j < n && j > i + 1) {
				spans.push_back({i, j + 1});
				i = j + 1;
				continue;
			}
			++i;
			continue;
		}
		++i;
	}
	return spans;
}

std::vector<DocumentChunk> chunk_document(const std::string& text, const ChunkPolicy& policy) {
	check_policy(policy);
	const std::vector<MathSpan> spans = find_math_spans(text);
	const std::size_t len = text.size();

	std::vector<DocumentChunk> out;
	std::size_t start = 0;
	int index = 0;
	while (start < len) {
		std::size_t end = std::min(start + policy.chunk_size, len);
		std::size_t next = end >= policy.overlap ? end - policy.overlap : 0;
		if (end < len) {
			for (const MathSpan& s : spans) {
				if (s.start >= end) break;
				std::size_t span_len = s.end - s.start;
				if (s.start > start && s.end > end && span_len < policy.chunk_size) {
					end = s.start;
					next = s.start - std::min(policy.overlap, policy.chunk_size - span_len);
					break;
				}
			}
		}

		DocumentChunk chunk;
		chunk.chunk_index = index++;
		chunk.start = start;
		chunk.end = end;
		chunk.text = text.substr(start, end - start);
		for (const MathSpan& s : spans)
			if (s.start >= start && s.end <= end) chunk.math.push_back(s);
		out.push_back(std::move(chunk));

		if (end >= len) break;
		start = next;
	}
	return out;
}

// --------------------------------------------------------------- embedding

HashedBowEmbedder::HashedBowEmbedder(std::size_t dimension) : dimension_(dimension) {
	if (dimension_ == 0) raise(Errc::bad_config, "embedding dimension must be positive");
}

std::string HashedBowEmbedder::id() const {
	return "hash/" + std::to_string(dimension_);
}

std::vector<double> HashedBowEmbedder::embed(const std::string& text) const {
	std::vector<double> v(dimension_, 0.0);
	const std::size_t n = text.size();
	std::size_t i = 0;
	while (i < n) {
		if (!is_word_char(text[i])) {
			++i;
			continue;
		}
		std::uint64_t h = 1469598103934665603ULL; // FNV-1a over the lowercased token
		while (i < n && is_word_char(text[i])) {
			char c = text[i];
			if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
			h ^= static_cast<unsigned char>(c);
			h *= 1099511628211ULL;
			++i;
		}
		h = splitmix64(h);
		v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
	}

	double norm2 = 0;
	for (double x : v) norm2 += x * x;
	if (norm2 == 0) {
		v[0] = 1.0; // tokenless text still gets a unit vector
		return v;
	}
	const double inv = 1.0 / std::sqrt(norm2);
	for (double& x : v) x *= inv;
	return v;
}

HttpEmbedder::HttpEmbedder(std::string endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {}

std::string HttpEmbedder::id() const {
	return "http/" + model_ + "@" + endpoint_;
}

std::vector<double> HttpEmbedder::embed(const std::string& text) const {
	Endpoint ep = split_endpoint(endpoint_);
	httplib::Client client = make_client(ep, "MCFORGE_EMBED_KEY");
	nlohmann::json reply =
	    post_json(client, ep, endpoint_, {{"model", model_}, {"input", text}});

	if (!reply.contains("data") || !reply["data"].is_array() || reply["data"].empty() ||
	    !reply["data"][0].contains("embedding") || !reply["data"][0]["embedding"].is_array())
		raise(Errc::provider_error, "reply from " + endpoint_ + " carries no embedding");

	std::vector<double> v = reply["data"][0]["embedding"].get<std::vector<double>>();
	if (v.empty()) raise(Errc::provider_error, "empty embedding from " + endpoint_);
	double norm2 = 0;
	for (double x : v) norm2 += x * x;
	if (norm2 > 0) {
		const double inv = 1.0 / std::sqrt(norm2);
		for (double& x : v) x *= inv;
	}
	return v;
}

std::unique_ptr<Embedder> make_embedder(const std::string& provider, const std::string& endpoint,
                                        const std::string& model) {
	if (provider == "hash") return std::make_unique<HashedBowEmbedder>();
	if (provider == "http") {
		if (endpoint.empty())
			raise(Errc::bad_config, "the http embedder needs an embedding endpoint");
		return std::make_unique<HttpEmbedder>(endpoint, model);
	}
	raise(Errc::bad_config, "unknown embedding provider '" + provider + "'");
}

// ------------------------------------------------------------------- store

VectorStore::VectorStore(std::filesystem::path dir) : dir_(std::move(dir)) {
	auto manifest_path = dir_ / kManifestName;
	if (!std::filesystem::exists(manifest_path)) return;

	nlohmann::json m = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
	if (m.is_discarded() || !m.is_object())
		raise(Errc::io_error, "malformed manifest.json in " + dir_.string());
	embedder_id_ = m.value("embedder", std::string());
	const nlohmann::json documents = m.value("documents", nlohmann::json::object());
	for (const auto& [id, rec] : documents.items()) {
		DocumentRecord r;
		r.source = rec.value("source", std::string());
		r.bytes = rec.value("bytes", std::size_t{0});
		r.chunks = rec.value("chunks", 0);
		manifest_.emplace(id, std::move(r));
	}

	auto vectors_path = dir_ / kVectorsName;
	if (!std::filesystem::exists(vectors_path)) return;
	for (std::string_view line : split_lines(read_file(vectors_path))) {
		if (line.empty()) continue;
		nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
		if (j.is_discarded() || !j.is_object())
			raise(Errc::io_error, "malformed vectors.jsonl in " + dir_.string());
		EmbeddedChunk e;
		e.chunk.doc_id = j.value("doc_id", std::string());
		e.chunk.chunk_index = j.value("chunk_index", 0);
		e.chunk.text = j.value("text", std::string());
		e.chunk.start = j.value("start", std::size_t{0});
		e.chunk.end = j.value("end", std::size_t{0});
		for (const auto& sp : j.value("math", nlohmann::json::array()))
			e.chunk.math.push_back(
			    {sp.at(0).get<std::size_t>(), sp.at(1).get<std::size_t>()});
		e.vector = j.value("vector", std::vector<double>{});
		entries_.push_back(std::move(e));
	}
	std::sort(entries_.begin(), entries_.end(), chunk_key_less);
}

bool VectorStore::contains(const std::string& doc_id) const {
	return manifest_.count(doc_id) != 0;
}

void VectorStore::bind_embedder(const std::string& id) {
	if (embedder_id_.empty()) {
		embedder_id_ = id;
		return;
	}
	if (embedder_id_ != id)
		raise(Errc::bad_config, "store at " + dir_.string() + " was built with embedder " +
		                            embedder_id_ + ", not " + id);
}

void VectorStore::add_document(const std::string& doc_id, DocumentRecord record,
                               std::vector<EmbeddedChunk> chunks) {
	if (contains(doc_id))
		raise(Errc::duplicate_name, "document " + doc_id + " is already in the store");
	std::size_t dim = entries_.empty()
	                      ? (chunks.empty() ? 0 : chunks.front().vector.size())
	                      : entries_.front().vector.size();
	for (const EmbeddedChunk& e : chunks)
		if (e.vector.size() != dim)
			raise(Errc::bad_config,
			      "embedding dimension " + std::to_string(e.vector.size()) +
			          " does not match the store (" + std::to_string(dim) + ")");
	manifest_.emplace(doc_id, std::move(record));
	for (EmbeddedChunk& e : chunks) entries_.push_back(std::move(e));
	std::sort(entries_.begin(), entries_.end(), chunk_key_less);
}

void VectorStore::save() const {
	std::filesystem::create_directories(dir_);

	nlohmann::json docs = nlohmann::json::object();
	for (const auto& [id, r] : manifest_)
		docs[id] = {{"bytes", r.bytes}, {"chunks", r.chunks}, {"source", r.source}};
	nlohmann::json manifest = {
	    {"dimension", entries_.empty() ? std::size_t{0} : entries_.front().vector.size()},
	    {"embedder", embedder_id_},
	    {"documents", docs},
	};
	write_file_atomic(dir_ / kManifestName, manifest.dump(2) + "\n");

	std::string lines;
	for (const EmbeddedChunk& e : entries_) {
		nlohmann::json math = nlohmann::json::array();
		for (const MathSpan& s : e.chunk.math)
			math.push_back(nlohmann::json::array({s.start, s.end}));
		nlohmann::json j = {
		    {"doc_id", e.chunk.doc_id}, {"chunk_index", e.chunk.chunk_index},
		    {"start", e.chunk.start},   {"end", e.chunk.end},
		    {"math", math},             {"text", e.chunk.text},
		    {"vector", e.vector},
		};
		lines += j.dump() + "\n";
	}
	write_file_atomic(dir_ / kVectorsName, lines);
}

// ------------------------------------------------------------- ingestion

IngestReport ingest(const std::filesystem::path& dir, VectorStore& store,
                    const Embedder& embedder, const IngestOptions& options) {
	check_policy(options.policy);
	if (!std::filesystem::is_directory(dir))
		raise(Errc::missing_file, "document directory " + dir.string() + " does not exist");

	StoreLock lock(store.dir());
	store.bind_embedder(embedder.id());

	std::vector<std::filesystem::path> files;
	for (const auto& entry : std::filesystem::directory_iterator(dir)) {
		if (!entry.is_regular_file()) continue;
		std::string name = entry.path().filename().string();
		if (name.empty() || name.front() == '.') continue;
		files.push_back(entry.path());
	}
	std::sort(files.begin(), files.end());

	IngestReport report;
	for (const auto& file : files) {
		std::string ext = to_lower(file.extension().string());
		std::string text;
		if (ext == ".txt" || ext == ".md" || ext == ".markdown" || ext == ".text")
			text = read_file(file);
		else if (ext == ".pdf")
			text = extract_text(file, options.extract_command);
		else
			continue;

		std::string doc_id = sha256_hex(text);
		if (store.contains(doc_id)) continue;

		std::vector<DocumentChunk> chunks = chunk_document(text, options.policy);
		std::vector<EmbeddedChunk> embedded;
		embedded.reserve(chunks.size());
		for (DocumentChunk& chunk : chunks) {
			chunk.doc_id = doc_id;
			std::vector<double> vec = embedder.embed(chunk.text);
			embedded.push_back({std::move(chunk), std::move(vec)});
		}
		DocumentRecord record{file.filename().string(), text.size(),
		                      static_cast<int>(embedded.size())};
		store.add_document(doc_id, std::move(record), std::move(embedded));
		++report.new_documents;
		report.new_chunks += static_cast<int>(chunks.size());
	}

	if (report.new_documents > 0) store.save();
	return report;
}

// ------------------------------------------------------------- retrieval

std::vector<ScoredChunk> retrieve(const std::string& query, const VectorStore& store,
                                  const Embedder& embedder, std::size_t k) {
	if (store.size() == 0)
		raise(Errc::empty_store, "vector store at " + store.dir().string() +
		                             " holds no chunks; ingest documents first");
	if (!store.embedder_id().empty() && store.embedder_id() != embedder.id())
		raise(Errc::bad_config, "store at " + store.dir().string() +
		                            " was built with embedder " + store.embedder_id() +
		                            ", not " + embedder.id());

	const std::vector<double> qv = embedder.embed(query);
	const auto& entries = store.entries();
	if (qv.size() != entries.front().vector.size())
		raise(Errc::bad_config,
		      "query embedding has dimension " + std::to_string(qv.size()) +
		          " but the store holds " + std::to_string(entries.front().vector.size()));

	std::vector<std::pair<double, std::size_t>> ranked;
	ranked.reserve(entries.size());
	for (std::size_t i = 0; i < entries.size(); ++i) {
		double dot = 0;
		const auto& v = entries[i].vector;
		for (std::size_t d = 0; d < v.size(); ++d) dot += qv[d] * v[d];
		ranked.emplace_back(dot, i);
	}
	std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
		if (a.first != b.first) return a.first > b.first;
		return chunk_key_less(entries[a.second], entries[b.second]);
	});

	std::vector<ScoredChunk> out;
	out.reserve(std::min(k, ranked.size()));
	for (std::size_t i = 0; i < ranked.size() && i < k; ++i)
		out.push_back({entries[ranked[i].second].chunk, ranked[i].first});
	return out;
}

// ---------------------------------------------------------------- answers

HttpChatProvider::HttpChatProvider(std::string endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {}

std::string HttpChatProvider::complete(const std::vector<ChatMessage>& messages) const {
	nlohmann::json payload = nlohmann::json::array();
	for (const ChatMessage& m : messages)
		payload.push_back({{"role", m.role}, {"content", m.content}});

	Endpoint ep = split_endpoint(endpoint_);
	httplib::Client client = make_client(ep, "MCFORGE_API_KEY");
	nlohmann::json reply =
	    post_json(client, ep, endpoint_, {{"model", model_}, {"messages", payload}});

	if (!reply.contains("choices") || !reply["choices"].is_array() ||
	    reply["choices"].empty() || !reply["choices"][0].contains("message") ||
	    !reply["choices"][0]["message"].contains("content") ||
	    !reply["choices"][0]["message"]["content"].is_string())
		raise(Errc::provider_error, "malformed completion from " + endpoint_);
	return reply["choices"][0]["message"]["content"].get<std::string>();
}

std::string EchoChatProvider::complete(const std::vector<ChatMessage>& messages) const {
	std::string out;
	for (const ChatMessage& m : messages) out += m.role + ": " + m.content + "\n";
	return out;
}

Answer answer(const std::string& question, const VectorStore& store, const Embedder& embedder,
              const ChatProvider& chat, Conversation& memory, std::size_t k) {
	std::vector<ScoredChunk> hits = retrieve(question, store, embedder, k);

	Answer ans;
	std::string context;
	for (const ScoredChunk& hit : hits) {
		std::string id = hit.chunk.doc_id + ":" + std::to_string(hit.chunk.chunk_index);
		context += "[" + id + "]\n" + hit.chunk.text + "\n\n";
		ans.cited.push_back(std::move(id));
	}

	std::vector<ChatMessage> messages;
	messages.push_back(
	    {"system", "You answer questions about the user's documents. Ground every answer "
	               "in the context below and cite chunk ids in square brackets.\n\n"
	               "Context:\n" +
	                   context});
	for (const auto& [q, a] : memory.turns) {
		messages.push_back({"user", q});
		messages.push_back({"assistant", a});
	}
	messages.push_back({"user", question});

	ans.text = chat.complete(messages);
	memory.turns.emplace_back(question, ans.text);
	return ans;
}

} // namespace mcforge
